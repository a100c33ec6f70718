#include "ncsbp/semidiscretization.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ncsbp {

std::string to_string(SchemeMode mode) {
  return mode == SchemeMode::kEntropyConservative ? "ec" : "es";
}

SchemeMode scheme_mode_from_string(const std::string& name) {
  if (name == "ec" || name == "entropy-conservative") {
    return SchemeMode::kEntropyConservative;
  }
  if (name == "es" || name == "entropy-stable") {
    return SchemeMode::kEntropyStable;
  }
  throw std::invalid_argument("unknown scheme mode '" + name + "'");
}

std::string to_string(DissipationKind kind) {
  return kind == DissipationKind::kMatrix ? "matrix" : "scalar";
}

DissipationKind dissipation_kind_from_string(const std::string& name) {
  if (name == "scalar") {
    return DissipationKind::kScalar;
  }
  if (name == "matrix") {
    return DissipationKind::kMatrix;
  }
  throw std::invalid_argument("unknown dissipation kind '" + name + "'");
}

SchemeConfig SchemeConfig::effective() const {
  SchemeConfig c = *this;
  if (c.mode == SchemeMode::kEntropyConservative) {
    c.interface_dissipation = false;
  }
  if (c.dissipation_coefficient < 0.0 || c.ip_scale < 0.0) {
    throw std::invalid_argument("dissipation and IP scales must be non-negative");
  }
  return c;
}

ScalarPolicy scalar_policy(const SchemeConfig& cfg) {
  ScalarPolicy p;
  p.advection = cfg.advection;
  p.diffusion = cfg.viscous ? cfg.diffusion : Vec3{0.0, 0.0, 0.0};
  for (double b : p.diffusion) {
    if (b < 0.0) {
      throw std::invalid_argument("diffusion coefficients must be non-negative");
    }
  }
  return p;
}

namespace {

/// out += D_dir in on an N^3 block of `width` components.
void add_derivative(const RowMatrix& d, int n, int dir, const double* in, double* out, int width) {
  const std::size_t stride = direction_stride(dir, n);
  const std::size_t nn = static_cast<std::size_t>(n) * n * n;
  for (std::size_t i = 0; i < nn; ++i) {
    const int pos = static_cast<int>((i / stride) % static_cast<std::size_t>(n));
    const std::size_t base = i - static_cast<std::size_t>(pos) * stride;
    for (int m = 0; m < n; ++m) {
      const double c = d(pos, m);
      const double* src = in + (base + m * stride) * width;
      for (int k = 0; k < width; ++k) {
        out[i * width + k] += c * src[k];
      }
    }
  }
}

void map_face(const RowMatrix* interp, const std::vector<double>& in, int width, std::vector<double>& out) {
  if (interp == nullptr) {
    out = in;
    return;
  }
  const auto nt = static_cast<std::size_t>(interp->rows());
  out.resize(nt * nt * static_cast<std::size_t>(width));
  interpolate_face(*interp, in, width, out);
}

}  // namespace

template <class Policy>
struct Discretization<Policy>::Side {
  int element = -1;
  int face = -1;
  int n = 0;
  int degree = 0;
  double sigma = 0.0;
  double pend = 0.0;
  const std::vector<double>* face_mass = nullptr;
  std::vector<std::size_t> index;
  std::vector<double> q;
  std::vector<double> w;
  std::vector<double> fhat;
  std::vector<Node> nodes;
  std::vector<Vec3> nhat;
  std::vector<double> jac;

  std::size_t count() const { return nhat.size(); }
};

template <class Policy>
struct Discretization<Policy>::Work {
  std::vector<Node> nodes;
  std::vector<std::size_t> node_offset;
  SolutionField w;
  std::array<SolutionField, 3> theta;
  std::array<SolutionField, 3> fhat;
  std::vector<std::vector<double>> ext_q;
  std::vector<std::vector<double>> ext_fv;
};

template <class Policy>
Discretization<Policy>::Discretization(MeshTopology mesh, std::vector<ElementGeometry> geom,
                                       std::shared_ptr<const OperatorSet> ops, SchemeConfig cfg, Policy policy,
                                       Provider exterior)
    : mesh_(std::move(mesh)),
      geom_(std::move(geom)),
      ops_(std::move(ops)),
      cfg_(cfg.effective()),
      policy_(std::move(policy)),
      exterior_(std::move(exterior)) {
  if (!ops_) {
    throw std::invalid_argument("operator set is required");
  }
  if (geom_.size() != mesh_.elements.size()) {
    throw std::invalid_argument("geometry and mesh element counts differ");
  }
  degree_data_.resize(kMaxDegree + 1);
  for (std::size_t e = 0; e < geom_.size(); ++e) {
    const int p = mesh_.elements[e].degree;
    if (geom_[e].degree != p) {
      throw std::invalid_argument("geometry degree differs from mesh degree");
    }
    certified_ = certified_ && geom_[e].gcl_certified;
    auto& dd = degree_data_[static_cast<std::size_t>(p)];
    if (dd.op != nullptr) {
      continue;
    }
    dd.op = &ops_->op(p);
    dd.n = dd.op->n;
    dd.pend = dd.op->end_weight();
    const auto& pw = dd.op->weights;
    dd.mass.resize(static_cast<std::size_t>(dd.n) * dd.n * dd.n);
    dd.face_mass.resize(static_cast<std::size_t>(dd.n) * dd.n);
    for (int i = 0; i < dd.n; ++i) {
      for (int j = 0; j < dd.n; ++j) {
        dd.face_mass[static_cast<std::size_t>(i) * dd.n + j] = pw[i] * pw[j];
        for (int k = 0; k < dd.n; ++k) {
          dd.mass[(static_cast<std::size_t>(i) * dd.n + j) * dd.n + k] = pw[i] * pw[j] * pw[k];
        }
      }
    }
    dd.two_sbar = dd.op->S;
    for (int i = 0; i < dd.n; ++i) {
      dd.two_sbar.row(i) *= 2.0 / pw[i];
    }
  }
  for (const auto& bf : mesh_.boundary_faces) {
    if (bf.kind == BoundaryKind::kExactSolution && !exterior_) {
      throw std::invalid_argument("exact-solution boundary faces need an exterior provider");
    }
  }
  viscous_ = cfg_.viscous && policy_.has_viscosity();
}

template <class Policy>
void Discretization<Policy>::load_side(Side& s, int e, int face, const SolutionField& q, const Work& work) const {
  const auto& dd = degree_data_[static_cast<std::size_t>(mesh_.elements[e].degree)];
  const auto& g = geom_[static_cast<std::size_t>(e)];
  s.element = e;
  s.face = face;
  s.n = dd.n;
  s.degree = mesh_.elements[e].degree;
  s.sigma = face_sign(face);
  s.pend = dd.pend;
  s.face_mass = &dd.face_mass;
  const std::size_t nf = static_cast<std::size_t>(dd.n) * dd.n;
  s.index.resize(nf);
  s.q.resize(nf * W);
  s.w.resize(nf * W);
  s.nodes.resize(nf);
  s.jac.resize(nf);
  s.nhat = g.face_metric[face];
  const auto qe = q.element(e);
  const auto we = work.w.element(e);
  const std::size_t base = work.node_offset[e];
  for (int a = 0; a < dd.n; ++a) {
    for (int b = 0; b < dd.n; ++b) {
      const std::size_t f = static_cast<std::size_t>(a) * dd.n + b;
      const std::size_t i = face_node_index(face, a, b, dd.n);
      s.index[f] = i;
      s.nodes[f] = work.nodes[base + i];
      s.jac[f] = g.jac[i];
      for (int k = 0; k < W; ++k) {
        s.q[f * W + k] = qe[i * W + k];
        s.w[f * W + k] = we[i * W + k];
      }
    }
  }
  if (viscous_ && !work.fhat[0].values().empty()) {
    s.fhat.resize(nf * W);
    const auto fe = work.fhat[face / 2].element(e);
    for (std::size_t f = 0; f < nf; ++f) {
      for (int k = 0; k < W; ++k) {
        s.fhat[f * W + k] = fe[s.index[f] * W + k];
      }
    }
  }
}

template <class Policy>
void Discretization<Policy>::load_exterior(Side& ext, const Side& own, BoundaryKind kind, double t,
                                           std::size_t bface, Work& work) const {
  ext.element = -1;
  ext.face = own.face ^ 1;
  ext.n = own.n;
  ext.degree = own.degree;
  ext.sigma = -own.sigma;
  ext.pend = own.pend;
  ext.face_mass = own.face_mass;
  ext.index.clear();
  ext.nhat = own.nhat;
  ext.jac = own.jac;
  const std::size_t nf = own.count();
  if (kind == BoundaryKind::kMirror) {
    ext.q = own.q;
    ext.w = own.w;
    ext.nodes = own.nodes;
    ext.fhat = own.fhat;
    return;
  }
  auto& cq = work.ext_q[bface];
  auto& cfv = work.ext_fv[bface];
  if (cq.empty()) {
    cq.resize(nf * W);
    cfv.resize(nf * 3 * W);
    const auto& g = geom_[static_cast<std::size_t>(own.element)];
    for (std::size_t f = 0; f < nf; ++f) {
      exterior_(g.x[own.index[f]], t, cq.data() + f * W, cfv.data() + f * 3 * W);
    }
  }
  ext.q = cq;
  ext.w.resize(nf * W);
  ext.nodes.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    ext.nodes[f] = policy_.node(cq.data() + f * W);
    policy_.entropy_vars(ext.nodes[f], ext.w.data() + f * W);
  }
  if (!own.fhat.empty()) {
    ext.fhat.assign(nf * W, 0.0);
    for (std::size_t f = 0; f < nf; ++f) {
      for (int m = 0; m < 3; ++m) {
        for (int k = 0; k < W; ++k) {
          ext.fhat[f * W + k] += own.nhat[f][m] * cfv[f * 3 * W + m * W + k];
        }
      }
    }
  }
}

namespace {

template <class Policy, class Side>
void ec_face(const Policy& policy, const Side& a, const Side& b, const RowMatrix* iba, std::vector<double>& out_a,
             std::vector<double>& out_b) {
  constexpr int W = Policy::kWidth;
  double f[W];
  double nbar[3];
  const double ca = -a.sigma / a.pend;
  const double cb = -b.sigma / b.pend;
  if (iba == nullptr) {
    for (std::size_t i = 0; i < a.count(); ++i) {
      for (int d = 0; d < 3; ++d) {
        nbar[d] = 0.5 * (a.nhat[i][d] + b.nhat[i][d]);
      }
      policy.two_point(a.nodes[i], b.nodes[i], nbar, f);
      for (int k = 0; k < W; ++k) {
        out_a[i * W + k] += ca * f[k];
        out_b[i * W + k] += cb * f[k];
      }
    }
    return;
  }
  const int na = a.n;
  const int nb = b.n;
  const auto& ma = *a.face_mass;
  const auto& mb = *b.face_mass;
  for (int i1 = 0; i1 < na; ++i1) {
    for (int i2 = 0; i2 < na; ++i2) {
      const std::size_t i = static_cast<std::size_t>(i1) * na + i2;
      for (int j1 = 0; j1 < nb; ++j1) {
        const double c1 = (*iba)(i1, j1);
        if (c1 == 0.0) {
          continue;
        }
        for (int j2 = 0; j2 < nb; ++j2) {
          const double c = c1 * (*iba)(i2, j2);
          if (c == 0.0) {
            continue;
          }
          const std::size_t j = static_cast<std::size_t>(j1) * nb + j2;
          for (int d = 0; d < 3; ++d) {
            nbar[d] = 0.5 * (a.nhat[i][d] + b.nhat[j][d]);
          }
          policy.two_point(a.nodes[i], b.nodes[j], nbar, f);
          const double wa = ca * c;
          const double wb = cb * ma[i] * c / mb[j];
          for (int k = 0; k < W; ++k) {
            out_a[i * W + k] += wa * f[k];
            out_b[j * W + k] += wb * f[k];
          }
        }
      }
    }
  }
}

/// Symmetric jump penalty: out_a = -(y_a + I_ba y_b)/(2 P_a), out_b = (y_b + I_ab y_a)/(2 P_b) with
/// y_s = K_s (w_s - w_o interpolated onto s).
template <class Policy, class Side, class KFn>
void jump_face(const Policy& policy, const Side& a, const Side& b, const RowMatrix* iba, const RowMatrix* iab, KFn k_apply,
               std::vector<double>& out_a, std::vector<double>& out_b) {
  constexpr int W = Policy::kWidth;
  using Node = typename Policy::Node;
  std::vector<double> wb_on_a;
  std::vector<double> wa_on_b;
  map_face(iba, b.w, W, wb_on_a);
  map_face(iab, a.w, W, wa_on_b);
  std::vector<Node> partner_a;
  std::vector<Node> partner_b;
  if (iba == nullptr) {
    partner_a = b.nodes;
    partner_b = a.nodes;
  } else {
    std::vector<double> qb_on_a;
    std::vector<double> qa_on_b;
    map_face(iba, b.q, W, qb_on_a);
    map_face(iab, a.q, W, qa_on_b);
    partner_a.resize(a.count());
    partner_b.resize(b.count());
    for (std::size_t i = 0; i < a.count(); ++i) {
      partner_a[i] = policy.node(qb_on_a.data() + i * W);
    }
    for (std::size_t j = 0; j < b.count(); ++j) {
      partner_b[j] = policy.node(qa_on_b.data() + j * W);
    }
  }
  std::vector<double> ya(a.count() * W);
  std::vector<double> yb(b.count() * W);
  double jump[W];
  for (std::size_t i = 0; i < a.count(); ++i) {
    for (int k = 0; k < W; ++k) {
      jump[k] = a.w[i * W + k] - wb_on_a[i * W + k];
    }
    k_apply(a, i, partner_a[i], jump, ya.data() + i * W);
  }
  for (std::size_t j = 0; j < b.count(); ++j) {
    for (int k = 0; k < W; ++k) {
      jump[k] = wa_on_b[j * W + k] - b.w[j * W + k];
    }
    k_apply(b, j, partner_b[j], jump, yb.data() + j * W);
  }
  std::vector<double> yb_on_a;
  std::vector<double> ya_on_b;
  map_face(iba, yb, W, yb_on_a);
  map_face(iab, ya, W, ya_on_b);
  const double sa = -0.5 / a.pend;
  const double sb = 0.5 / b.pend;
  for (std::size_t i = 0; i < out_a.size(); ++i) {
    out_a[i] += sa * (ya[i] + yb_on_a[i]);
  }
  for (std::size_t j = 0; j < out_b.size(); ++j) {
    out_b[j] += sb * (yb[j] + ya_on_b[j]);
  }
}

/// out_a = -sigma_a/(2 P_a) (u_a - I_ba u_b), and the mirrored term on b.
template <class Side>
void ldg_face(int width, const Side& a, const Side& b, const std::vector<double>& ua, const std::vector<double>& ub,
              const RowMatrix* iba, const RowMatrix* iab, std::vector<double>& out_a, std::vector<double>& out_b) {
  std::vector<double> ub_on_a;
  std::vector<double> ua_on_b;
  map_face(iba, ub, width, ub_on_a);
  map_face(iab, ua, width, ua_on_b);
  const double sa = -0.5 * a.sigma / a.pend;
  const double sb = -0.5 * b.sigma / b.pend;
  for (std::size_t i = 0; i < out_a.size(); ++i) {
    out_a[i] += sa * (ua[i] - ub_on_a[i]);
  }
  for (std::size_t j = 0; j < out_b.size(); ++j) {
    out_b[j] += sb * (ub[j] - ua_on_b[j]);
  }
}

}  // namespace

template <class Policy>
void Discretization<Policy>::evaluate(const SolutionField& q, double t, const Sink& sink, Work& work,
                                      FaceLedger<W>* ledger, bool gradients_only) const {
  if (q.width() != W || q.element_count() != mesh_.elements.size()) {
    throw std::invalid_argument("solution field does not match the discretization");
  }
  const std::size_t ne = mesh_.elements.size();

  // Nodal states and entropy variables.
  work.node_offset.resize(ne);
  std::size_t total = 0;
  for (std::size_t e = 0; e < ne; ++e) {
    work.node_offset[e] = total;
    total += q.node_count(e);
  }
  work.nodes.resize(total);
  work.w = make_field();
  for (std::size_t e = 0; e < ne; ++e) {
    const auto qe = q.element(e);
    auto we = work.w.element(e);
    for (std::size_t i = 0; i < q.node_count(e); ++i) {
      try {
        work.nodes[work.node_offset[e] + i] = policy_.node(qe.data() + i * W);
      } catch (const AdmissibilityError& err) {
        std::ostringstream msg;
        msg << "element " << e << " node " << i << ": " << err.what();
        throw AdmissibilityError(msg.str());
      }
      policy_.entropy_vars(work.nodes[work.node_offset[e] + i], we.data() + i * W);
    }
  }
  work.ext_q.assign(mesh_.boundary_faces.size(), {});
  work.ext_fv.assign(mesh_.boundary_faces.size(), {});
  for (auto& f : work.fhat) {
    f = SolutionField();
  }

  // Inviscid volume flux differencing.
  if (!gradients_only) {
    double f[W];
    double nbar[3];
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& dd = degree_data_[static_cast<std::size_t>(mesh_.elements[e].degree)];
      const auto& g = geom_[e];
      const int n = dd.n;
      double* out = sink[kInvVol]->element(e).data();
      const Node* nd = work.nodes.data() + work.node_offset[e];
      const std::size_t nn = g.node_count();
      for (int l = 0; l < 3; ++l) {
        const std::size_t stride = direction_stride(l, n);
        for (std::size_t b = 0; b < nn; ++b) {
          if ((b / stride) % static_cast<std::size_t>(n) != 0) {
            continue;
          }
          for (int i = 0; i < n; ++i) {
            const std::size_t ii = b + i * stride;
            const Vec3& li = g.volume_metric[ii][l];
            for (int j = i + 1; j < n; ++j) {
              const std::size_t jj = b + j * stride;
              const Vec3& lj = g.volume_metric[jj][l];
              nbar[0] = 0.5 * (li[0] + lj[0]);
              nbar[1] = 0.5 * (li[1] + lj[1]);
              nbar[2] = 0.5 * (li[2] + lj[2]);
              policy_.two_point(nd[ii], nd[jj], nbar, f);
              const double ci = dd.two_sbar(i, j);
              const double cj = dd.two_sbar(j, i);
              for (int k = 0; k < W; ++k) {
                out[ii * W + k] -= ci * f[k];
                out[jj * W + k] -= cj * f[k];
              }
            }
          }
        }
      }
    }
  }

  // Volume part of the LDG gradients.
  if (viscous_) {
    for (int a = 0; a < 3; ++a) {
      work.theta[a] = make_field();
    }
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& dd = degree_data_[static_cast<std::size_t>(mesh_.elements[e].degree)];
      const double* we = work.w.element(e).data();
      for (int a = 0; a < 3; ++a) {
        add_derivative(dd.op->D, dd.n, a, we, work.theta[a].element(e).data(), W);
      }
    }
  }

  auto scatter = [](const Side& s, const std::vector<double>& vals, SolutionField& dst) {
    auto de = dst.element(static_cast<std::size_t>(s.element));
    for (std::size_t f = 0; f < s.index.size(); ++f) {
      for (int k = 0; k < W; ++k) {
        de[s.index[f] * W + k] += vals[f * W + k];
      }
    }
  };
  auto book = [&](const Side& s, const std::vector<double>& vals) {
    if (ledger == nullptr || s.element < 0) {
      return;
    }
    auto& acc = ledger->faces[static_cast<std::size_t>(s.element)][s.face];
    for (std::size_t f = 0; f < s.count(); ++f) {
      const double m = (*s.face_mass)[f] * s.pend;
      for (int k = 0; k < W; ++k) {
        acc[k] += m * vals[f * W + k];
      }
    }
  };

  auto dissipation = [&](const Side& s, std::size_t i, const Node& partner, const double* v, double* out) {
    const Node& own = s.nodes[i];
    double h1[W];
    double h2[W];
    if (cfg_.dissipation == DissipationKind::kMatrix) {
      policy_.upwind_jacobian(own, s.nhat[i], v, h1);
      policy_.upwind_jacobian(partner, s.nhat[i], v, h2);
      const double c = cfg_.dissipation_coefficient * 0.25;
      for (int k = 0; k < W; ++k) {
        out[k] = c * (h1[k] + h2[k]);
      }
      return;
    }
    const double lambda = std::max(policy_.wave_speed(own, s.nhat[i]), policy_.wave_speed(partner, s.nhat[i]));
    policy_.entropy_jacobian(own, v, h1);
    policy_.entropy_jacobian(partner, v, h2);
    const double c = cfg_.dissipation_coefficient * 0.25 * lambda;
    for (int k = 0; k < W; ++k) {
      out[k] = c * (h1[k] + h2[k]);
    }
  };
  auto penalty = [&](const Side& s, std::size_t i, const Node& partner, const double* v, double* out) {
    const Vec3& nv = s.nhat[i];
    const double inv_j = 1.0 / s.jac[i];
    double g[3][W];
    double fv[3][W];
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < W; ++k) {
        g[j][k] = nv[j] * v[k] * inv_j;
      }
    }
    for (int k = 0; k < W; ++k) {
      out[k] = 0.0;
    }
    for (const Node* nd : {&s.nodes[i], &partner}) {
      policy_.viscous_flux(*nd, g, fv);
      for (int m = 0; m < 3; ++m) {
        for (int k = 0; k < W; ++k) {
          out[k] += nv[m] * fv[m][k];
        }
      }
    }
    const double c = cfg_.ip_scale * 0.5 * (cfg_.ip_extra_jacobian ? inv_j : 1.0);
    for (int k = 0; k < W; ++k) {
      out[k] *= c;
    }
  };

  Side sa;
  Side sb;
  std::vector<double> fa;
  std::vector<double> fb;
  auto reset = [&]() {
    fa.assign(sa.count() * W, 0.0);
    fb.assign(sb.count() * W, 0.0);
  };

  // Coupling terms for one face pair; b is an exterior side when `boundary` is set.
  auto couple = [&](const RowMatrix* iba, const RowMatrix* iab, bool boundary) {
    auto emit = [&](int p) {
      scatter(sa, fa, *sink[p]);
      book(sa, fa);
      if (!boundary) {
        scatter(sb, fb, *sink[p]);
        book(sb, fb);
      }
    };
    if (!gradients_only) {
      reset();
      ec_face(policy_, sa, sb, iba, fa, fb);
      emit(boundary ? kBnd : kInvItf);
      if (cfg_.interface_dissipation) {
        reset();
        jump_face(policy_, sa, sb, iba, iab, dissipation, fa, fb);
        emit(boundary ? kBnd : kInvItf);
      }
      if (viscous_ && cfg_.interior_penalty) {
        reset();
        jump_face(policy_, sa, sb, iba, iab, penalty, fa, fb);
        emit(boundary ? kBnd : kIp);
      }
    }
    if (viscous_) {
      reset();
      ldg_face(W, sa, sb, sa.w, sb.w, iba, iab, fa, fb);
      const int d = sa.face / 2;
      scatter(sa, fa, work.theta[d]);
      if (!boundary) {
        scatter(sb, fb, work.theta[d]);
      }
    }
  };

  for (const auto& itf : mesh_.interfaces) {
    load_side(sa, itf.minus, itf.minus_face(), q, work);
    load_side(sb, itf.plus, itf.plus_face(), q, work);
    const RowMatrix* iba = itf.p_minus == itf.p_plus ? nullptr : &ops_->interp(itf.p_plus, itf.p_minus);
    const RowMatrix* iab = itf.p_minus == itf.p_plus ? nullptr : &ops_->interp(itf.p_minus, itf.p_plus);
    couple(iba, iab, false);
  }
  for (std::size_t bf = 0; bf < mesh_.boundary_faces.size(); ++bf) {
    const auto& face = mesh_.boundary_faces[bf];
    load_side(sa, face.element, face.face, q, work);
    load_exterior(sb, sa, face.kind, t, bf, work);
    couple(nullptr, nullptr, true);
  }

  if (gradients_only) {
    return;
  }

  if (viscous_) {
    // Contravariant viscous fluxes from the lifted gradients, then their divergence.
    for (int l = 0; l < 3; ++l) {
      work.fhat[l] = make_field();
    }
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& dd = degree_data_[static_cast<std::size_t>(mesh_.elements[e].degree)];
      const auto& g = geom_[e];
      const Node* nd = work.nodes.data() + work.node_offset[e];
      const double* th[3] = {work.theta[0].element(e).data(), work.theta[1].element(e).data(),
                             work.theta[2].element(e).data()};
      double* fh[3] = {work.fhat[0].element(e).data(), work.fhat[1].element(e).data(),
                       work.fhat[2].element(e).data()};
      double grad[3][W];
      double fv[3][W];
      for (std::size_t i = 0; i < g.node_count(); ++i) {
        const Mat3& ja = g.metric[i];
        const double inv_j = 1.0 / g.jac[i];
        for (int j = 0; j < 3; ++j) {
          for (int k = 0; k < W; ++k) {
            grad[j][k] = inv_j * (ja[0][j] * th[0][i * W + k] + ja[1][j] * th[1][i * W + k] +
                                  ja[2][j] * th[2][i * W + k]);
          }
        }
        policy_.viscous_flux(nd[i], grad, fv);
        for (int l = 0; l < 3; ++l) {
          for (int k = 0; k < W; ++k) {
            fh[l][i * W + k] = ja[l][0] * fv[0][k] + ja[l][1] * fv[1][k] + ja[l][2] * fv[2][k];
          }
        }
      }
      double* out = sink[kViscVol]->element(e).data();
      for (int l = 0; l < 3; ++l) {
        add_derivative(dd.op->D, dd.n, l, fh[l], out, W);
      }
      if (ledger != nullptr) {
        for (int f = 0; f < 6; ++f) {
          auto& acc = ledger->faces[e][f];
          const double sg = face_sign(f);
          for (int a = 0; a < dd.n; ++a) {
            for (int b = 0; b < dd.n; ++b) {
              const std::size_t i = face_node_index(f, a, b, dd.n);
              const double m = sg * dd.face_mass[static_cast<std::size_t>(a) * dd.n + b];
              for (int k = 0; k < W; ++k) {
                acc[k] += m * fh[f / 2][i * W + k];
              }
            }
          }
        }
      }
    }

    for (const auto& itf : mesh_.interfaces) {
      load_side(sa, itf.minus, itf.minus_face(), q, work);
      load_side(sb, itf.plus, itf.plus_face(), q, work);
      const RowMatrix* iba = itf.p_minus == itf.p_plus ? nullptr : &ops_->interp(itf.p_plus, itf.p_minus);
      const RowMatrix* iab = itf.p_minus == itf.p_plus ? nullptr : &ops_->interp(itf.p_minus, itf.p_plus);
      reset();
      ldg_face(W, sa, sb, sa.fhat, sb.fhat, iba, iab, fa, fb);
      scatter(sa, fa, *sink[kLdg]);
      scatter(sb, fb, *sink[kLdg]);
      book(sa, fa);
      book(sb, fb);
    }
    for (std::size_t bf = 0; bf < mesh_.boundary_faces.size(); ++bf) {
      const auto& face = mesh_.boundary_faces[bf];
      load_side(sa, face.element, face.face, q, work);
      load_exterior(sb, sa, face.kind, t, bf, work);
      reset();
      ldg_face(W, sa, sb, sa.fhat, sb.fhat, nullptr, nullptr, fa, fb);
      scatter(sa, fa, *sink[kBnd]);
      book(sa, fa);
    }
  }

  // Contributions so far are J dq/dt.
  std::set<SolutionField*> distinct(sink.begin(), sink.end());
  for (SolutionField* s : distinct) {
    for (std::size_t e = 0; e < ne; ++e) {
      auto se = s->element(e);
      const auto& jac = geom_[e].jac;
      for (std::size_t i = 0; i < jac.size(); ++i) {
        const double inv = 1.0 / jac[i];
        for (int k = 0; k < W; ++k) {
          se[i * W + k] *= inv;
        }
      }
    }
  }
}

template <class Policy>
void Discretization<Policy>::rhs(const SolutionField& q, double t, SolutionField& dqdt) const {
  if (!dqdt.same_layout(q)) {
    dqdt = make_field();
  } else {
    dqdt.set_zero();
  }
  Work work;
  Sink sink;
  sink.fill(&dqdt);
  evaluate(q, t, sink, work, nullptr, false);
}

template <class Policy>
RhsBreakdown Discretization<Policy>::breakdown(const SolutionField& q, double t) const {
  RhsBreakdown r;
  r.inviscid_volume = make_field();
  r.inviscid_interface = make_field();
  r.viscous_volume = make_field();
  r.ldg_interface = make_field();
  r.ip = make_field();
  r.boundary_sat = make_field();
  r.gcl_certified = certified_;
  Sink sink{&r.inviscid_volume, &r.inviscid_interface, &r.viscous_volume,
            &r.ldg_interface,   &r.ip,                 &r.boundary_sat};
  Work work;
  evaluate(q, t, sink, work, nullptr, false);
  r.total = make_field();
  auto& tv = r.total.values();
  for (std::size_t i = 0; i < tv.size(); ++i) {
    double s = r.inviscid_volume.values()[i];
    s += r.viscous_volume.values()[i];
    s += r.inviscid_interface.values()[i];
    s += r.ldg_interface.values()[i];
    s += r.ip.values()[i];
    s += r.boundary_sat.values()[i];
    tv[i] = s;
  }
  return r;
}

template <class Policy>
std::array<SolutionField, 3> Discretization<Policy>::ldg_gradients(const SolutionField& q, double t) const {
  if (!viscous_) {
    throw std::logic_error("LDG gradients requested with viscosity disabled");
  }
  SolutionField scratch = make_field();
  Sink sink;
  sink.fill(&scratch);
  Work work;
  evaluate(q, t, sink, work, nullptr, true);
  return work.theta;
}

template <class Policy>
FaceLedger<Discretization<Policy>::W> Discretization<Policy>::face_ledger(const SolutionField& q, double t) const {
  FaceLedger<W> ledger;
  const std::size_t ne = mesh_.elements.size();
  std::array<double, W> zero{};
  std::array<std::array<double, W>, 6> zero6;
  zero6.fill(zero);
  ledger.faces.assign(ne, zero6);
  ledger.element_total.assign(ne, zero);
  SolutionField r = make_field();
  Sink sink;
  sink.fill(&r);
  Work work;
  evaluate(q, t, sink, work, &ledger, false);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& m = mass(mesh_.elements[e].degree);
    const auto re = r.element(e);
    const auto& jac = geom_[e].jac;
    for (std::size_t i = 0; i < jac.size(); ++i) {
      for (int k = 0; k < W; ++k) {
        ledger.element_total[e][k] += m[i] * jac[i] * re[i * W + k];
      }
    }
  }
  return ledger;
}

template <class Policy>
double Discretization<Policy>::entropy_contraction(const SolutionField& q, const SolutionField& r) const {
  double sum = 0.0;
  double w[W];
  for (std::size_t e = 0; e < mesh_.elements.size(); ++e) {
    const auto& m = mass(mesh_.elements[e].degree);
    const auto qe = q.element(e);
    const auto re = r.element(e);
    const auto& jac = geom_[e].jac;
    for (std::size_t i = 0; i < jac.size(); ++i) {
      policy_.entropy_vars(policy_.node(qe.data() + i * W), w);
      double s = 0.0;
      for (int k = 0; k < W; ++k) {
        s += w[k] * re[i * W + k];
      }
      sum += m[i] * jac[i] * s;
    }
  }
  return sum;
}

template <class Policy>
double Discretization<Policy>::total_entropy(const SolutionField& q) const {
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh_.elements.size(); ++e) {
    const auto& m = mass(mesh_.elements[e].degree);
    const auto qe = q.element(e);
    const auto& jac = geom_[e].jac;
    for (std::size_t i = 0; i < jac.size(); ++i) {
      sum += m[i] * jac[i] * policy_.entropy(policy_.node(qe.data() + i * W));
    }
  }
  return sum;
}

template <class Policy>
std::array<double, Discretization<Policy>::W> Discretization<Policy>::integrate(const SolutionField& q) const {
  std::array<double, W> sum{};
  for (std::size_t e = 0; e < mesh_.elements.size(); ++e) {
    const auto& m = mass(mesh_.elements[e].degree);
    const auto qe = q.element(e);
    const auto& jac = geom_[e].jac;
    for (std::size_t i = 0; i < jac.size(); ++i) {
      for (int k = 0; k < W; ++k) {
        sum[k] += m[i] * jac[i] * qe[i * W + k];
      }
    }
  }
  return sum;
}

template <class Policy>
double Discretization<Policy>::integrate_scalar(const SolutionField& q,
                                                const std::function<double(std::span<const double>)>& f) const {
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh_.elements.size(); ++e) {
    const auto& m = mass(mesh_.elements[e].degree);
    const auto qe = q.element(e);
    const auto& jac = geom_[e].jac;
    for (std::size_t i = 0; i < jac.size(); ++i) {
      sum += m[i] * jac[i] * f(qe.subspan(i * W, W));
    }
  }
  return sum;
}

template <class Policy>
double Discretization<Policy>::volume() const {
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh_.elements.size(); ++e) {
    const auto& m = mass(mesh_.elements[e].degree);
    const auto& jac = geom_[e].jac;
    for (std::size_t i = 0; i < jac.size(); ++i) {
      sum += m[i] * jac[i];
    }
  }
  return sum;
}

template class Discretization<ScalarPolicy>;
template class Discretization<NavierStokesPolicy>;

}  // namespace ncsbp
