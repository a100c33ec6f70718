#include "ncsbp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ncsbp {

std::string to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::kPeriodic: return "periodic";
    case BoundaryKind::kExactSolution: return "exact";
    case BoundaryKind::kMirror: return "mirror";
  }
  return "unknown";
}

BoundaryKind boundary_kind_from_string(const std::string& name) {
  if (name == "periodic") {
    return BoundaryKind::kPeriodic;
  }
  if (name == "exact") {
    return BoundaryKind::kExactSolution;
  }
  if (name == "mirror") {
    return BoundaryKind::kMirror;
  }
  throw std::invalid_argument("unknown boundary kind '" + name + "'");
}

Vec3 perturbation(const Vec3& x, const MeshSpec& spec) {
  Vec3 len{};
  Vec3 arg{};
  for (int k = 0; k < 3; ++k) {
    len[k] = spec.upper[k] - spec.lower[k];
    arg[k] = std::numbers::pi / len[k] * (x[k] - 0.5 * (spec.upper[k] + spec.lower[k]));
  }
  const double a = arg[0];
  const double b = arg[1];
  const double c = arg[2];
  const double amp = spec.amplitude;
  return {amp * len[0] * std::cos(a) * std::cos(3.0 * b) * std::sin(4.0 * c),
          amp * len[1] * std::sin(4.0 * a) * std::cos(b) * std::cos(3.0 * c),
          amp * len[2] * std::cos(3.0 * a) * std::sin(4.0 * b) * std::cos(c)};
}

namespace {

std::size_t idx3(int i, int j, int k, int n) {
  return (static_cast<std::size_t>(i) * n + j) * n + k;
}

void build_control_points(const MeshSpec& spec, int g, const std::vector<double>& gn,
                          const std::array<int, 3>& cell, std::vector<Vec3>& ctrl) {
  const int n = g + 1;
  ctrl.assign(static_cast<std::size_t>(n) * n * n, Vec3{});
  auto lattice = [&](int k, int c, int a) {
    // exact box bounds on the outer boundary
    if (c == 0 && a == 0) {
      return spec.lower[k];
    }
    if (c == spec.cells[k] - 1 && a == g) {
      return spec.upper[k];
    }
    const double t = (c + 0.5 * (gn[a] + 1.0)) / spec.cells[k];
    return spec.lower[k] + (spec.upper[k] - spec.lower[k]) * t;
  };
  auto on_box = [&](int k, int c, int a) {
    return (c == 0 && a == 0) || (c == spec.cells[k] - 1 && a == g);
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const bool boundary = i == 0 || i == g || j == 0 || j == g || k == 0 || k == g;
        if (!boundary) {
          continue;
        }
        const std::array<int, 3> a{i, j, k};
        Vec3 xs{};
        for (int d = 0; d < 3; ++d) {
          xs[d] = lattice(d, cell[d], a[d]);
        }
        const Vec3 dx = perturbation(xs, spec);
        Vec3 x{};
        for (int d = 0; d < 3; ++d) {
          x[d] = on_box(d, cell[d], a[d]) ? xs[d] : xs[d] + dx[d];
        }
        ctrl[idx3(i, j, k, n)] = x;
      }
    }
  }
  if (g < 2) {
    return;
  }
  // transfinite interpolation: Boolean sum of the three linear face projectors
  auto lo = [&](int a) { return 0.5 * (1.0 - gn[a]); };
  auto hi = [&](int a) { return 0.5 * (1.0 + gn[a]); };
  for (int i = 1; i < g; ++i) {
    for (int j = 1; j < g; ++j) {
      for (int k = 1; k < g; ++k) {
        const double bi[2] = {lo(i), hi(i)};
        const double bj[2] = {lo(j), hi(j)};
        const double bk[2] = {lo(k), hi(k)};
        const int ends[2] = {0, g};
        Vec3 x{};
        for (int d = 0; d < 3; ++d) {
          double v = 0.0;
          for (int s = 0; s < 2; ++s) {
            v += bi[s] * ctrl[idx3(ends[s], j, k, n)][d];
            v += bj[s] * ctrl[idx3(i, ends[s], k, n)][d];
            v += bk[s] * ctrl[idx3(i, j, ends[s], n)][d];
          }
          for (int s = 0; s < 2; ++s) {
            for (int t = 0; t < 2; ++t) {
              v -= bi[s] * bj[t] * ctrl[idx3(ends[s], ends[t], k, n)][d];
              v -= bi[s] * bk[t] * ctrl[idx3(ends[s], j, ends[t], n)][d];
              v -= bj[s] * bk[t] * ctrl[idx3(i, ends[s], ends[t], n)][d];
            }
          }
          for (int s = 0; s < 2; ++s) {
            for (int t = 0; t < 2; ++t) {
              for (int u = 0; u < 2; ++u) {
                v += bi[s] * bj[t] * bk[u] * ctrl[idx3(ends[s], ends[t], ends[u], n)][d];
              }
            }
          }
          x[d] = v;
        }
        ctrl[idx3(i, j, k, n)] = x;
      }
    }
  }
}

}  // namespace

MeshTopology generate_perturbed_mesh(const MeshSpec& spec) {
  for (int k = 0; k < 3; ++k) {
    if (spec.cells[k] < 1) {
      throw std::invalid_argument("cells per direction must be >= 1");
    }
    if (!(spec.upper[k] > spec.lower[k])) {
      throw std::invalid_argument("empty domain box");
    }
  }
  if (spec.p_min < 1 || spec.p_max < spec.p_min || spec.p_max > kMaxDegree) {
    throw std::invalid_argument("invalid element degree range");
  }
  if (!spec.degrees.empty()) {
    if (spec.degrees.size() != static_cast<std::size_t>(spec.cells[0]) * spec.cells[1] * spec.cells[2]) {
      throw std::invalid_argument("explicit degree list does not match the element count");
    }
    for (const int p : spec.degrees) {
      if (p < spec.p_min || p > spec.p_max) {
        throw std::invalid_argument("explicit degree outside [p_min, p_max]");
      }
    }
  }
  MeshTopology mesh;
  mesh.spec = spec;
  mesh.geometry_degree = spec.p_min;
  const int g = mesh.geometry_degree;
  std::vector<double> gn;
  std::vector<double> gw;
  lgl_nodes_weights(g, gn, gw);

  const int nx = spec.cells[0];
  const int ny = spec.cells[1];
  const int nz = spec.cells[2];
  const int ne = nx * ny * nz;
  mesh.elements.resize(static_cast<std::size_t>(ne));
  std::mt19937_64 rng(spec.seed);
  const auto spread = static_cast<std::uint64_t>(spec.p_max - spec.p_min + 1);
  for (int cz = 0; cz < nz; ++cz) {
    for (int cy = 0; cy < ny; ++cy) {
      for (int cx = 0; cx < nx; ++cx) {
        const auto e = static_cast<std::size_t>(mesh.element_index(cx, cy, cz));
        auto& el = mesh.elements[e];
        el.cell = {cx, cy, cz};
        const int drawn = spec.p_min + static_cast<int>(rng() % spread);
        el.degree = spec.degrees.empty() ? drawn : spec.degrees[e];
      }
    }
  }
  for (auto& el : mesh.elements) {
    build_control_points(spec, g, gn, el.cell, el.control);
  }
  for (int e = 0; e < ne; ++e) {
    auto& el = mesh.elements[static_cast<std::size_t>(e)];
    for (int d = 0; d < 3; ++d) {
      auto c = el.cell;
      if (c[d] + 1 < spec.cells[d] || spec.boundary[d] == BoundaryKind::kPeriodic) {
        c[d] = (c[d] + 1) % spec.cells[d];
        const int o = mesh.element_index(c[0], c[1], c[2]);
        Interface itf;
        itf.minus = e;
        itf.plus = o;
        itf.direction = d;
        itf.periodic = el.cell[d] + 1 == spec.cells[d];
        itf.p_minus = el.degree;
        itf.p_plus = mesh.elements[static_cast<std::size_t>(o)].degree;
        const int id = static_cast<int>(mesh.interfaces.size());
        mesh.interfaces.push_back(itf);
        el.faces[2 * d + 1] = FaceLink{o, id, BoundaryKind::kPeriodic};
        mesh.elements[static_cast<std::size_t>(o)].faces[2 * d] = FaceLink{e, id, BoundaryKind::kPeriodic};
      }
      if (spec.boundary[d] != BoundaryKind::kPeriodic) {
        if (el.cell[d] == 0) {
          el.faces[2 * d] = FaceLink{-1, -1, spec.boundary[d]};
          mesh.boundary_faces.push_back({e, 2 * d, spec.boundary[d]});
        }
        if (el.cell[d] + 1 == spec.cells[d]) {
          el.faces[2 * d + 1] = FaceLink{-1, -1, spec.boundary[d]};
          mesh.boundary_faces.push_back({e, 2 * d + 1, spec.boundary[d]});
        }
      }
    }
  }
  return mesh;
}

ElementMap::ElementMap(int geometry_degree, std::vector<Vec3> control)
    : g_(geometry_degree), control_(std::move(control)) {
  std::vector<double> w;
  lgl_nodes_weights(g_, nodes_, w);
  const std::size_t n = static_cast<std::size_t>(g_ + 1);
  if (control_.size() != n * n * n) {
    throw std::invalid_argument("control point count does not match geometry degree");
  }
}

namespace {

void basis_and_derivative(const std::vector<double>& nodes, double x, std::vector<double>& l,
                          std::vector<double>& dl) {
  const std::span<const double> pt(&x, 1);
  const RowMatrix lm = lagrange_interpolation_matrix(nodes, pt);
  const RowMatrix dm = lm * lagrange_derivative_matrix(nodes);
  l.assign(lm.data(), lm.data() + lm.size());
  dl.assign(dm.data(), dm.data() + dm.size());
}

}  // namespace

Vec3 ElementMap::position(const Vec3& xi) const {
  std::array<std::vector<double>, 3> l;
  std::array<std::vector<double>, 3> dl;
  for (int k = 0; k < 3; ++k) {
    basis_and_derivative(nodes_, xi[k], l[k], dl[k]);
  }
  const int n = g_ + 1;
  Vec3 x{};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const double w = l[0][i] * l[1][j] * l[2][k];
        for (int d = 0; d < 3; ++d) {
          x[d] += w * control_[idx3(i, j, k, n)][d];
        }
      }
    }
  }
  return x;
}

Mat3 ElementMap::jacobian(const Vec3& xi) const {
  std::array<std::vector<double>, 3> l;
  std::array<std::vector<double>, 3> dl;
  for (int k = 0; k < 3; ++k) {
    basis_and_derivative(nodes_, xi[k], l[k], dl[k]);
  }
  const int n = g_ + 1;
  Mat3 jm{};  // jm[d][l] = dx_d / dxi_l
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const Vec3& c = control_[idx3(i, j, k, n)];
        const double w0 = dl[0][i] * l[1][j] * l[2][k];
        const double w1 = l[0][i] * dl[1][j] * l[2][k];
        const double w2 = l[0][i] * l[1][j] * dl[2][k];
        for (int d = 0; d < 3; ++d) {
          jm[d][0] += w0 * c[d];
          jm[d][1] += w1 * c[d];
          jm[d][2] += w2 * c[d];
        }
      }
    }
  }
  return jm;
}

ElementMap element_map(const MeshTopology& mesh, int e) {
  return ElementMap(mesh.geometry_degree, mesh.elements.at(static_cast<std::size_t>(e)).control);
}

namespace {

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

ElementGeometry analytic_metrics(const ElementMap& map, const SbpOp1D& op) {
  const int g = map.degree();
  std::vector<double> gn;
  std::vector<double> gw;
  lgl_nodes_weights(g, gn, gw);
  const RowMatrix l = lagrange_interpolation_matrix(gn, op.nodes);
  const RowMatrix dl = l * lagrange_derivative_matrix(gn);

  const std::size_t nc = static_cast<std::size_t>(g + 1) * (g + 1) * (g + 1);
  std::vector<double> ctrl(nc * 3);
  for (std::size_t i = 0; i < nc; ++i) {
    const Vec3& c = map.control()[i];
    for (int d = 0; d < 3; ++d) {
      ctrl[3 * i + d] = c[d];
    }
  }
  const std::size_t nn = static_cast<std::size_t>(op.n) * op.n * op.n;
  std::vector<double> x(nn * 3);
  std::array<std::vector<double>, 3> dx;
  contract_volume(l, l, l, ctrl, 3, x);
  for (auto& v : dx) {
    v.resize(nn * 3);
  }
  contract_volume(dl, l, l, ctrl, 3, dx[0]);
  contract_volume(l, dl, l, ctrl, 3, dx[1]);
  contract_volume(l, l, dl, ctrl, 3, dx[2]);

  ElementGeometry geo;
  geo.degree = op.degree;
  geo.x.resize(nn);
  geo.jac.resize(nn);
  geo.metric.resize(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    Vec3 t[3];
    for (int k = 0; k < 3; ++k) {
      t[k] = {dx[k][3 * i], dx[k][3 * i + 1], dx[k][3 * i + 2]};
    }
    geo.x[i] = {x[3 * i], x[3 * i + 1], x[3 * i + 2]};
    geo.metric[i][0] = cross(t[1], t[2]);
    geo.metric[i][1] = cross(t[2], t[0]);
    geo.metric[i][2] = cross(t[0], t[1]);
    geo.jac[i] = dot(t[0], geo.metric[i][0]);
    if (!(geo.jac[i] > 0.0)) {
      std::ostringstream msg;
      msg << "non-positive Jacobian " << geo.jac[i] << " at node " << i;
      throw std::runtime_error(msg.str());
    }
  }
  geo.volume_metric = geo.metric;
  const int n = op.n;
  for (int f = 0; f < 6; ++f) {
    auto& fm = geo.face_metric[f];
    fm.resize(static_cast<std::size_t>(n) * n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        fm[static_cast<std::size_t>(a) * n + b] = geo.metric[face_node_index(f, a, b, n)][f / 2];
      }
    }
  }
  return geo;
}

SurfaceForcing surface_forcing(const MeshTopology& mesh, std::span<const ElementGeometry> geom,
                               const OperatorSet& ops, int e) {
  SurfaceForcing out;
  const auto& el = mesh.elements.at(static_cast<std::size_t>(e));
  const auto& gs = geom[static_cast<std::size_t>(e)];
  for (int f = 0; f < 6; ++f) {
    const auto& own = gs.face_metric[f];
    const FaceLink& link = el.faces[f];
    if (link.neighbor < 0) {
      out[f] = own;
      continue;
    }
    const auto& go = geom[static_cast<std::size_t>(link.neighbor)];
    const auto& other = go.face_metric[f ^ 1];
    std::vector<double> in(other.size() * 3);
    for (std::size_t i = 0; i < other.size(); ++i) {
      for (int d = 0; d < 3; ++d) {
        in[3 * i + d] = other[i][d];
      }
    }
    std::vector<double> mapped(own.size() * 3);
    interpolate_face(ops.interp(go.degree, gs.degree), in, 3, mapped);
    out[f].resize(own.size());
    for (std::size_t i = 0; i < own.size(); ++i) {
      for (int d = 0; d < 3; ++d) {
        out[f][i][d] = 0.5 * (own[i][d] + mapped[3 * i + d]);
      }
    }
  }
  return out;
}

std::array<std::vector<double>, 3> gcl_residual(const ElementGeometry& geom, const SbpOp1D& op,
                                                const SurfaceForcing& forcing) {
  const int n = op.n;
  const std::size_t nn = static_cast<std::size_t>(n) * n * n;
  std::array<std::vector<double>, 3> res;
  for (int m = 0; m < 3; ++m) {
    res[m].assign(nn, 0.0);
    for (int l = 0; l < 3; ++l) {
      const std::size_t stride = direction_stride(l, n);
      for (std::size_t i = 0; i < nn; ++i) {
        const int pos = static_cast<int>((i / stride) % static_cast<std::size_t>(n));
        const std::size_t base = i - static_cast<std::size_t>(pos) * stride;
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
          s += op.D(pos, k) * geom.volume_metric[base + k * stride][l][m];
        }
        res[m][i] += s;
      }
    }
    for (int f = 0; f < 6; ++f) {
      const double c = face_sign(f) / op.end_weight();
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          const std::size_t i = face_node_index(f, a, b, n);
          const double vol = geom.volume_metric[i][f / 2][m];
          res[m][i] -= c * (vol - forcing[f][static_cast<std::size_t>(a) * n + b][m]);
        }
      }
    }
  }
  return res;
}

double max_abs(const std::array<std::vector<double>, 3>& fields) {
  double r = 0.0;
  for (const auto& f : fields) {
    for (double v : f) {
      r = std::max(r, std::abs(v));
    }
  }
  return r;
}

Eigen::MatrixXd GclSolver::constraint_matrix(const SbpOp1D& op) {
  const int n = op.n;
  const Eigen::Index nn = static_cast<Eigen::Index>(n) * n * n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nn, 3 * nn);
  for (int l = 0; l < 3; ++l) {
    const std::size_t stride = direction_stride(l, n);
    for (Eigen::Index i = 0; i < nn; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const int pos = static_cast<int>((ui / stride) % static_cast<std::size_t>(n));
      const std::size_t base = ui - static_cast<std::size_t>(pos) * stride;
      for (int k = 0; k < n; ++k) {
        a(i, l * nn + static_cast<Eigen::Index>(base + k * stride)) += op.D(pos, k);
      }
      if (pos == 0) {
        a(i, l * nn + i) += 1.0 / op.end_weight();
      } else if (pos == n - 1) {
        a(i, l * nn + i) -= 1.0 / op.end_weight();
      }
    }
  }
  return a;
}

Eigen::VectorXd GclSolver::forcing_vector(const SbpOp1D& op, const SurfaceForcing& forcing, int m) {
  const int n = op.n;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) * n * n);
  for (int f = 0; f < 6; ++f) {
    const double c = face_sign(f) / op.end_weight();
    for (int a = 0; a < n; ++a) {
      for (int bb = 0; bb < n; ++bb) {
        const auto i = static_cast<Eigen::Index>(face_node_index(f, a, bb, n));
        b(i) -= c * forcing[f][static_cast<std::size_t>(a) * n + bb][m];
      }
    }
  }
  return b;
}

const GclSolver::Factor& GclSolver::factor(const SbpOp1D& op) {
  auto it = cache_.find(op.degree);
  if (it != cache_.end()) {
    return it->second;
  }
  Factor fac;
  fac.a = constraint_matrix(op);
  const int n = op.n;
  const Eigen::Index nn = static_cast<Eigen::Index>(n) * n * n;
  Eigen::VectorXd mass(nn);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        mass(static_cast<Eigen::Index>(idx3(i, j, k, n))) = op.weights[i] * op.weights[j] * op.weights[k];
      }
    }
  }
  fac.inv_mass = Eigen::VectorXd(3 * nn);
  for (int l = 0; l < 3; ++l) {
    fac.inv_mass.segment(l * nn, nn) = mass.cwiseInverse();
  }
  Eigen::MatrixXd k = fac.a * fac.inv_mass.asDiagonal() * fac.a.transpose();
  // the constraint rows are dependent along M 1; a rank-one shift makes the system definite
  const double scale = k.trace() / static_cast<double>(nn);
  k += (scale / mass.squaredNorm()) * mass * mass.transpose();
  fac.llt.compute(k);
  if (fac.llt.info() != Eigen::Success) {
    throw std::runtime_error("GCL normal-equation factorization failed");
  }
  return cache_.emplace(op.degree, std::move(fac)).first->second;
}

GclSolveResult GclSolver::solve(ElementGeometry& geom, const SbpOp1D& op, const SurfaceForcing& forcing) {
  if (geom.degree != op.degree) {
    throw std::invalid_argument("geometry and operator degrees differ");
  }
  const Factor& fac = factor(op);
  const int n = op.n;
  const Eigen::Index nn = static_cast<Eigen::Index>(n) * n * n;
  Eigen::VectorXd mass = fac.inv_mass.head(nn).cwiseInverse();
  GclSolveResult result;
  result.residual_before = max_abs(gcl_residual(geom, op, forcing));
  double lam_scale = 0.0;
  for (const auto& mt : geom.metric) {
    for (const auto& row : mt) {
      for (double v : row) {
        lam_scale = std::max(lam_scale, std::abs(v));
      }
    }
  }
  for (int m = 0; m < 3; ++m) {
    Eigen::VectorXd lambda(3 * nn);
    for (int l = 0; l < 3; ++l) {
      for (Eigen::Index i = 0; i < nn; ++i) {
        lambda(l * nn + i) = geom.metric[static_cast<std::size_t>(i)][l][m];
      }
    }
    const Eigen::VectorXd target = lambda;
    const Eigen::VectorXd b = forcing_vector(op, forcing, m);
    Eigen::VectorXd r = b - fac.a * lambda;
    result.compatibility = std::max(result.compatibility, std::abs(mass.dot(r)));
    if (r.cwiseAbs().maxCoeff() <= 1e-14 * lam_scale) {
      continue;
    }
    for (int pass = 0; pass < 3; ++pass) {
      const Eigen::VectorXd y = fac.llt.solve(r);
      lambda += fac.inv_mass.asDiagonal() * (fac.a.transpose() * y);
      r = b - fac.a * lambda;
      if (r.cwiseAbs().maxCoeff() <= 1e-15 * lam_scale) {
        break;
      }
    }
    const Eigen::VectorXd delta = lambda - target;
    for (int l = 0; l < 3; ++l) {
      result.objective += delta.segment(l * nn, nn).dot(mass.asDiagonal() * delta.segment(l * nn, nn));
      for (Eigen::Index i = 0; i < nn; ++i) {
        geom.volume_metric[static_cast<std::size_t>(i)][l][m] = lambda(l * nn + i);
      }
    }
    result.correction = std::max(result.correction, delta.cwiseAbs().maxCoeff());
  }
  result.residual_after = max_abs(gcl_residual(geom, op, forcing));
  geom.gcl_certified = result.residual_after <= 1e-12;
  return result;
}

GclSolveResult solve_volume_metrics(ElementGeometry& geom, const SbpOp1D& op,
                                    const SurfaceForcing& forcing) {
  GclSolver solver;
  return solver.solve(geom, op, forcing);
}

std::vector<ElementGeometry> build_geometry(const MeshTopology& mesh, const OperatorSet& ops,
                                            bool certify, GeometryStats* stats) {
  std::vector<ElementGeometry> geom;
  geom.reserve(mesh.elements.size());
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    try {
      geom.push_back(analytic_metrics(element_map(mesh, static_cast<int>(e)),
                                      ops.op(mesh.elements[e].degree)));
    } catch (const std::runtime_error& err) {
      throw std::runtime_error("element " + std::to_string(e) + ": " + err.what());
    }
  }
  if (!certify) {
    return geom;
  }
  GclSolver solver;
  GeometryStats s;
  std::vector<SurfaceForcing> forcing(geom.size());
  for (std::size_t e = 0; e < geom.size(); ++e) {
    forcing[e] = surface_forcing(mesh, geom, ops, static_cast<int>(e));
  }
  for (std::size_t e = 0; e < geom.size(); ++e) {
    const auto r = solver.solve(geom[e], ops.op(geom[e].degree), forcing[e]);
    s.max_gcl_before = std::max(s.max_gcl_before, r.residual_before);
    s.max_gcl_after = std::max(s.max_gcl_after, r.residual_after);
    s.max_correction = std::max(s.max_correction, r.correction);
  }
  if (stats != nullptr) {
    *stats = s;
  }
  return geom;
}

Vec3 interface_shift(const MeshTopology& mesh, const Interface& itf) {
  Vec3 s{0.0, 0.0, 0.0};
  if (itf.periodic) {
    s[itf.direction] = mesh.spec.upper[itf.direction] - mesh.spec.lower[itf.direction];
  }
  return s;
}

double watertightness(const MeshTopology& mesh, std::span<const ElementGeometry> geom) {
  double worst = 0.0;
  for (const auto& itf : mesh.interfaces) {
    const auto& gm = geom[static_cast<std::size_t>(itf.minus)];
    const auto& gp = geom[static_cast<std::size_t>(itf.plus)];
    const auto& om = build_lgl_sbp(gm.degree).nodes;
    const auto& op = build_lgl_sbp(gp.degree).nodes;
    const RowMatrix interp = lagrange_interpolation_matrix(op, om);
    const int nm = gm.degree + 1;
    const int np = gp.degree + 1;
    const Vec3 shift = interface_shift(mesh, itf);
    std::vector<double> in(static_cast<std::size_t>(np) * np * 3);
    for (int a = 0; a < np; ++a) {
      for (int b = 0; b < np; ++b) {
        const Vec3& x = gp.x[face_node_index(itf.plus_face(), a, b, np)];
        for (int d = 0; d < 3; ++d) {
          in[(static_cast<std::size_t>(a) * np + b) * 3 + d] = x[d] + shift[d];
        }
      }
    }
    std::vector<double> out(static_cast<std::size_t>(nm) * nm * 3);
    interpolate_face(interp, in, 3, out);
    for (int a = 0; a < nm; ++a) {
      for (int b = 0; b < nm; ++b) {
        const Vec3& x = gm.x[face_node_index(itf.minus_face(), a, b, nm)];
        for (int d = 0; d < 3; ++d) {
          worst = std::max(worst, std::abs(x[d] - out[(static_cast<std::size_t>(a) * nm + b) * 3 + d]));
        }
      }
    }
  }
  return worst;
}

}  // namespace ncsbp
