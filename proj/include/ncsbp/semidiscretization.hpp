#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ncsbp/coupling.hpp"
#include "ncsbp/field.hpp"
#include "ncsbp/geometry.hpp"
#include "ncsbp/physics.hpp"

namespace ncsbp {

enum class SchemeMode { kEntropyConservative, kEntropyStable };

std::string to_string(SchemeMode mode);
SchemeMode scheme_mode_from_string(const std::string& name);

/// Inviscid interface dissipation: scalar max wave speed times dQ/dW, or the Roe-type
/// matrix |A_n| dQ/dW.
enum class DissipationKind { kScalar, kMatrix };

std::string to_string(DissipationKind kind);
DissipationKind dissipation_kind_from_string(const std::string& name);

struct SchemeConfig {
  SchemeMode mode = SchemeMode::kEntropyStable;
  bool interface_dissipation = true;
  DissipationKind dissipation = DissipationKind::kScalar;
  double dissipation_coefficient = 1.0;
  bool interior_penalty = true;
  double ip_scale = 1.0;
  bool ip_extra_jacobian = false;  // additional 1/J on the IP coefficient
  bool viscous = true;
  Vec3 advection{1.0, 1.0, 1.0};  // scalar a_m
  Vec3 diffusion{0.0, 0.0, 0.0};  // scalar B_m

  /// Entropy-conservative mode switches the inviscid interface dissipation off.
  SchemeConfig effective() const;
};

/// Linear convection-diffusion u_t + sum a_m u_x_m = sum B_m u_x_m x_m.
struct ScalarPolicy {
  static constexpr int kWidth = 1;
  struct Node {
    double u;
  };

  Vec3 advection{1.0, 1.0, 1.0};
  Vec3 diffusion{0.0, 0.0, 0.0};

  Node node(const double* q) const { return {q[0]}; }
  void entropy_vars(const Node& n, double* w) const { w[0] = n.u; }
  double entropy(const Node& n) const { return 0.5 * n.u * n.u; }
  void two_point(const Node& a, const Node& b, const double n[3], double* f) const {
    const double an = advection[0] * n[0] + advection[1] * n[1] + advection[2] * n[2];
    f[0] = an * 0.5 * (a.u + b.u);
  }
  bool has_viscosity() const { return diffusion[0] != 0.0 || diffusion[1] != 0.0 || diffusion[2] != 0.0; }
  void viscous_flux(const Node&, const double g[3][1], double fv[3][1]) const {
    for (int m = 0; m < 3; ++m) {
      fv[m][0] = diffusion[m] * g[m][0];
    }
  }
  double wave_speed(const Node&, const Vec3& n) const {
    return std::abs(advection[0] * n[0] + advection[1] * n[1] + advection[2] * n[2]);
  }
  void entropy_jacobian(const Node&, const double* v, double* out) const { out[0] = v[0]; }
  void upwind_jacobian(const Node& n, const Vec3& dir, const double* v, double* out) const {
    out[0] = wave_speed(n, dir) * v[0];
  }
};

ScalarPolicy scalar_policy(const SchemeConfig& cfg);

/// Compressible Navier-Stokes with the entropy S = -rho s.
struct NavierStokesPolicy {
  static constexpr int kWidth = 5;
  struct Node {
    FluxNode f;
    Primitive w;
  };

  GasModel gas;

  Node node(const double* q) const {
    const Primitive w = primitive({q[0], q[1], q[2], q[3], q[4]}, gas);
    return {flux_node(w, gas), w};
  }
  void entropy_vars(const Node& n, double* w) const {
    const State5 v = ncsbp::entropy_vars(n.w, gas);
    for (int k = 0; k < 5; ++k) {
      w[k] = v[k];
    }
  }
  double entropy(const Node& n) const { return -n.w.rho * specific_entropy(n.w, gas); }
  void two_point(const Node& a, const Node& b, const double n[3], double* f) const {
    ec_flux(a.f, b.f, gas.gamma - 1.0, n, f);
  }
  bool has_viscosity() const { return gas.mu > 0.0; }
  void viscous_flux(const Node& n, const double g[3][5], double fv[3][5]) const {
    viscous_flux_from_entropy_gradient(n.w, gas, g, fv);
  }
  double wave_speed(const Node& n, const Vec3& dir) const { return max_wave_speed(n.w, gas, dir); }
  void entropy_jacobian(const Node& n, const double* v, double* out) const {
    const Mat5 h = dq_dw(n.w, gas);
    for (int r = 0; r < 5; ++r) {
      double s = 0.0;
      for (int c = 0; c < 5; ++c) {
        s += h[r][c] * v[c];
      }
      out[r] = s;
    }
  }
  void upwind_jacobian(const Node& n, const Vec3& dir, const double* v, double* out) const {
    const Mat5 k = upwind_matrix(n.w, gas, dir);
    for (int r = 0; r < 5; ++r) {
      double s = 0.0;
      for (int c = 0; c < 5; ++c) {
        s += k[r][c] * v[c];
      }
      out[r] = s;
    }
  }
};

/// Named partial right-hand sides; total = sum of parts in a fixed order.
struct RhsBreakdown {
  SolutionField inviscid_volume;
  SolutionField inviscid_interface;
  SolutionField viscous_volume;
  SolutionField ldg_interface;
  SolutionField ip;
  SolutionField boundary_sat;
  SolutionField total;
  bool gcl_certified = true;
};

/// Exterior data on exact-solution boundaries: conserved state q[W] and Cartesian viscous
/// fluxes fv[3*W] (row m) at x and t.
template <int W>
using ExteriorProvider = std::function<void(const Vec3& x, double t, double* q, double* fv)>;

/// Integrated face contributions (M J dq/dt summed over face nodes) for every element face.
template <int W>
struct FaceLedger {
  std::vector<std::array<std::array<double, W>, 6>> faces;
  std::vector<std::array<double, W>> element_total;  // 1^T M J dq/dt per element
};

/// Element-wise entropy-stable discretization on a p-nonconforming curvilinear mesh.
template <class Policy>
class Discretization {
 public:
  static constexpr int W = Policy::kWidth;
  using Node = typename Policy::Node;
  using Provider = ExteriorProvider<W>;

  Discretization(MeshTopology mesh, std::vector<ElementGeometry> geom, std::shared_ptr<const OperatorSet> ops,
                 SchemeConfig cfg, Policy policy, Provider exterior = {});

  const MeshTopology& mesh() const { return mesh_; }
  const std::vector<ElementGeometry>& geometry() const { return geom_; }
  const OperatorSet& ops() const { return *ops_; }
  const SchemeConfig& config() const { return cfg_; }
  const Policy& policy() const { return policy_; }
  bool gcl_certified() const { return certified_; }
  bool viscous_active() const { return viscous_; }

  SolutionField make_field() const { return SolutionField::for_mesh(mesh_, W); }

  /// dq/dt at time t.
  void rhs(const SolutionField& q, double t, SolutionField& dqdt) const;
  RhsBreakdown breakdown(const SolutionField& q, double t) const;
  /// theta_a = D_a w plus interface penalties, for a = 1..3.
  std::array<SolutionField, 3> ldg_gradients(const SolutionField& q, double t) const;
  FaceLedger<W> face_ledger(const SolutionField& q, double t) const;

  /// sum_e w^T M J r.
  double entropy_contraction(const SolutionField& q, const SolutionField& r) const;
  /// sum_e 1^T M J S(q).
  double total_entropy(const SolutionField& q) const;
  /// sum_e 1^T M J q per component.
  std::array<double, W> integrate(const SolutionField& q) const;
  /// sum_e 1^T M J f(node values).
  double integrate_scalar(const SolutionField& q, const std::function<double(std::span<const double>)>& f) const;
  /// sum_e 1^T M J.
  double volume() const;

  /// Tensor-product quadrature weights P x P x P of an element.
  const std::vector<double>& mass(int degree) const { return degree_data_.at(static_cast<std::size_t>(degree)).mass; }

 private:
  enum Part { kInvVol = 0, kInvItf, kViscVol, kLdg, kIp, kBnd, kPartCount };
  struct DegreeData {
    const SbpOp1D* op = nullptr;
    int n = 0;
    double pend = 0.0;
    std::vector<double> mass;       // N^3
    std::vector<double> face_mass;  // N^2
    RowMatrix two_sbar;             // 2 S(i, j) / P(i)
  };
  struct Side;
  struct Work;
  using Sink = std::array<SolutionField*, kPartCount>;

  void evaluate(const SolutionField& q, double t, const Sink& sink, Work& work, FaceLedger<W>* ledger,
                bool gradients_only) const;
  void load_side(Side& s, int e, int face, const SolutionField& q, const Work& work) const;
  void load_exterior(Side& ext, const Side& own, BoundaryKind kind, double t, std::size_t bface,
                     Work& work) const;

  MeshTopology mesh_;
  std::vector<ElementGeometry> geom_;
  std::shared_ptr<const OperatorSet> ops_;
  SchemeConfig cfg_;
  Policy policy_;
  Provider exterior_;
  std::vector<DegreeData> degree_data_;
  bool certified_ = true;
  bool viscous_ = false;
};

using NavierStokesDiscretization = Discretization<NavierStokesPolicy>;
using ScalarDiscretization = Discretization<ScalarPolicy>;

}  // namespace ncsbp
