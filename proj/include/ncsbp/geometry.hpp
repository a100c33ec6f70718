#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ncsbp/coupling.hpp"
#include "ncsbp/sbp_operator.hpp"

namespace ncsbp {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

enum class BoundaryKind {
  kPeriodic,
  kExactSolution,
  kMirror,  // exterior state copies the interior trace
};

std::string to_string(BoundaryKind kind);
BoundaryKind boundary_kind_from_string(const std::string& name);

struct MeshSpec {
  std::array<int, 3> cells{4, 4, 4};
  Vec3 lower{-0.5, -0.5, -0.5};
  Vec3 upper{0.5, 0.5, 0.5};
  std::array<BoundaryKind, 3> boundary{BoundaryKind::kExactSolution, BoundaryKind::kExactSolution,
                                       BoundaryKind::kExactSolution};
  double amplitude = 1.0 / 15.0;  // perturbation amplitude as a fraction of the box length
  int p_min = 1;
  int p_max = 1;
  std::uint64_t seed = 0;
  std::vector<int> degrees;  // explicit per-element degrees in [p_min, p_max]; empty draws them from seed
};

struct FaceLink {
  int neighbor = -1;   // element across the face, -1 on a non-periodic boundary
  int interface = -1;  // index into MeshTopology::interfaces
  BoundaryKind kind = BoundaryKind::kExactSolution;
};

struct ElementInfo {
  int degree = 1;
  std::array<int, 3> cell{0, 0, 0};
  std::vector<Vec3> control;  // (g+1)^3 map control points, same ordering as nodes
  std::array<FaceLink, 6> faces;
};

/// Shared face between the +face of `minus` and the -face of `plus` along `direction`.
struct Interface {
  int minus = -1;
  int plus = -1;
  int direction = 0;
  bool periodic = false;
  int p_minus = 1;
  int p_plus = 1;

  int low() const { return p_minus <= p_plus ? minus : plus; }
  int high() const { return p_minus <= p_plus ? plus : minus; }
  int minus_face() const { return 2 * direction + 1; }
  int plus_face() const { return 2 * direction; }
};

struct BoundaryFace {
  int element = -1;
  int face = -1;
  BoundaryKind kind = BoundaryKind::kExactSolution;
};

struct MeshTopology {
  MeshSpec spec;
  int geometry_degree = 1;
  std::vector<ElementInfo> elements;
  std::vector<Interface> interfaces;
  std::vector<BoundaryFace> boundary_faces;

  int degree(int e) const { return elements.at(static_cast<std::size_t>(e)).degree; }
  int element_index(int cx, int cy, int cz) const {
    return cx + spec.cells[0] * (cy + spec.cells[1] * cz);
  }
};

/// Displacement applied to an unperturbed lattice point.
Vec3 perturbation(const Vec3& x, const MeshSpec& spec);

/// Structured lattice with seeded per-element degrees in [p_min, p_max] and perturbed
/// degree-p_min faces; interiors from transfinite interpolation of the faces.
MeshTopology generate_perturbed_mesh(const MeshSpec& spec);

/// Polynomial element map of degree g defined by control values at LGL points.
class ElementMap {
 public:
  ElementMap(int geometry_degree, std::vector<Vec3> control);

  int degree() const { return g_; }
  const std::vector<Vec3>& control() const { return control_; }
  Vec3 position(const Vec3& xi) const;
  /// Columns are dx/dxi_l.
  Mat3 jacobian(const Vec3& xi) const;

 private:
  int g_;
  std::vector<double> nodes_;
  std::vector<Vec3> control_;
};

ElementMap element_map(const MeshTopology& mesh, int e);

struct ElementGeometry {
  int degree = 1;
  std::vector<Vec3> x;
  std::vector<double> jac;
  std::vector<Mat3> metric;         // analytic J dxi_l/dx_m as metric[node][l][m]
  std::vector<Mat3> volume_metric;  // metric used by the inviscid operator
  std::array<std::vector<Vec3>, 6> face_metric;  // analytic J dxi_d/dx on each face
  bool gcl_certified = false;

  std::size_t node_count() const { return x.size(); }
};

/// Analytic metrics of an element map at the LGL nodes of `op`; throws on J <= 0.
ElementGeometry analytic_metrics(const ElementMap& map, const SbpOp1D& op);

/// Per-face surface metric data that forces the element-wise GCL.
using SurfaceForcing = std::array<std::vector<Vec3>, 6>;

/// Averages of own and interpolated partner surface metrics on interfaces; own metrics on
/// boundary faces.
SurfaceForcing surface_forcing(const MeshTopology& mesh, std::span<const ElementGeometry> geom,
                               const OperatorSet& ops, int e);

/// GCL residual per direction m at every node (uses volume_metric).
std::array<std::vector<double>, 3> gcl_residual(const ElementGeometry& geom, const SbpOp1D& op,
                                                const SurfaceForcing& forcing);

double max_abs(const std::array<std::vector<double>, 3>& fields);

struct GclSolveResult {
  double residual_before = 0.0;
  double residual_after = 0.0;
  double compatibility = 0.0;  // |1^T M r| before the solve
  double correction = 0.0;     // max |volume - analytic|
  double objective = 0.0;      // sum_m sum_l (dL)^T M (dL)
};

/// Minimum P-weighted correction of the volume metrics satisfying the element-wise GCL.
/// Factorizations are cached per degree.
class GclSolver {
 public:
  GclSolveResult solve(ElementGeometry& geom, const SbpOp1D& op, const SurfaceForcing& forcing);

  /// Dense constraint matrix for direction blocks l = 0..2, N^3 x 3 N^3.
  static Eigen::MatrixXd constraint_matrix(const SbpOp1D& op);
  /// Right-hand side of A lambda = b for direction m.
  static Eigen::VectorXd forcing_vector(const SbpOp1D& op, const SurfaceForcing& forcing, int m);

 private:
  struct Factor {
    Eigen::MatrixXd a;
    Eigen::VectorXd inv_mass;
    Eigen::LLT<Eigen::MatrixXd> llt;
  };
  const Factor& factor(const SbpOp1D& op);
  std::map<int, Factor> cache_;
};

GclSolveResult solve_volume_metrics(ElementGeometry& geom, const SbpOp1D& op,
                                    const SurfaceForcing& forcing);

struct GeometryStats {
  double max_gcl_before = 0.0;
  double max_gcl_after = 0.0;
  double max_correction = 0.0;
};

/// Geometry for every element; with certify the volume metrics are GCL-projected.
std::vector<ElementGeometry> build_geometry(const MeshTopology& mesh, const OperatorSet& ops,
                                            bool certify = true, GeometryStats* stats = nullptr);

/// Largest coordinate mismatch of shared face nodes seen from the two sides of each interface.
double watertightness(const MeshTopology& mesh, std::span<const ElementGeometry> geom);

/// Translation applied to the plus element of an interface to bring it next to the minus one.
Vec3 interface_shift(const MeshTopology& mesh, const Interface& itf);

}  // namespace ncsbp
