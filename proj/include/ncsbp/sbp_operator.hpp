#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ncsbp {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Largest polynomial degree accepted by build_lgl_sbp (N = 16 nodes).
inline constexpr int kMaxDegree = 15;

/// Diagonal-norm LGL collocation SBP operator on [-1, 1].
struct SbpOp1D {
  int degree = 0;
  int n = 0;
  std::vector<double> nodes;
  std::vector<double> weights;  // diagonal of P
  RowMatrix D;
  RowMatrix Q;
  RowMatrix S;  // Q - E/2, skew-symmetric
  std::vector<double> e_diag;  // diagonal of E: (-1, 0, ..., 0, 1)

  double end_weight() const { return weights.front(); }
};

/// Legendre polynomial P_n and its derivative at x.
void legendre(int n, double x, double& value, double& derivative);

/// LGL nodes (ascending) and weights for degree p.
void lgl_nodes_weights(int p, std::vector<double>& nodes, std::vector<double>& weights);

/// Barycentric differentiation matrix for the Lagrange basis on the given nodes.
RowMatrix lagrange_derivative_matrix(std::span<const double> nodes);

/// Values of the Lagrange basis on `from` evaluated at the points `to` (rows = to).
RowMatrix lagrange_interpolation_matrix(std::span<const double> from, std::span<const double> to);

/// Builds the LGL SBP operator for degree p; throws std::invalid_argument outside [1, kMaxDegree].
SbpOp1D build_lgl_sbp(int p);

struct SbpReport {
  int degree = 0;
  double accuracy = 0.0;       // max_j ||D xi^j - j xi^(j-1)||_inf, j <= p
  double sbp = 0.0;            // ||Q + Q^T - E||_max
  double skew = 0.0;           // ||S + S^T||_max
  double quadrature = 0.0;     // max_j |1^T P xi^j - int xi^j|, j <= 2p - 1
  double min_weight = 0.0;
  double node_symmetry = 0.0;  // max |x_i + x_{N-1-i}|

  bool passes(double tol = 1e-12) const {
    return accuracy <= tol && sbp <= tol && skew <= tol && quadrature <= tol && min_weight > 0.0 &&
           node_symmetry <= tol;
  }
};

SbpReport verify_sbp_definition(const SbpOp1D& op);

/// Tensor-product operator on an N^3 element; flat node index (i*N + j)*N + k with i along xi_1.
class TensorGrid {
 public:
  TensorGrid(const SbpOp1D& op, int width);

  int n() const { return op_->n; }
  int width() const { return width_; }
  std::size_t node_count() const { return static_cast<std::size_t>(n()) * n() * n(); }
  std::size_t size() const { return node_count() * static_cast<std::size_t>(width_); }
  const SbpOp1D& op() const { return *op_; }

  /// out = D_{xi_dir} u for dir in {1,2,3}; sizes must equal size().
  void apply_derivative(int dir, std::span<const double> u, std::span<double> out) const;

 private:
  const SbpOp1D* op_;
  int width_;
};

/// Free-function form of TensorGrid::apply_derivative.
void apply_tensor_derivative(const TensorGrid& grid, int dir, std::span<const double> u,
                             std::span<double> out);

/// Stride (in nodes) between successive nodes along direction dir (0-based) in an N^3 block.
inline std::size_t direction_stride(int dir, int n) {
  return dir == 0 ? static_cast<std::size_t>(n) * n : (dir == 1 ? static_cast<std::size_t>(n) : 1u);
}

}  // namespace ncsbp

namespace ncsbp {

/// Volume node index of tangential position (a, b) on face f (f = 2*dir + side) of an N^3 block.
/// Tangential directions are the two remaining directions in increasing order.
inline std::size_t face_node_index(int face, int a, int b, int n) {
  const int dir = face / 2;
  const int fixed = (face % 2 == 1) ? n - 1 : 0;
  int ijk[3];
  ijk[dir] = fixed;
  ijk[dir == 0 ? 1 : 0] = a;
  ijk[dir == 2 ? 1 : 2] = b;
  return (static_cast<std::size_t>(ijk[0]) * n + ijk[1]) * n + ijk[2];
}

/// Outward orientation of face f: -1 for the xi = -1 face, +1 for the xi = +1 face.
inline double face_sign(int face) { return face % 2 == 1 ? 1.0 : -1.0; }

/// out(a, b) = sum_{c,d} I(a, c) I(b, d) in(c, d) on face arrays of `width` components.
void interpolate_face(const RowMatrix& interp, std::span<const double> in, int width,
                      std::span<double> out);

/// out = (A1 x A2 x A3) in on tensor blocks of `width` components (A_k may be rectangular).
void contract_volume(const RowMatrix& a1, const RowMatrix& a2, const RowMatrix& a3,
                     std::span<const double> in, int width, std::span<double> out);

}  // namespace ncsbp
