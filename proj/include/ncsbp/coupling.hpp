#pragma once

#include <map>
#include <utility>

#include "ncsbp/sbp_operator.hpp"

namespace ncsbp {

/// SBP-preserving interpolation between a low (pL) and high (pH) degree LGL operator.
struct InterpolationPair {
  int p_low = 0;
  int p_high = 0;
  RowMatrix low_to_high;  // (pH+1) x (pL+1)
  RowMatrix high_to_low;  // (pL+1) x (pH+1), P_L^{-1} I_L2H^T P_H
};

InterpolationPair build_interpolation_pair(const SbpOp1D& op_low, const SbpOp1D& op_high);

/// Dense monomial-Vandermonde form V_H V_L^{-1}; equal to the Lagrange form used by
/// build_interpolation_pair and kept as a cross-check.
RowMatrix vandermonde_interpolation(const SbpOp1D& op_low, const SbpOp1D& op_high);

/// Dense two-element coupled operator for an interface normal to xi_1. Element L occupies
/// the first (pL+1)^3 unknowns and meets element H with its xi_1 = +1 face.
struct MacroOperator {
  int p_low = 0;
  int p_high = 0;
  Eigen::MatrixXd M;   // block-diagonal norm
  Eigen::MatrixXd S1;  // coupled skew-symmetric part
  Eigen::MatrixXd E1;  // outer boundary terms only
  Eigen::MatrixXd D2;  // block-diagonal
  Eigen::MatrixXd D3;

  Eigen::Index low_size() const { return static_cast<Eigen::Index>(p_low + 1) * (p_low + 1) * (p_low + 1); }
  Eigen::MatrixXd Q1() const { return S1 + 0.5 * E1; }
  Eigen::MatrixXd D1() const;
  const Eigen::MatrixXd& D(int dir) const;
};

MacroOperator assemble_macro_operator(const SbpOp1D& op_low, const SbpOp1D& op_high,
                                      const InterpolationPair& pair);

struct MacroReport {
  double skew = 0.0;              // ||S1 + S1^T||_max
  double boundary = 0.0;          // ||E1 - expected outer blocks||_max
  double norm_min_diag = 0.0;     // smallest diagonal of M
  double norm_offdiag = 0.0;      // largest off-diagonal of M
  double constant = 0.0;          // ||D1 1||_inf
  double sbp = 0.0;               // ||Q1 + Q1^T - E1||_max

  bool passes(double tol = 1e-14) const {
    return skew <= tol && boundary <= tol && norm_min_diag > 0.0 && norm_offdiag == 0.0 &&
           constant <= 1e3 * tol && sbp <= tol;
  }
};

MacroReport verify_macro_sbp(const MacroOperator& m, const SbpOp1D& op_low, const SbpOp1D& op_high);

struct InterpolationReport {
  int p_low = 0;
  int p_high = 0;
  double adjoint = 0.0;          // ||P_L I_H2L - I_L2H^T P_H||_max
  double low_to_high_exact = 0.0;  // max error on monomials of degree <= pL
  double high_to_low_exact = 0.0;  // max error on monomials of degree <= pL - 1
  double high_to_low_witness = 0.0;  // error on xi^pL (expected nonzero when pH > pL)
  double constants = 0.0;
  double vandermonde = 0.0;      // Lagrange vs monomial Vandermonde form
};

InterpolationReport verify_interpolation_pair(const InterpolationPair& pair, const SbpOp1D& op_low,
                                              const SbpOp1D& op_high);

/// Operators and interpolation matrices for every degree in [p_min, p_max]; immutable once built.
class OperatorSet {
 public:
  OperatorSet(int p_min, int p_max);

  int p_min() const { return p_min_; }
  int p_max() const { return p_max_; }
  const SbpOp1D& op(int p) const;
  /// Matrix mapping nodal values of degree `from` to nodes of degree `to`.
  const RowMatrix& interp(int from, int to) const;
  const InterpolationPair& pair(int p_low, int p_high) const;

 private:
  int p_min_;
  int p_max_;
  std::map<int, SbpOp1D> ops_;
  std::map<std::pair<int, int>, InterpolationPair> pairs_;
  std::map<std::pair<int, int>, RowMatrix> maps_;
};

}  // namespace ncsbp
