#include "ncsbp/coupling.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ncsbp {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return k;
}

Eigen::MatrixXd kron3(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c) {
  return kron(kron(a, b), c);
}

Eigen::MatrixXd diag_of(const std::vector<double>& v) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(v.size()),
                                            static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = v[i];
  }
  return m;
}

Eigen::MatrixXd unit_outer(int n, int i, int m, int j) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, m);
  e(i, j) = 1.0;
  return e;
}

}  // namespace

InterpolationPair build_interpolation_pair(const SbpOp1D& op_low, const SbpOp1D& op_high) {
  if (op_high.degree < op_low.degree) {
    throw std::invalid_argument("interpolation pair requires pH >= pL");
  }
  InterpolationPair pair;
  pair.p_low = op_low.degree;
  pair.p_high = op_high.degree;
  pair.low_to_high = lagrange_interpolation_matrix(op_low.nodes, op_high.nodes);
  const auto nl = static_cast<Eigen::Index>(op_low.n);
  const auto nh = static_cast<Eigen::Index>(op_high.n);
  pair.high_to_low.resize(nl, nh);
  for (Eigen::Index i = 0; i < nl; ++i) {
    for (Eigen::Index j = 0; j < nh; ++j) {
      pair.high_to_low(i, j) = pair.low_to_high(j, i) * op_high.weights[j] / op_low.weights[i];
    }
  }
  return pair;
}

RowMatrix vandermonde_interpolation(const SbpOp1D& op_low, const SbpOp1D& op_high) {
  const int nl = op_low.n;
  const int nh = op_high.n;
  Eigen::MatrixXd vl(nl, nl);
  Eigen::MatrixXd vh(nh, nl);
  for (int j = 0; j < nl; ++j) {
    for (int i = 0; i < nl; ++i) {
      vl(i, j) = std::pow(op_low.nodes[i], j);
    }
    for (int i = 0; i < nh; ++i) {
      vh(i, j) = std::pow(op_high.nodes[i], j);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(vl);
  if (!lu.isInvertible()) {
    throw std::runtime_error("singular Vandermonde matrix");
  }
  // I = V_H V_L^{-1}  <=>  I^T = V_L^{-T} V_H^T
  const Eigen::MatrixXd it = vl.transpose().fullPivLu().solve(vh.transpose());
  return it.transpose();
}

InterpolationReport verify_interpolation_pair(const InterpolationPair& pair, const SbpOp1D& op_low,
                                              const SbpOp1D& op_high) {
  InterpolationReport r;
  r.p_low = pair.p_low;
  r.p_high = pair.p_high;
  const int nl = op_low.n;
  const int nh = op_high.n;
  for (int i = 0; i < nl; ++i) {
    for (int j = 0; j < nh; ++j) {
      const double lhs = op_low.weights[i] * pair.high_to_low(i, j);
      const double rhs = pair.low_to_high(j, i) * op_high.weights[j];
      r.adjoint = std::max(r.adjoint, std::abs(lhs - rhs));
    }
  }
  auto monomial = [](const std::vector<double>& x, int k) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = std::pow(x[i], k);
    }
    return v;
  };
  for (int k = 0; k <= pair.p_low; ++k) {
    const Eigen::VectorXd up = pair.low_to_high * monomial(op_low.nodes, k) - monomial(op_high.nodes, k);
    r.low_to_high_exact = std::max(r.low_to_high_exact, up.cwiseAbs().maxCoeff());
    const Eigen::VectorXd down = pair.high_to_low * monomial(op_high.nodes, k) - monomial(op_low.nodes, k);
    if (k <= pair.p_low - 1) {
      r.high_to_low_exact = std::max(r.high_to_low_exact, down.cwiseAbs().maxCoeff());
    } else {
      r.high_to_low_witness = down.cwiseAbs().maxCoeff();
    }
  }
  const Eigen::VectorXd ones_l = Eigen::VectorXd::Ones(nl);
  const Eigen::VectorXd ones_h = Eigen::VectorXd::Ones(nh);
  r.constants = std::max((pair.low_to_high * ones_l - ones_h).cwiseAbs().maxCoeff(),
                         (pair.high_to_low * ones_h - ones_l).cwiseAbs().maxCoeff());
  r.vandermonde = (vandermonde_interpolation(op_low, op_high) - pair.low_to_high).cwiseAbs().maxCoeff();
  return r;
}

Eigen::MatrixXd MacroOperator::D1() const {
  return M.diagonal().cwiseInverse().asDiagonal() * Q1();
}

const Eigen::MatrixXd& MacroOperator::D(int dir) const {
  if (dir == 2) {
    return D2;
  }
  if (dir == 3) {
    return D3;
  }
  throw std::invalid_argument("use D1() for the coupled direction");
}

MacroOperator assemble_macro_operator(const SbpOp1D& op_low, const SbpOp1D& op_high,
                                      const InterpolationPair& pair) {
  if (pair.p_low != op_low.degree || pair.p_high != op_high.degree) {
    throw std::invalid_argument("interpolation pair does not match operators");
  }
  const int nl = op_low.n;
  const int nh = op_high.n;
  const Eigen::Index sl = static_cast<Eigen::Index>(nl) * nl * nl;
  const Eigen::Index sh = static_cast<Eigen::Index>(nh) * nh * nh;
  const Eigen::Index s = sl + sh;
  const Eigen::MatrixXd pl = diag_of(op_low.weights);
  const Eigen::MatrixXd ph = diag_of(op_high.weights);
  const Eigen::MatrixXd il = Eigen::MatrixXd::Identity(nl, nl);
  const Eigen::MatrixXd ih = Eigen::MatrixXd::Identity(nh, nh);
  const Eigen::MatrixXd dl = op_low.D;
  const Eigen::MatrixXd dh = op_high.D;

  MacroOperator m;
  m.p_low = op_low.degree;
  m.p_high = op_high.degree;
  m.M = Eigen::MatrixXd::Zero(s, s);
  m.M.topLeftCorner(sl, sl) = kron3(pl, pl, pl);
  m.M.bottomRightCorner(sh, sh) = kron3(ph, ph, ph);

  const Eigen::MatrixXd pi = pl * Eigen::MatrixXd(pair.high_to_low);
  const Eigen::MatrixXd s12 = 0.5 * kron3(unit_outer(nl, nl - 1, nh, 0), pi, pi);
  m.S1 = Eigen::MatrixXd::Zero(s, s);
  m.S1.topLeftCorner(sl, sl) = kron3(Eigen::MatrixXd(op_low.S), pl, pl);
  m.S1.bottomRightCorner(sh, sh) = kron3(Eigen::MatrixXd(op_high.S), ph, ph);
  m.S1.topRightCorner(sl, sh) = s12;
  m.S1.bottomLeftCorner(sh, sl) = -s12.transpose();

  m.E1 = Eigen::MatrixXd::Zero(s, s);
  m.E1.topLeftCorner(sl, sl) = -kron3(unit_outer(nl, 0, nl, 0), pl, pl);
  m.E1.bottomRightCorner(sh, sh) = kron3(unit_outer(nh, nh - 1, nh, nh - 1), ph, ph);

  m.D2 = Eigen::MatrixXd::Zero(s, s);
  m.D2.topLeftCorner(sl, sl) = kron3(il, dl, il);
  m.D2.bottomRightCorner(sh, sh) = kron3(ih, dh, ih);
  m.D3 = Eigen::MatrixXd::Zero(s, s);
  m.D3.topLeftCorner(sl, sl) = kron3(il, il, dl);
  m.D3.bottomRightCorner(sh, sh) = kron3(ih, ih, dh);
  return m;
}

MacroReport verify_macro_sbp(const MacroOperator& m, const SbpOp1D& op_low, const SbpOp1D& op_high) {
  MacroReport r;
  r.skew = (m.S1 + m.S1.transpose()).cwiseAbs().maxCoeff();
  const int nl = op_low.n;
  const int nh = op_high.n;
  const Eigen::Index sl = static_cast<Eigen::Index>(nl) * nl * nl;
  const Eigen::Index sh = static_cast<Eigen::Index>(nh) * nh * nh;
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(sl + sh, sl + sh);
  const Eigen::MatrixXd pl = diag_of(op_low.weights);
  const Eigen::MatrixXd ph = diag_of(op_high.weights);
  expected.topLeftCorner(sl, sl) = -kron3(unit_outer(nl, 0, nl, 0), pl, pl);
  expected.bottomRightCorner(sh, sh) = kron3(unit_outer(nh, nh - 1, nh, nh - 1), ph, ph);
  r.boundary = (m.E1 - expected).cwiseAbs().maxCoeff();
  r.norm_min_diag = m.M.diagonal().minCoeff();
  Eigen::MatrixXd off = m.M;
  off.diagonal().setZero();
  r.norm_offdiag = off.cwiseAbs().maxCoeff();
  r.constant = (m.D1() * Eigen::VectorXd::Ones(m.M.rows())).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd q = m.Q1();
  r.sbp = (q + q.transpose() - m.E1).cwiseAbs().maxCoeff();
  return r;
}

OperatorSet::OperatorSet(int p_min, int p_max) : p_min_(p_min), p_max_(p_max) {
  if (p_min < 1 || p_max < p_min) {
    throw std::invalid_argument("invalid degree range for operator set");
  }
  for (int p = p_min; p <= p_max; ++p) {
    ops_.emplace(p, build_lgl_sbp(p));
  }
  for (int a = p_min; a <= p_max; ++a) {
    for (int b = a; b <= p_max; ++b) {
      auto pair = build_interpolation_pair(ops_.at(a), ops_.at(b));
      if (a == b) {
        const auto n = static_cast<Eigen::Index>(a + 1);
        pair.low_to_high = RowMatrix::Identity(n, n);
        pair.high_to_low = RowMatrix::Identity(n, n);
      }
      maps_.emplace(std::make_pair(a, b), pair.low_to_high);
      maps_.emplace(std::make_pair(b, a), pair.high_to_low);
      pairs_.emplace(std::make_pair(a, b), std::move(pair));
    }
  }
}

const SbpOp1D& OperatorSet::op(int p) const {
  const auto it = ops_.find(p);
  if (it == ops_.end()) {
    throw std::out_of_range("no operator for degree " + std::to_string(p));
  }
  return it->second;
}

const RowMatrix& OperatorSet::interp(int from, int to) const {
  const auto it = maps_.find({from, to});
  if (it == maps_.end()) {
    throw std::out_of_range("no interpolation from degree " + std::to_string(from) + " to " +
                            std::to_string(to));
  }
  return it->second;
}

const InterpolationPair& OperatorSet::pair(int p_low, int p_high) const {
  const auto it = pairs_.find({p_low, p_high});
  if (it == pairs_.end()) {
    throw std::out_of_range("no interpolation pair");
  }
  return it->second;
}

}  // namespace ncsbp
