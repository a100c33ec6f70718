#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "ncsbp/sbp_operator.hpp"

using namespace ncsbp;

namespace {

// Legendre P_n and P_n' by the three-term recurrence.
void legendre_ref(int n, double x, double& p, double& dp) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  p = p1;
  dp = n * (p0 - x * p1) / (1.0 - x * x);
}

// Interior LGL nodes as roots of P_p' found by bisection between Chebyshev-Gauss-Lobatto brackets.
std::vector<double> lgl_nodes_ref(int p) {
  std::vector<double> x{-1.0};
  const int samples = 3999;
  auto f = [p](double t) {
    double v;
    double d;
    legendre_ref(p, t, v, d);
    return d;
  };
  double a = -1.0 + 1e-12;
  for (int s = 1; s <= samples; ++s) {
    const double b = -1.0 + 2.0 * s / samples - (s == samples ? 1e-12 : 0.0);
    if (f(a) * f(b) < 0.0) {
      double lo = a;
      double hi = b;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
      }
      x.push_back(0.5 * (lo + hi));
    }
    a = b;
  }
  x.push_back(1.0);
  return x;
}

// Integral of the Lagrange basis by 2000-panel composite Gauss-Legendre (5 points per panel).
std::vector<double> lagrange_integrals(const std::vector<double>& nodes) {
  const double g[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
  const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                       0.2369268850561891};
  const std::size_t n = nodes.size();
  std::vector<double> out(n, 0.0);
  const int panels = 2000;
  for (int k = 0; k < panels; ++k) {
    const double a = -1.0 + 2.0 * k / panels;
    const double h = 2.0 / panels;
    for (int q = 0; q < 5; ++q) {
      const double x = a + 0.5 * h * (g[q] + 1.0);
      for (std::size_t i = 0; i < n; ++i) {
        double l = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) {
            l *= (x - nodes[j]) / (nodes[i] - nodes[j]);
          }
        }
        out[i] += 0.5 * h * w[q] * l;
      }
    }
  }
  return out;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return k;
}

}  // namespace

TEST_CASE("p=1 operator is the unique two-point operator") {
  const SbpOp1D op = build_lgl_sbp(1);
  REQUIRE(op.n == 2);
  CHECK(op.nodes[0] == -1.0);
  CHECK(op.nodes[1] == 1.0);
  CHECK(op.weights[0] == doctest::Approx(1.0));
  CHECK(op.weights[1] == doctest::Approx(1.0));
  CHECK(op.D(0, 0) == doctest::Approx(-0.5));
  CHECK(op.D(0, 1) == doctest::Approx(0.5));
  CHECK(op.D(1, 0) == doctest::Approx(-0.5));
  CHECK(op.D(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("p=2 nodes and weights") {
  const SbpOp1D op = build_lgl_sbp(2);
  const double nodes[3] = {-1.0, 0.0, 1.0};
  const double weights[3] = {1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0};
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(op.nodes[i] - nodes[i]) <= 1e-15);
    CHECK(std::abs(op.weights[i] - weights[i]) <= 1e-14);
  }
}

TEST_CASE("nodes and weights match an independent root-finding and quadrature oracle") {
  for (int p = 1; p <= 8; ++p) {
    CAPTURE(p);
    const SbpOp1D op = build_lgl_sbp(p);
    const auto ref = lgl_nodes_ref(p);
    REQUIRE(ref.size() == static_cast<std::size_t>(p + 1));
    const auto w = lagrange_integrals(ref);
    for (int i = 0; i <= p; ++i) {
      CHECK(std::abs(op.nodes[i] - ref[i]) <= 1e-13);
      CHECK(std::abs(op.weights[i] - w[i]) <= 1e-12);
    }
  }
}

TEST_CASE("definition invariants hold for p = 1..8") {
  for (int p = 1; p <= 8; ++p) {
    CAPTURE(p);
    const SbpOp1D op = build_lgl_sbp(p);
    const SbpReport r = verify_sbp_definition(op);
    CHECK(r.accuracy <= 1e-12);
    CHECK(r.sbp <= 1e-14);
    CHECK(r.skew <= 1e-14);
    CHECK(r.quadrature <= 1e-12);
    CHECK(r.min_weight > 0.0);
    CHECK(r.node_symmetry <= 1e-15);
    double sum = 0.0;
    for (const double w : op.weights) {
      sum += w;
    }
    CHECK(std::abs(sum - 2.0) <= 1e-14);
    CHECK(op.e_diag.front() == -1.0);
    CHECK(op.e_diag.back() == 1.0);
    const Eigen::VectorXd d1 = op.D * Eigen::VectorXd::Ones(op.n);
    CHECK(d1.cwiseAbs().maxCoeff() <= 1e-12);
    const RowMatrix pd = Eigen::Map<const Eigen::VectorXd>(op.weights.data(), op.n).asDiagonal() * op.D;
    CHECK((pd - op.Q).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("verify_sbp_definition flags a corrupted derivative entry") {
  SbpOp1D op = build_lgl_sbp(3);
  CHECK(verify_sbp_definition(op).passes());
  op.D(1, 1) += 1e-3;
  const SbpReport r = verify_sbp_definition(op);
  CHECK(r.accuracy == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK_FALSE(r.passes());
}

TEST_CASE("degree bounds are enforced") {
  CHECK_THROWS_AS(build_lgl_sbp(0), std::invalid_argument);
  CHECK_THROWS_AS(build_lgl_sbp(kMaxDegree + 1), std::invalid_argument);
  CHECK_NOTHROW(build_lgl_sbp(kMaxDegree));
  CHECK(verify_sbp_definition(build_lgl_sbp(kMaxDegree)).passes(1e-10));
}

TEST_CASE("tensor derivative: exactness and line structure") {
  const SbpOp1D op = build_lgl_sbp(3);
  const TensorGrid grid(op, 1);
  const int n = op.n;
  std::vector<double> xi1(grid.size());
  std::vector<double> xi2p(grid.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const std::size_t idx = (static_cast<std::size_t>(i) * n + j) * n + k;
        xi1[idx] = op.nodes[i];
        xi2p[idx] = std::pow(op.nodes[j], 3);
      }
    }
  }
  std::vector<double> out(grid.size());
  grid.apply_derivative(1, xi1, out);
  for (const double v : out) {
    CHECK(std::abs(v - 1.0) <= 1e-13);
  }
  grid.apply_derivative(1, xi2p, out);
  for (const double v : out) {
    CHECK(std::abs(v) <= 1e-13);
  }
  std::vector<double> bad(grid.size() + 1);
  CHECK_THROWS(grid.apply_derivative(1, bad, out));
  CHECK_THROWS(grid.apply_derivative(4, xi1, out));
}

TEST_CASE("tensor derivative matches the dense Kronecker action") {
  const SbpOp1D op = build_lgl_sbp(2);
  const int n = op.n;
  const Eigen::MatrixXd d = op.D;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd dense[3] = {kron(kron(d, id), id), kron(kron(id, d), id), kron(kron(id, id), d)};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (const int width : {1, 5}) {
    const TensorGrid grid(op, width);
    std::vector<double> u(grid.size());
    for (double& v : u) {
      v = dist(rng);
    }
    for (int dir = 1; dir <= 3; ++dir) {
      std::vector<double> out(grid.size());
      apply_tensor_derivative(grid, dir, u, out);
      for (int c = 0; c < width; ++c) {
        Eigen::VectorXd uc(n * n * n);
        for (int i = 0; i < n * n * n; ++i) {
          uc[i] = u[static_cast<std::size_t>(i * width + c)];
        }
        const Eigen::VectorXd ref = dense[dir - 1] * uc;
        for (int i = 0; i < n * n * n; ++i) {
          CHECK(std::abs(out[static_cast<std::size_t>(i * width + c)] - ref[i]) <= 1e-13);
        }
      }
    }
  }
}

TEST_CASE("tensor derivatives in distinct directions commute") {
  const SbpOp1D op = build_lgl_sbp(4);
  const TensorGrid grid(op, 2);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> u(grid.size());
  for (double& v : u) {
    v = dist(rng);
  }
  for (int a = 1; a <= 3; ++a) {
    for (int b = a + 1; b <= 3; ++b) {
      std::vector<double> t1(grid.size());
      std::vector<double> t2(grid.size());
      std::vector<double> ab(grid.size());
      std::vector<double> ba(grid.size());
      grid.apply_derivative(b, u, t1);
      grid.apply_derivative(a, t1, ab);
      grid.apply_derivative(a, u, t2);
      grid.apply_derivative(b, t2, ba);
      for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(std::abs(ab[i] - ba[i]) <= 1e-12);
      }
    }
  }
}
