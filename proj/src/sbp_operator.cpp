#include "ncsbp/sbp_operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ncsbp {

void legendre(int n, double x, double& value, double& derivative) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) {
    value = 1.0;
    derivative = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  value = p1;
  // (1 - x^2) P_n' = n (P_{n-1} - x P_n); endpoints use P_n'(+-1) = (+-1)^{n+1} n(n+1)/2.
  if (std::abs(std::abs(x) - 1.0) < 1e-300) {
    derivative = 0.5 * n * (n + 1.0) * ((n % 2 == 0 && x < 0.0) ? -1.0 : 1.0);
  } else {
    derivative = n * (p0 - x * p1) / (1.0 - x * x);
  }
}

void lgl_nodes_weights(int p, std::vector<double>& nodes, std::vector<double>& weights) {
  const int n = p + 1;
  std::vector<double> x(n);
  for (int j = 0; j < n; ++j) {
    x[j] = std::cos(std::numbers::pi * j / p);
  }
  constexpr double kTol = 1e-15;
  for (int iter = 0; iter < 200; ++iter) {
    double change = 0.0;
    for (int j = 0; j < n; ++j) {
      double q0 = 1.0;
      double q1 = x[j];
      for (int k = 2; k <= p; ++k) {
        const double qk = ((2.0 * k - 1.0) * x[j] * q1 - (k - 1.0) * q0) / k;
        q0 = q1;
        q1 = qk;
      }
      const double step = (x[j] * q1 - q0) / (n * q1);
      x[j] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change <= kTol) {
      break;
    }
  }
  std::reverse(x.begin(), x.end());
  for (int j = 0; j < n / 2; ++j) {
    const double s = 0.5 * (x[n - 1 - j] - x[j]);
    x[j] = -s;
    x[n - 1 - j] = s;
  }
  if (n % 2 == 1) {
    x[n / 2] = 0.0;
  }
  x.front() = -1.0;
  x.back() = 1.0;
  nodes = x;
  weights.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double v = 0.0;
    double d = 0.0;
    legendre(p, x[j], v, d);
    weights[j] = 2.0 / (p * (p + 1.0) * v * v);
  }
  for (int j = 0; j < n / 2; ++j) {
    const double w = 0.5 * (weights[j] + weights[n - 1 - j]);
    weights[j] = w;
    weights[n - 1 - j] = w;
  }
}

namespace {

std::vector<double> barycentric_weights(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> lambda(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) {
        const double diff = x[j] - x[k];
        if (diff == 0.0) {
          throw std::invalid_argument("interpolation nodes are not distinct");
        }
        lambda[j] /= diff;
      }
    }
  }
  return lambda;
}

}  // namespace

RowMatrix lagrange_derivative_matrix(std::span<const double> x) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto lambda = barycentric_weights(x);
  RowMatrix d = RowMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double diag = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) {
        d(i, j) = (lambda[j] / lambda[i]) / (x[i] - x[j]);
        diag -= d(i, j);
      }
    }
    d(i, i) = diag;
  }
  return d;
}

RowMatrix lagrange_interpolation_matrix(std::span<const double> from, std::span<const double> to) {
  const auto nf = static_cast<Eigen::Index>(from.size());
  const auto nt = static_cast<Eigen::Index>(to.size());
  const auto lambda = barycentric_weights(from);
  RowMatrix m = RowMatrix::Zero(nt, nf);
  for (Eigen::Index i = 0; i < nt; ++i) {
    Eigen::Index hit = -1;
    for (Eigen::Index j = 0; j < nf; ++j) {
      if (to[i] == from[j]) {
        hit = j;
      }
    }
    if (hit >= 0) {
      m(i, hit) = 1.0;
      continue;
    }
    double denom = 0.0;
    for (Eigen::Index j = 0; j < nf; ++j) {
      const double t = lambda[j] / (to[i] - from[j]);
      m(i, j) = t;
      denom += t;
    }
    m.row(i) /= denom;
  }
  return m;
}

SbpOp1D build_lgl_sbp(int p) {
  if (p < 1 || p > kMaxDegree) {
    throw std::invalid_argument("SBP degree must lie in [1, " + std::to_string(kMaxDegree) +
                                "], got " + std::to_string(p));
  }
  SbpOp1D op;
  op.degree = p;
  op.n = p + 1;
  lgl_nodes_weights(p, op.nodes, op.weights);
  const int n = op.n;
  const RowMatrix d = lagrange_derivative_matrix(op.nodes);
  RowMatrix q(n, n);
  for (int i = 0; i < n; ++i) {
    q.row(i) = op.weights[i] * d.row(i);
  }
  op.e_diag.assign(n, 0.0);
  op.e_diag.front() = -1.0;
  op.e_diag.back() = 1.0;
  op.S = 0.5 * (q - q.transpose());
  op.Q = op.S;
  op.Q(0, 0) += 0.5 * op.e_diag.front();
  op.Q(n - 1, n - 1) += 0.5 * op.e_diag.back();
  op.D.resize(n, n);
  for (int i = 0; i < n; ++i) {
    op.D.row(i) = op.Q.row(i) / op.weights[i];
  }
  return op;
}

SbpReport verify_sbp_definition(const SbpOp1D& op) {
  SbpReport r;
  r.degree = op.degree;
  const int n = op.n;
  for (int j = 0; j <= op.degree; ++j) {
    for (int i = 0; i < n; ++i) {
      double du = 0.0;
      for (int k = 0; k < n; ++k) {
        du += op.D(i, k) * std::pow(op.nodes[k], j);
      }
      const double exact = j == 0 ? 0.0 : j * std::pow(op.nodes[i], j - 1);
      r.accuracy = std::max(r.accuracy, std::abs(du - exact));
    }
  }
  RowMatrix qd(n, n);
  for (int i = 0; i < n; ++i) {
    qd.row(i) = op.weights[i] * op.D.row(i);
  }
  RowMatrix e = RowMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    e(i, i) = op.e_diag[i];
  }
  r.sbp = (qd + qd.transpose() - e).cwiseAbs().maxCoeff();
  const RowMatrix s = qd - 0.5 * e;
  r.skew = (s + s.transpose()).cwiseAbs().maxCoeff();
  for (int j = 0; j <= 2 * op.degree - 1; ++j) {
    double quad = 0.0;
    for (int i = 0; i < n; ++i) {
      quad += op.weights[i] * std::pow(op.nodes[i], j);
    }
    const double exact = j % 2 == 0 ? 2.0 / (j + 1.0) : 0.0;
    r.quadrature = std::max(r.quadrature, std::abs(quad - exact));
  }
  r.min_weight = *std::min_element(op.weights.begin(), op.weights.end());
  for (int i = 0; i < n; ++i) {
    r.node_symmetry = std::max(r.node_symmetry, std::abs(op.nodes[i] + op.nodes[n - 1 - i]));
  }
  return r;
}

TensorGrid::TensorGrid(const SbpOp1D& op, int width) : op_(&op), width_(width) {
  if (width < 1) {
    throw std::invalid_argument("tensor grid width must be positive");
  }
}

void TensorGrid::apply_derivative(int dir, std::span<const double> u, std::span<double> out) const {
  if (dir < 1 || dir > 3) {
    throw std::invalid_argument("direction must be 1, 2 or 3");
  }
  if (u.size() != size() || out.size() != size()) {
    throw std::invalid_argument("tensor field size mismatch");
  }
  const int n = this->n();
  const int w = width_;
  const std::size_t stride = direction_stride(dir - 1, n) * w;
  const RowMatrix& d = op_->D;
  // Enumerate line starts: all nodes whose index along dir is zero.
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      std::size_t base = 0;
      switch (dir) {
        case 1: base = (static_cast<std::size_t>(a) * n + b); break;
        case 2: base = (static_cast<std::size_t>(a) * n * n + b); break;
        default: base = (static_cast<std::size_t>(a) * n + b) * n; break;
      }
      base *= w;
      for (int i = 0; i < n; ++i) {
        double* o = out.data() + base + i * stride;
        for (int c = 0; c < w; ++c) {
          o[c] = 0.0;
        }
        for (int m = 0; m < n; ++m) {
          const double dim = d(i, m);
          const double* v = u.data() + base + m * stride;
          for (int c = 0; c < w; ++c) {
            o[c] += dim * v[c];
          }
        }
      }
    }
  }
}

void apply_tensor_derivative(const TensorGrid& grid, int dir, std::span<const double> u,
                             std::span<double> out) {
  grid.apply_derivative(dir, u, out);
}

}  // namespace ncsbp

namespace ncsbp {

void interpolate_face(const RowMatrix& interp, std::span<const double> in, int width,
                      std::span<double> out) {
  const auto nt = static_cast<int>(interp.rows());
  const auto nf = static_cast<int>(interp.cols());
  if (in.size() != static_cast<std::size_t>(nf * nf * width) ||
      out.size() != static_cast<std::size_t>(nt * nt * width)) {
    throw std::invalid_argument("face interpolation size mismatch");
  }
  std::vector<double> tmp(static_cast<std::size_t>(nt) * nf * width, 0.0);
  for (int a = 0; a < nt; ++a) {
    for (int c = 0; c < nf; ++c) {
      const double w = interp(a, c);
      if (w == 0.0) {
        continue;
      }
      for (int d = 0; d < nf; ++d) {
        for (int v = 0; v < width; ++v) {
          tmp[(a * nf + d) * width + v] += w * in[(c * nf + d) * width + v];
        }
      }
    }
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (int a = 0; a < nt; ++a) {
    for (int b = 0; b < nt; ++b) {
      for (int d = 0; d < nf; ++d) {
        const double w = interp(b, d);
        if (w == 0.0) {
          continue;
        }
        for (int v = 0; v < width; ++v) {
          out[(a * nt + b) * width + v] += w * tmp[(a * nf + d) * width + v];
        }
      }
    }
  }
}

void contract_volume(const RowMatrix& a1, const RowMatrix& a2, const RowMatrix& a3,
                     std::span<const double> in, int width, std::span<double> out) {
  const auto n1 = static_cast<std::size_t>(a1.cols());
  const auto n2 = static_cast<std::size_t>(a2.cols());
  const auto n3 = static_cast<std::size_t>(a3.cols());
  const auto m1 = static_cast<std::size_t>(a1.rows());
  const auto m2 = static_cast<std::size_t>(a2.rows());
  const auto m3 = static_cast<std::size_t>(a3.rows());
  const auto w = static_cast<std::size_t>(width);
  if (in.size() != n1 * n2 * n3 * w || out.size() != m1 * m2 * m3 * w) {
    throw std::invalid_argument("volume contraction size mismatch");
  }
  // along direction 3
  std::vector<double> t3(n1 * n2 * m3 * w, 0.0);
  for (std::size_t i = 0; i < n1 * n2; ++i) {
    for (std::size_t k = 0; k < m3; ++k) {
      for (std::size_t c = 0; c < n3; ++c) {
        const double f = a3(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
        for (std::size_t v = 0; v < w; ++v) {
          t3[(i * m3 + k) * w + v] += f * in[(i * n3 + c) * w + v];
        }
      }
    }
  }
  // along direction 2
  std::vector<double> t2(n1 * m2 * m3 * w, 0.0);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < m2; ++j) {
      for (std::size_t b = 0; b < n2; ++b) {
        const double f = a2(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b));
        for (std::size_t k = 0; k < m3 * w; ++k) {
          t2[(i * m2 + j) * m3 * w + k] += f * t3[(i * n2 + b) * m3 * w + k];
        }
      }
    }
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < m1; ++i) {
    for (std::size_t a = 0; a < n1; ++a) {
      const double f = a1(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
      for (std::size_t k = 0; k < m2 * m3 * w; ++k) {
        out[i * m2 * m3 * w + k] += f * t2[a * m2 * m3 * w + k];
      }
    }
  }
}

}  // namespace ncsbp
