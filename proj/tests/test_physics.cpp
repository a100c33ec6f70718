#include <cmath>
#include <random>

#include <doctest.h>

#include "ncsbp/physics.hpp"

using namespace ncsbp;

namespace {

GasModel test_gas() {
  GasModel g;
  g.gamma = 1.4;
  g.R = 0.8;
  g.Pr = 0.72;
  g.mu = 0.05;
  g.T_inf = 1.2;
  g.rho_inf = 0.9;
  return g;
}

struct RandomStates {
  std::mt19937_64 rng;
  explicit RandomStates(std::uint64_t seed) : rng(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  State5 next(const GasModel& gas) {
    const double rho = uniform(0.2, 3.0);
    const Vec3 u{uniform(-2.0, 2.0), uniform(-2.0, 2.0), uniform(-2.0, 2.0)};
    const double t = uniform(0.3, 4.0);
    return conserved(rho, u, t, gas);
  }
};

double entropy_of(const State5& q, const GasModel& gas) { return entropy_and_vars(q, gas).S; }

}  // namespace

TEST_CASE("reference state has zero entropy") {
  const GasModel gas = test_gas();
  const State5 q = conserved(gas.rho_inf, {0.0, 0.0, 0.0}, gas.T_inf, gas);
  const Primitive w = primitive(q, gas);
  CHECK(std::abs(specific_entropy(w, gas)) <= 1e-15);
  CHECK(std::abs(entropy_and_vars(q, gas).S) <= 1e-15);
}

TEST_CASE("non-admissible states are rejected") {
  const GasModel gas = test_gas();
  CHECK_THROWS_AS(primitive({-1.0, 0.0, 0.0, 0.0, 1.0}, gas), AdmissibilityError);
  CHECK_THROWS_AS(primitive({1.0, 2.0, 0.0, 0.0, 1.0}, gas), AdmissibilityError);
  CHECK_THROWS_AS(primitive({std::nan(""), 0.0, 0.0, 0.0, 1.0}, gas), AdmissibilityError);
  GasModel bad = gas;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("entropy variables are the gradient of the entropy") {
  const GasModel gas = test_gas();
  RandomStates gen(1);
  for (int s = 0; s < 200; ++s) {
    const State5 q = gen.next(gas);
    const State5 W = entropy_and_vars(q, gas).W;
    for (int k = 0; k < 5; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(q[k]));
      State5 a = q;
      State5 b = q;
      a[k] += h;
      b[k] -= h;
      const double fd = (entropy_of(a, gas) - entropy_of(b, gas)) / (2.0 * h);
      CHECK(std::abs(fd - W[k]) <= 1e-6 * std::max(1.0, std::abs(W[k])));
    }
    State5 dq;
    double wdq = 0.0;
    for (int k = 0; k < 5; ++k) {
      dq[k] = 1e-7 * gen.uniform(-1.0, 1.0) * std::max(1.0, std::abs(q[k]));
      wdq += W[k] * dq[k];
    }
    State5 qp = q;
    State5 qm = q;
    for (int k = 0; k < 5; ++k) {
      qp[k] += dq[k];
      qm[k] -= dq[k];
    }
    const double ds = 0.5 * (entropy_of(qp, gas) - entropy_of(qm, gas));
    CHECK(std::abs(ds - wdq) <= 1e-8 * std::max(std::abs(wdq), 1e-6));
  }
}

TEST_CASE("conserved and entropy variables round-trip") {
  const GasModel gas = test_gas();
  RandomStates gen(2);
  for (int s = 0; s < 500; ++s) {
    const State5 q = gen.next(gas);
    const State5 back = conserved_from_entropy_vars(entropy_and_vars(q, gas).W, gas);
    for (int k = 0; k < 5; ++k) {
      CHECK(std::abs(back[k] - q[k]) <= 1e-12 * std::max(1.0, std::abs(q[k])));
    }
  }
}

TEST_CASE("dq/dw is symmetric positive definite and matches finite differences") {
  const GasModel gas = test_gas();
  RandomStates gen(3);
  for (int s = 0; s < 50; ++s) {
    const State5 q = gen.next(gas);
    const Primitive w = primitive(q, gas);
    const Mat5 h = dq_dw(w, gas);
    const State5 W = entropy_vars(w, gas);
    Eigen::Matrix<double, 5, 5> m;
    for (int c = 0; c < 5; ++c) {
      const double step = 1e-6 * std::max(1.0, std::abs(W[c]));
      State5 a = W;
      State5 b = W;
      a[c] += step;
      b[c] -= step;
      const State5 qa = conserved_from_entropy_vars(a, gas);
      const State5 qb = conserved_from_entropy_vars(b, gas);
      for (int r = 0; r < 5; ++r) {
        const double fd = (qa[r] - qb[r]) / (2.0 * step);
        CHECK(std::abs(fd - h[r][c]) <= 1e-6 * std::max(1.0, std::abs(h[r][c])));
        m(r, c) = h[r][c];
      }
    }
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * m.cwiseAbs().maxCoeff());
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 5, 5>>(m).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("Euler flux structure") {
  const GasModel gas = test_gas();
  const State5 rest = conserved(1.3, {0.0, 0.0, 0.0}, 0.7, gas);
  const double p = primitive(rest, gas).p;
  const State5 f = euler_flux(rest, gas, 0);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == doctest::Approx(p));
  CHECK(f[2] == 0.0);
  CHECK(f[3] == 0.0);
  CHECK(f[4] == 0.0);
  RandomStates gen(4);
  for (int s = 0; s < 100; ++s) {
    const State5 q = gen.next(gas);
    const Primitive w = primitive(q, gas);
    const double enthalpy = gas.cp() * w.T + 0.5 * (w.u[0] * w.u[0] + w.u[1] * w.u[1] + w.u[2] * w.u[2]);
    CHECK(std::abs(enthalpy - (q[4] + w.p) / q[0]) <= 1e-12 * enthalpy);
    for (int m = 0; m < 3; ++m) {
      const State5 fm = euler_flux(q, gas, m);
      CHECK(fm[0] == doctest::Approx(q[1 + m]));
      CHECK(std::abs(fm[4] - q[1 + m] * enthalpy) <= 1e-12 * std::max(1.0, std::abs(fm[4])));
    }
  }
}

TEST_CASE("entropy flux and potential") {
  const GasModel gas = test_gas();
  const State5 rest = conserved(1.1, {0.0, 0.0, 0.0}, 1.7, gas);
  const State5 W = entropy_and_vars(rest, gas).W;
  const double p = primitive(rest, gas).p;
  for (int m = 0; m < 3; ++m) {
    const EntropyFlux e = entropy_flux_and_potential(rest, gas, m);
    CHECK(e.F == 0.0);
    CHECK(e.psi == doctest::Approx(W[1 + m] * p));
  }
  RandomStates gen(5);
  for (int s = 0; s < 100; ++s) {
    const State5 q = gen.next(gas);
    for (int m = 0; m < 3; ++m) {
      const EntropyFlux e = entropy_flux_and_potential(q, gas, m);
      CHECK(std::abs(e.psi - gas.R * q[1 + m]) <= 1e-12 * std::max(1.0, std::abs(q[1 + m])));
    }
  }
}

TEST_CASE("entropy flux is compatible along a smooth state family") {
  const GasModel gas = test_gas();
  auto state = [&](double s) {
    return conserved(1.0 + 0.3 * std::sin(s), {0.4 * std::cos(s), -0.2 + 0.1 * s, 0.3 * s * s}, 1.0 + 0.2 * s,
                     gas);
  };
  const double h = 1e-5;
  for (const double s : {-0.7, 0.1, 0.9}) {
    const State5 w = entropy_and_vars(state(s), gas).W;
    for (int m = 0; m < 3; ++m) {
      const State5 fp = euler_flux(state(s + h), gas, m);
      const State5 fm = euler_flux(state(s - h), gas, m);
      double lhs = 0.0;
      for (int k = 0; k < 5; ++k) {
        lhs += w[k] * (fp[k] - fm[k]) / (2.0 * h);
      }
      const double rhs =
          (entropy_flux_and_potential(state(s + h), gas, m).F - entropy_flux_and_potential(state(s - h), gas, m).F) /
          (2.0 * h);
      CHECK(std::abs(lhs - rhs) <= 1e-6);
    }
  }
}

TEST_CASE("two-point flux: consistency, symmetry and entropy conservation") {
  const GasModel gas = test_gas();
  RandomStates gen(6);
  for (int s = 0; s < 50; ++s) {
    const State5 q = gen.next(gas);
    for (int m = 0; m < 3; ++m) {
      Vec3 n{0.0, 0.0, 0.0};
      n[m] = 1.0;
      const State5 fc = ec_flux(q, q, gas, n);
      const State5 fe = euler_flux(q, gas, m);
      for (int k = 0; k < 5; ++k) {
        CHECK(std::abs(fc[k] - fe[k]) <= 1e-12 * std::max(1.0, std::abs(fe[k])));
      }
    }
  }
  double worst = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const State5 a = gen.next(gas);
    // include nearly equal pairs to exercise the logarithmic-mean guard
    State5 b = gen.next(gas);
    if (s % 4 == 0) {
      b = conserved(primitive(a, gas).rho * (1.0 + 1e-6), primitive(a, gas).u, primitive(a, gas).T * (1.0 - 1e-7),
                    gas);
    }
    const Vec3 n{gen.uniform(-1.0, 1.0), gen.uniform(-1.0, 1.0), gen.uniform(-1.0, 1.0)};
    const State5 fab = ec_flux(a, b, gas, n);
    const State5 fba = ec_flux(b, a, gas, n);
    const State5 wa = entropy_and_vars(a, gas).W;
    const State5 wb = entropy_and_vars(b, gas).W;
    double jump = 0.0;
    double scale = 0.0;
    for (int k = 0; k < 5; ++k) {
      CHECK(fab[k] == doctest::Approx(fba[k]).epsilon(1e-14));
      jump += (wa[k] - wb[k]) * fab[k];
      scale += std::abs(wa[k] * fab[k]);
    }
    double psi = 0.0;
    for (int m = 0; m < 3; ++m) {
      psi += n[m] * gas.R * (a[1 + m] - b[1 + m]);
    }
    worst = std::max(worst, std::abs(jump - psi) / std::max(1.0, scale));
    const Primitive pa = primitive(a, gas);
    const Primitive pb = primitive(b, gas);
    const double un = 0.5 * ((pa.u[0] + pb.u[0]) * n[0] + (pa.u[1] + pb.u[1]) * n[1] + (pa.u[2] + pb.u[2]) * n[2]);
    CHECK(fab[0] == doctest::Approx(ln_mean(pa.rho, pb.rho) * un).epsilon(1e-13));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("logarithmic mean guard is continuous") {
  for (const double a : {0.5, 1.0, 7.0}) {
    for (const double rel : {1e-3, 1e-4 * 0.999, 1e-4 * 1.001, 1e-8, 0.0}) {
      const double b = a * (1.0 + rel);
      const double ref = rel == 0.0 ? a : a * rel / std::log1p(rel);
      CHECK(ln_mean(a, b) == doctest::Approx(ref).epsilon(1e-14));
    }
  }
}

TEST_CASE("viscous coefficient blocks: symmetry, flux equivalence, semi-definiteness") {
  const GasModel gas = test_gas();
  RandomStates gen(7);
  for (int s = 0; s < 20; ++s) {
    const State5 q = gen.next(gas);
    const ViscousCoeffs vc = viscous_coeffs(q, gas);
    for (int m = 0; m < 3; ++m) {
      for (int j = 0; j < 3; ++j) {
        for (int r = 0; r < 5; ++r) {
          for (int c = 0; c < 5; ++c) {
            CHECK(std::abs(vc.C[m][j][r][c] - vc.C[j][m][c][r]) <= 1e-13);
          }
        }
      }
    }
    Eigen::Matrix<double, 15, 15> big;
    for (int m = 0; m < 3; ++m) {
      for (int j = 0; j < 3; ++j) {
        for (int r = 0; r < 5; ++r) {
          for (int c = 0; c < 5; ++c) {
            big(5 * m + r, 5 * j + c) = vc.C[m][j][r][c];
          }
        }
      }
    }
    for (int z = 0; z < 500; ++z) {
      Eigen::Matrix<double, 15, 1> v;
      for (auto& x : v) {
        x = gen.uniform(-1.0, 1.0);
      }
      CHECK(v.dot(big * v) >= -1e-12);
    }
  }

  // smooth field x -> q(x): entropy-variable form against stresses and heat flux
  auto field = [&](const Vec3& x) {
    return conserved(1.0 + 0.2 * std::sin(x[0] + 2.0 * x[2]),
                     {0.3 * std::cos(x[1]), 0.5 * x[0] * x[2], -0.4 + 0.2 * std::sin(x[0] * x[1])},
                     1.1 + 0.3 * std::cos(x[0] - x[1] + x[2]), gas);
  };
  const Vec3 x0{0.3, -0.4, 0.6};
  const double h = 1e-5;
  const Primitive w0 = primitive(field(x0), gas);
  const ViscousCoeffs vc = viscous_coeffs(field(x0), gas);
  double dw[3][5];
  Mat3 du{};
  Vec3 dT{};
  for (int j = 0; j < 3; ++j) {
    Vec3 a = x0;
    Vec3 b = x0;
    a[j] += h;
    b[j] -= h;
    const Primitive pa = primitive(field(a), gas);
    const Primitive pb = primitive(field(b), gas);
    const State5 wa = entropy_vars(pa, gas);
    const State5 wb = entropy_vars(pb, gas);
    for (int k = 0; k < 5; ++k) {
      dw[j][k] = (wa[k] - wb[k]) / (2.0 * h);
    }
    for (int i = 0; i < 3; ++i) {
      du[i][j] = (pa.u[i] - pb.u[i]) / (2.0 * h);
    }
    dT[j] = (pa.T - pb.T) / (2.0 * h);
  }
  double ref[3][5];
  viscous_flux_from_primitive_gradient(w0, gas, du, dT, ref);
  double via_w[3][5];
  viscous_flux_from_entropy_gradient(w0, gas, dw, via_w);
  for (int m = 0; m < 3; ++m) {
    for (int k = 0; k < 5; ++k) {
      double c = 0.0;
      for (int j = 0; j < 3; ++j) {
        for (int l = 0; l < 5; ++l) {
          c += vc.C[m][j][k][l] * dw[j][l];
        }
      }
      CHECK(std::abs(c - ref[m][k]) <= 1e-6);
      CHECK(std::abs(via_w[m][k] - ref[m][k]) <= 1e-6);
    }
  }
  // stress tensor entries directly
  const double div = du[0][0] + du[1][1] + du[2][2];
  CHECK(ref[0][1] == doctest::Approx(gas.mu * (2.0 * du[0][0] - 2.0 / 3.0 * div)));
  CHECK(ref[1][1] == doctest::Approx(gas.mu * (du[0][1] + du[1][0])));
  CHECK(ref[0][0] == 0.0);
}

TEST_CASE("curvilinear blocks are symmetric under a shared metric") {
  const GasModel gas = test_gas();
  RandomStates gen(8);
  const State5 q = gen.next(gas);
  Mat3 metric{};
  for (auto& row : metric) {
    for (double& v : row) {
      v = gen.uniform(-0.3, 0.3);
    }
  }
  for (int l = 0; l < 3; ++l) {
    metric[l][l] += 1.0;
  }
  const ViscousCoeffs vc = viscous_coeffs(q, gas, &metric, 0.9);
  CHECK(vc.curvilinear);
  for (int l = 0; l < 3; ++l) {
    for (int a = 0; a < 3; ++a) {
      for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 5; ++c) {
          CHECK(std::abs(vc.Chat[l][a][r][c] - vc.Chat[a][l][c][r]) <= 1e-13);
          double ref = 0.0;
          for (int m = 0; m < 3; ++m) {
            for (int j = 0; j < 3; ++j) {
              ref += metric[l][m] * vc.C[m][j][r][c] * metric[a][j] / 0.9;
            }
          }
          CHECK(std::abs(vc.Chat[l][a][r][c] - ref) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("wave speed") {
  const GasModel gas = test_gas();
  const Primitive w = primitive(conserved(1.0, {1.0, 2.0, -1.0}, 2.0, gas), gas);
  const double c = std::sqrt(gas.gamma * gas.R * 2.0);
  CHECK(max_wave_speed(w, gas, {0.0, 2.0, 0.0}) == doctest::Approx(4.0 + 2.0 * c));
}
