#include "ncsbp/physics.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace ncsbp {

void GasModel::validate() const {
  if (!(gamma > 1.0) || !(R > 0.0) || !(Pr > 0.0) || !(mu >= 0.0) || !(T_inf > 0.0) || !(rho_inf > 0.0)) {
    throw std::invalid_argument("invalid gas model parameters");
  }
}

Primitive primitive(const State5& q, const GasModel& gas) {
  Primitive w;
  w.rho = q[0];
  if (!(w.rho > 0.0) || !std::isfinite(w.rho)) {
    std::ostringstream msg;
    msg << "non-admissible state: density " << q[0];
    throw AdmissibilityError(msg.str());
  }
  const double inv = 1.0 / w.rho;
  w.u = {q[1] * inv, q[2] * inv, q[3] * inv};
  const double ke = 0.5 * (w.u[0] * w.u[0] + w.u[1] * w.u[1] + w.u[2] * w.u[2]);
  w.T = (q[4] * inv - ke) / gas.cv();
  if (!(w.T > 0.0) || !std::isfinite(w.T)) {
    std::ostringstream msg;
    msg << "non-admissible state: temperature " << w.T;
    throw AdmissibilityError(msg.str());
  }
  w.p = w.rho * gas.R * w.T;
  return w;
}

State5 conserved(const Primitive& w, const GasModel& gas) {
  const double ke = 0.5 * (w.u[0] * w.u[0] + w.u[1] * w.u[1] + w.u[2] * w.u[2]);
  return {w.rho, w.rho * w.u[0], w.rho * w.u[1], w.rho * w.u[2], w.rho * (gas.cv() * w.T + ke)};
}

State5 conserved(double rho, const Vec3& u, double T, const GasModel& gas) {
  Primitive w;
  w.rho = rho;
  w.u = u;
  w.T = T;
  w.p = rho * gas.R * T;
  return conserved(w, gas);
}

double specific_entropy(const Primitive& w, const GasModel& gas) {
  return gas.cv() * std::log(w.T / gas.T_inf) - gas.R * std::log(w.rho / gas.rho_inf);
}

State5 entropy_vars(const Primitive& w, const GasModel& gas) {
  const double s = specific_entropy(w, gas);
  const double inv_t = 1.0 / w.T;
  const double u2 = w.u[0] * w.u[0] + w.u[1] * w.u[1] + w.u[2] * w.u[2];
  return {gas.cp() - s - 0.5 * u2 * inv_t, w.u[0] * inv_t, w.u[1] * inv_t, w.u[2] * inv_t, -inv_t};
}

EntropyPair entropy_and_vars(const State5& q, const GasModel& gas) {
  const Primitive w = primitive(q, gas);
  return {-w.rho * specific_entropy(w, gas), entropy_vars(w, gas)};
}

State5 conserved_from_entropy_vars(const State5& W, const GasModel& gas) {
  if (!(W[4] < 0.0)) {
    throw AdmissibilityError("entropy variables with non-negative last component");
  }
  Primitive w;
  w.T = -1.0 / W[4];
  w.u = {W[1] * w.T, W[2] * w.T, W[3] * w.T};
  const double u2 = w.u[0] * w.u[0] + w.u[1] * w.u[1] + w.u[2] * w.u[2];
  const double s = gas.cp() - W[0] - 0.5 * u2 / w.T;
  // s = cv log(T/T_inf) - R log(rho/rho_inf)
  w.rho = gas.rho_inf * std::exp((gas.cv() * std::log(w.T / gas.T_inf) - s) / gas.R);
  w.p = w.rho * gas.R * w.T;
  return conserved(w, gas);
}

State5 euler_flux(const Primitive& w, const GasModel& gas, const Vec3& n) {
  const double un = w.u[0] * n[0] + w.u[1] * n[1] + w.u[2] * n[2];
  const double u2 = w.u[0] * w.u[0] + w.u[1] * w.u[1] + w.u[2] * w.u[2];
  const double h = gas.cp() * w.T + 0.5 * u2;
  const double m = w.rho * un;
  return {m, m * w.u[0] + w.p * n[0], m * w.u[1] + w.p * n[1], m * w.u[2] + w.p * n[2], m * h};
}

State5 euler_flux(const State5& q, const GasModel& gas, int m) {
  Vec3 n{0.0, 0.0, 0.0};
  n.at(static_cast<std::size_t>(m)) = 1.0;
  return euler_flux(primitive(q, gas), gas, n);
}

EntropyFlux entropy_flux_and_potential(const State5& q, const GasModel& gas, int m) {
  const Primitive w = primitive(q, gas);
  const State5 W = entropy_vars(w, gas);
  Vec3 n{0.0, 0.0, 0.0};
  n.at(static_cast<std::size_t>(m)) = 1.0;
  const State5 f = euler_flux(w, gas, n);
  EntropyFlux r;
  r.F = -w.rho * specific_entropy(w, gas) * w.u[static_cast<std::size_t>(m)];
  double wf = 0.0;
  for (int k = 0; k < 5; ++k) {
    wf += W[k] * f[k];
  }
  r.psi = wf - r.F;
  return r;
}

State5 ec_flux(const State5& qa, const State5& qb, const GasModel& gas, const Vec3& n) {
  const FluxNode a = flux_node(primitive(qa, gas), gas);
  const FluxNode b = flux_node(primitive(qb, gas), gas);
  State5 out{};
  const double nn[3] = {n[0], n[1], n[2]};
  ec_flux(a, b, gas.gamma - 1.0, nn, out.data());
  return out;
}

void viscous_flux_from_primitive_gradient(const Primitive& w, const GasModel& gas, const Mat3& du,
                                          const Vec3& dT, double fv[3][5]) {
  const double mu = gas.mu;
  const double kappa = gas.kappa();
  const double div = du[0][0] + du[1][1] + du[2][2];
  for (int m = 0; m < 3; ++m) {
    fv[m][0] = 0.0;
    double work = 0.0;
    for (int i = 0; i < 3; ++i) {
      double tau = mu * (du[i][m] + du[m][i]);
      if (i == m) {
        tau -= (2.0 / 3.0) * mu * div;
      }
      fv[m][1 + i] = tau;
      work += tau * w.u[i];
    }
    fv[m][4] = work + kappa * dT[m];
  }
}

void viscous_flux_from_entropy_gradient(const Primitive& w, const GasModel& gas, const double dw[3][5],
                                        double fv[3][5]) {
  Mat3 du{};
  Vec3 dT{};
  const double t = w.T;
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      du[i][j] = t * (dw[j][1 + i] + w.u[i] * dw[j][4]);
    }
    dT[j] = t * t * dw[j][4];
  }
  viscous_flux_from_primitive_gradient(w, gas, du, dT, fv);
}

ViscousCoeffs viscous_coeffs(const State5& q, const GasModel& gas, const Mat3* metric, double jac) {
  const Primitive w = primitive(q, gas);
  const double mt = gas.mu * w.T;
  const double kt2 = gas.kappa() * w.T * w.T;
  const auto& u = w.u;
  const double u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
  ViscousCoeffs vc;
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  for (int m = 0; m < 3; ++m) {
    for (int j = 0; j < 3; ++j) {
      Mat5& c = vc.C[m][j];
      for (auto& row : c) {
        row.fill(0.0);
      }
      for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
          c[1 + i][1 + k] = mt * (delta(j, m) * delta(k, i) + delta(j, i) * delta(k, m) -
                                  (2.0 / 3.0) * delta(i, m) * delta(j, k));
        }
        c[1 + i][4] = mt * (u[i] * delta(j, m) + u[m] * delta(j, i) - (2.0 / 3.0) * delta(i, m) * u[j]);
      }
      for (int k = 0; k < 3; ++k) {
        c[4][1 + k] = mt * (delta(j, m) * u[k] + u[j] * delta(k, m) - (2.0 / 3.0) * u[m] * delta(j, k));
      }
      c[4][4] = mt * (u2 * delta(j, m) + u[m] * u[j] / 3.0) + kt2 * delta(j, m);
    }
  }
  if (metric != nullptr) {
    vc.curvilinear = true;
    const Mat3& ja = *metric;
    for (int l = 0; l < 3; ++l) {
      for (int a = 0; a < 3; ++a) {
        Mat5& ch = vc.Chat[l][a];
        for (auto& row : ch) {
          row.fill(0.0);
        }
        for (int m = 0; m < 3; ++m) {
          for (int j = 0; j < 3; ++j) {
            const double s = ja[l][m] * ja[a][j] / jac;
            for (int r = 0; r < 5; ++r) {
              for (int k = 0; k < 5; ++k) {
                ch[r][k] += s * vc.C[m][j][r][k];
              }
            }
          }
        }
      }
    }
  }
  return vc;
}

Mat5 dq_dw(const Primitive& w, const GasModel& gas) {
  // dQ/dW = A0 / R with A0 the classical symmetrizer for the (gamma - 1)-scaled entropy.
  const double rho = w.rho;
  const auto& u = w.u;
  const double u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
  const double e = rho * (gas.cv() * w.T + 0.5 * u2);
  const double h = (e + w.p) / rho;
  const double a2 = gas.gamma * w.p / rho;
  Mat5 m{};
  m[0][0] = rho;
  for (int i = 0; i < 3; ++i) {
    m[0][1 + i] = rho * u[i];
    m[1 + i][0] = rho * u[i];
    for (int k = 0; k < 3; ++k) {
      m[1 + i][1 + k] = rho * u[i] * u[k] + (i == k ? w.p : 0.0);
    }
    m[1 + i][4] = rho * u[i] * h;
    m[4][1 + i] = rho * u[i] * h;
  }
  m[0][4] = e;
  m[4][0] = e;
  m[4][4] = rho * h * h - a2 * w.p / (gas.gamma - 1.0);
  const double inv_r = 1.0 / gas.R;
  for (auto& row : m) {
    for (double& v : row) {
      v *= inv_r;
    }
  }
  return m;
}

Mat5 upwind_matrix(const Primitive& w, const GasModel& gas, const Vec3& n) {
  using M5 = Eigen::Matrix<double, 5, 5>;
  Mat5 out{};
  const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
  if (len == 0.0) {
    return out;
  }
  const Vec3 nh{n[0] / len, n[1] / len, n[2] / len};
  // tangents from the coordinate axis least aligned with the normal
  int axis = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(nh[k]) < std::abs(nh[axis])) {
      axis = k;
    }
  }
  Vec3 t1{};
  t1[axis] = 1.0;
  const double proj = nh[axis];
  for (int k = 0; k < 3; ++k) {
    t1[k] -= proj * nh[k];
  }
  const double t1n = std::sqrt(t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]);
  for (double& v : t1) {
    v /= t1n;
  }
  const Vec3 t2{nh[1] * t1[2] - nh[2] * t1[1], nh[2] * t1[0] - nh[0] * t1[2], nh[0] * t1[1] - nh[1] * t1[0]};

  const auto& u = w.u;
  const double u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
  const double c = std::sqrt(gas.gamma * gas.R * w.T);
  const double un = u[0] * nh[0] + u[1] * nh[1] + u[2] * nh[2];
  const double h = gas.cp() * w.T + 0.5 * u2;
  M5 r;
  for (int k = 0; k < 3; ++k) {
    r(1 + k, 0) = u[k] - c * nh[k];
    r(1 + k, 1) = u[k];
    r(1 + k, 2) = t1[k];
    r(1 + k, 3) = t2[k];
    r(1 + k, 4) = u[k] + c * nh[k];
  }
  r(0, 0) = 1.0;
  r(0, 1) = 1.0;
  r(0, 2) = 0.0;
  r(0, 3) = 0.0;
  r(0, 4) = 1.0;
  r(4, 0) = h - c * un;
  r(4, 1) = 0.5 * u2;
  r(4, 2) = u[0] * t1[0] + u[1] * t1[1] + u[2] * t1[2];
  r(4, 3) = u[0] * t2[0] + u[1] * t2[1] + u[2] * t2[2];
  r(4, 4) = h + c * un;
  const Eigen::Matrix<double, 5, 1> lam =
      (Eigen::Matrix<double, 5, 1>() << un - c, un, un, un, un + c).finished().cwiseAbs() * len;
  const Mat5 hm = dq_dw(w, gas);
  M5 hq;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      hq(i, j) = hm[i][j];
    }
  }
  const M5 k = r * lam.asDiagonal() * r.partialPivLu().solve(hq);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      out[i][j] = 0.5 * (k(i, j) + k(j, i));
    }
  }
  return out;
}

}  // namespace ncsbp
