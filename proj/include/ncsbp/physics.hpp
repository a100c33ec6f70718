#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ncsbp/geometry.hpp"

namespace ncsbp {

using State5 = std::array<double, 5>;
using Mat5 = std::array<std::array<double, 5>, 5>;

/// Calorically perfect gas with constant viscosity.
struct GasModel {
  double gamma = 1.4;
  double R = 1.0;
  double Pr = 0.72;
  double mu = 0.0;
  double T_inf = 1.0;
  double rho_inf = 1.0;

  double cv() const { return R / (gamma - 1.0); }
  double cp() const { return gamma * R / (gamma - 1.0); }
  double kappa() const { return mu * cp() / Pr; }
  void validate() const;
};

class AdmissibilityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Primitive {
  double rho = 1.0;
  Vec3 u{0.0, 0.0, 0.0};
  double T = 1.0;
  double p = 1.0;
};

/// Throws AdmissibilityError when rho <= 0 or T <= 0 (or non-finite).
Primitive primitive(const State5& q, const GasModel& gas);
State5 conserved(const Primitive& w, const GasModel& gas);
State5 conserved(double rho, const Vec3& u, double T, const GasModel& gas);

/// Specific entropy s = R/(gamma-1) log(T/T_inf) - R log(rho/rho_inf).
double specific_entropy(const Primitive& w, const GasModel& gas);

struct EntropyPair {
  double S = 0.0;
  State5 W{};
};

/// S = -rho s and W = dS/dQ = [cp - s - |u|^2/(2T), u/T, -1/T].
EntropyPair entropy_and_vars(const State5& q, const GasModel& gas);
State5 entropy_vars(const Primitive& w, const GasModel& gas);
State5 conserved_from_entropy_vars(const State5& W, const GasModel& gas);

/// Inviscid flux in Cartesian direction m (0-based).
State5 euler_flux(const State5& q, const GasModel& gas, int m);
/// Inviscid flux contracted with a (not necessarily unit) vector n.
State5 euler_flux(const Primitive& w, const GasModel& gas, const Vec3& n);

struct EntropyFlux {
  double F = 0.0;    // -rho s u_m
  double psi = 0.0;  // W^T f_m - F_m
};
EntropyFlux entropy_flux_and_potential(const State5& q, const GasModel& gas, int m);

/// Logarithmic mean (a - b)/(log a - log b) with a series guard for nearly equal arguments.
inline double ln_mean(double a, double b) {
  const double f = (a - b) / (a + b);
  const double u = f * f;
  double ratio;  // f / atanh(f)
  if (std::abs(f) < 1e-4) {
    ratio = 1.0 / (1.0 + u * (1.0 / 3.0 + u * (1.0 / 5.0 + u * (1.0 / 7.0))));
  } else {
    ratio = f / std::atanh(f);
  }
  return 0.5 * (a + b) * ratio;
}

/// Per-node quantities used by the two-point flux.
struct FluxNode {
  double rho;
  double u[3];
  double p;
  double beta;  // 1 / (2 R T)
  double u2;    // |u|^2
};

inline FluxNode flux_node(const Primitive& w, const GasModel& gas) {
  FluxNode n{};
  n.rho = w.rho;
  n.u[0] = w.u[0];
  n.u[1] = w.u[1];
  n.u[2] = w.u[2];
  n.p = w.p;
  n.beta = 0.5 / (gas.R * w.T);
  n.u2 = w.u[0] * w.u[0] + w.u[1] * w.u[1] + w.u[2] * w.u[2];
  return n;
}

/// Entropy-conservative two-point flux (logarithmic means of density and inverse
/// temperature) contracted with n; result written to out[0..4].
inline void ec_flux(const FluxNode& a, const FluxNode& b, double gm1, const double n[3], double* out) {
  const double rho_ln = ln_mean(a.rho, b.rho);
  const double beta_ln = ln_mean(a.beta, b.beta);
  const double ub0 = 0.5 * (a.u[0] + b.u[0]);
  const double ub1 = 0.5 * (a.u[1] + b.u[1]);
  const double ub2 = 0.5 * (a.u[2] + b.u[2]);
  const double p_hat = 0.5 * (a.rho + b.rho) / (a.beta + b.beta);
  const double un = ub0 * n[0] + ub1 * n[1] + ub2 * n[2];
  const double f0 = rho_ln * un;
  const double f1 = f0 * ub0 + p_hat * n[0];
  const double f2 = f0 * ub1 + p_hat * n[1];
  const double f3 = f0 * ub2 + p_hat * n[2];
  const double u2_avg = 0.5 * (a.u2 + b.u2);
  out[0] = f0;
  out[1] = f1;
  out[2] = f2;
  out[3] = f3;
  out[4] = f0 * (0.5 / (gm1 * beta_ln) - 0.5 * u2_avg) + ub0 * f1 + ub1 * f2 + ub2 * f3;
}

State5 ec_flux(const State5& qa, const State5& qb, const GasModel& gas, const Vec3& n);

/// Cartesian viscous fluxes F^V_m (rows m) from velocity gradient du[i][j] = du_i/dx_j and dT.
void viscous_flux_from_primitive_gradient(const Primitive& w, const GasModel& gas, const Mat3& du,
                                          const Vec3& dT, double fv[3][5]);

/// Cartesian viscous fluxes from entropy-variable gradients dw[j][k] = dW_k/dx_j.
void viscous_flux_from_entropy_gradient(const Primitive& w, const GasModel& gas, const double dw[3][5],
                                        double fv[3][5]);

struct ViscousCoeffs {
  std::array<std::array<Mat5, 3>, 3> C{};     // C[m][j]
  std::array<std::array<Mat5, 3>, 3> Chat{};  // Chat[l][a], filled when metrics are given
  bool curvilinear = false;
};

/// Explicit coefficient blocks with F^V_m = sum_j C_mj dW/dx_j; with metrics also
/// Chat_la = (1/J) sum_{m,j} (J dxi_l/dx_m) C_mj (J dxi_a/dx_j).
ViscousCoeffs viscous_coeffs(const State5& q, const GasModel& gas, const Mat3* metric = nullptr,
                             double jac = 1.0);

/// dQ/dW, symmetric positive definite.
Mat5 dq_dw(const Primitive& w, const GasModel& gas);

/// |A_n| dQ/dW with A_n the flux Jacobian along n (length included): the symmetric
/// positive semi-definite Roe-type dissipation matrix acting on entropy-variable jumps.
Mat5 upwind_matrix(const Primitive& w, const GasModel& gas, const Vec3& n);

/// |u . n| + c |n|.
inline double max_wave_speed(const Primitive& w, const GasModel& gas, const Vec3& n) {
  const double nn = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
  const double un = w.u[0] * n[0] + w.u[1] * n[1] + w.u[2] * n[2];
  return std::abs(un) + std::sqrt(gas.gamma * gas.R * w.T) * nn;
}

}  // namespace ncsbp
