#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ncsbp/config.hpp"
#include "ncsbp/field.hpp"
#include "ncsbp/geometry.hpp"
#include "ncsbp/physics.hpp"
#include "ncsbp/semidiscretization.hpp"
#include "ncsbp/timeloop.hpp"

namespace ncsbp {

/// Steady viscous shock (Pr = 3/4) translated with the downstream velocity so the
/// downstream gas is at rest. Upstream state rho = T = 1 moving at unit speed in the shock frame.
struct ViscousShockParams {
  double mach = 2.5;
  double reynolds = 10.0;
  double gamma = 1.4;
  double prandtl = 0.75;

  double mass_flow = 1.0;  // rho u, shock frame
  double u_left = 1.0;     // upstream velocity, shock frame
  double u_right = 0.0;    // downstream velocity, shock frame
  double v_f = 0.0;        // u_right / u_left
  double alpha = 0.0;
  double total_enthalpy = 0.0;
  double shock_speed = 0.0;  // lab-frame shock velocity
  double shift = 0.0;        // velocity added to shock-frame velocities

  static ViscousShockParams standard();
  GasModel gas() const;
  void validate() const;
};

/// V in (V_f, 1) solving the implicit relation at shock-frame coordinate xi.
double viscous_shock_profile(double xi, const ViscousShockParams& p);
/// Residual of the implicit relation.
double viscous_shock_relation(double xi, double v, const ViscousShockParams& p);

State5 viscous_shock_exact(const Vec3& x, double t, const ViscousShockParams& p);
/// Exact Cartesian viscous fluxes fv[m][k].
void viscous_shock_viscous_flux(const Vec3& x, double t, const ViscousShockParams& p, double fv[3][5]);

struct TaylorGreenParams {
  double mach = 0.05;
  double reynolds = 1600.0;
  double gamma = 1.4;
  double prandtl = 0.71;
  double p0 = 1.0;
  double t0 = 1.0;
  double v0 = 1.0;
  double length = 1.0;

  double rho0() const { return gamma * mach * mach; }
  GasModel gas() const;
};

State5 tgv_initial_condition(const Vec3& x, const TaylorGreenParams& p);

struct ErrorNorms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double volume = 0.0;
};

/// Volume-scaled discrete norms of (component of u) - exact over the mesh.
ErrorNorms error_norms(const SolutionField& u, int component, const std::function<double(const Vec3&)>& exact,
                       std::span<const ElementGeometry> geom, const OperatorSet& ops);

/// log(e_i / e_{i-1}) / log(grid_i / grid_{i-1}); negative when converging.
double convergence_rate(double e_coarse, double e_fine, int grid_coarse, int grid_fine);

/// Mesh, operators, geometry and Navier-Stokes discretization for one configuration.
struct NsSetup {
  std::shared_ptr<const OperatorSet> ops;
  GeometryStats stats;
  std::unique_ptr<NavierStokesDiscretization> disc;
};

NsSetup make_ns_setup(const MeshSpec& spec, const GasModel& gas, const SchemeConfig& scheme,
                      NavierStokesDiscretization::Provider exterior = {}, bool certify = true);

/// Provider returning the viscous-shock state and its exact viscous fluxes.
NavierStokesDiscretization::Provider viscous_shock_provider(const ViscousShockParams& p);

/// Monitor observer for Navier-Stokes fields (entropy, kinetic energy, conserved totals and
/// the entropy contraction of the RHS).
Observer ns_observer(const NavierStokesDiscretization& disc, bool with_entropy_rate = true);

/// Wraps the discretization as a time-integrator RHS on flat state vectors.
DormandPrince::Rhs ns_rhs(const NavierStokesDiscretization& disc);

struct ConvergenceOptions {
  int p = 1;
  bool mixed = false;
  std::vector<int> grids{4, 8, 16};
  std::uint64_t seed = 7;
  double t_end = 0.5;
  double amplitude = 1.0 / 15.0;
  bool slab = false;  // one element across x2 and x3 with periodic faces there
  SchemeConfig scheme;
  IntegratorConfig integrator;
  bool verbose = false;
};

struct ConvergenceRow {
  int grid = 0;
  ErrorNorms error;
  double rate_l1 = 0.0;
  double rate_l2 = 0.0;
  double rate_linf = 0.0;
  bool has_rate = false;
  long steps = 0;
  long rejects = 0;
  double seconds = 0.0;
  std::string status;
};

struct ConvergenceReport {
  ViscousShockParams params;
  ConvergenceOptions options;
  std::vector<ConvergenceRow> rows;

  std::string header() const;
  void write_csv(const std::string& path) const;
  std::string table() const;
};

ConvergenceReport run_convergence_study(const ConvergenceOptions& opt,
                                        const ViscousShockParams& params = ViscousShockParams::standard());

struct FreestreamOptions {
  int grid = 4;
  int p = 2;
  bool mixed = true;
  std::uint64_t seed = 7;
  double amplitude = 1.0 / 15.0;
  BoundaryKind boundary = BoundaryKind::kExactSolution;
  SchemeConfig scheme;
  double mu = 0.01;
  State5 state{1.0, 0.3, -0.2, 0.1, 2.5};
};

struct FreestreamReport {
  GeometryStats stats;
  bool certified = false;
  double rhs_max = 0.0;  // ||dq/dt||_inf for the constant state
  double watertight = 0.0;
  std::size_t elements = 0;
  std::size_t dofs = 0;
};

FreestreamReport freestream_check(const FreestreamOptions& opt);

struct TgvOptions {
  TaylorGreenParams params;
  int cells = 4;
  int p_min = 2;
  int p_max = 3;
  std::uint64_t seed = 7;
  double amplitude = 0.0;
  SchemeConfig scheme;
  IntegratorConfig integrator;
  bool entropy_rate = true;  // evaluate the entropy contraction at monitor points
};

struct TgvRun {
  NsSetup setup;
  IntegrationResult result;
};

/// Periodic box [-pi L, pi L]^3 with seeded degrees in [p_min, p_max].
MeshSpec tgv_mesh_spec(const TgvOptions& opt);
TgvRun run_tgv(const TgvOptions& opt);

/// Readers for the run configuration file; absent keys keep the defaults.
SchemeConfig scheme_from_config(const KeyValueConfig& cfg, SchemeConfig base = {});
IntegratorConfig integrator_from_config(const KeyValueConfig& cfg, IntegratorConfig base = {});
TgvOptions tgv_options_from_config(const KeyValueConfig& cfg);

/// Mesh description (spec, degrees, control points) as JSON text.
std::string mesh_to_json(const MeshTopology& mesh);

}  // namespace ncsbp
