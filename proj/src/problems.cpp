#include "ncsbp/problems.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ncsbp {

ViscousShockParams ViscousShockParams::standard() {
  ViscousShockParams p;
  p.validate();
  const double g = p.gamma;
  const double m2 = p.mach * p.mach;
  p.u_left = 1.0;
  p.mass_flow = 1.0;
  p.v_f = ((g - 1.0) * m2 + 2.0) / ((g + 1.0) * m2);
  p.u_right = p.v_f * p.u_left;
  const GasModel gas = p.gas();
  p.alpha = 2.0 * g / (g + 1.0) * gas.mu / (p.prandtl * p.mass_flow);
  p.total_enthalpy = gas.cp() * 1.0 + 0.5 * p.u_left * p.u_left;
  p.shift = -p.u_right;
  p.shock_speed = p.shift;
  return p;
}

GasModel ViscousShockParams::gas() const {
  GasModel gas;
  gas.gamma = gamma;
  gas.R = 1.0 / (gamma * mach * mach);
  gas.Pr = prandtl;
  gas.mu = 1.0 / reynolds;
  return gas;
}

void ViscousShockParams::validate() const {
  if (!(mach > 1.0) || !(reynolds > 0.0) || !(gamma > 1.0) || !(prandtl > 0.0)) {
    throw std::invalid_argument("invalid viscous shock parameters");
  }
}

double viscous_shock_relation(double xi, double v, const ViscousShockParams& p) {
  const double k = (1.0 + p.v_f) / (1.0 - p.v_f);
  return xi - 0.5 * p.alpha *
                  (std::log(std::abs((v - 1.0) * (v - p.v_f))) + k * std::log(std::abs((v - 1.0) / (v - p.v_f))));
}

double viscous_shock_profile(double xi, const ViscousShockParams& p) {
  if (!(p.v_f > 0.0 && p.v_f < 1.0) || !(p.alpha > 0.0)) {
    throw std::invalid_argument("viscous shock parameters not initialized");
  }
  // the relation increases monotonically in V on (V_f, 1)
  double lo = p.v_f;
  double hi = 1.0;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      break;
    }
    const double f = viscous_shock_relation(xi, mid, p);
    if (f > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

struct ShockLocal {
  double u_sf;
  double du;
  double rho;
  double T;
  double u_lab;
};

ShockLocal shock_local(const Vec3& x, double t, const ViscousShockParams& p) {
  const double xi = x[0] - p.shock_speed * t;
  const double v = viscous_shock_profile(xi, p);
  const GasModel gas = p.gas();
  ShockLocal s{};
  s.u_sf = p.u_left * v;
  s.du = p.u_left * (v - 1.0) * (v - p.v_f) / (p.alpha * v);
  s.rho = p.mass_flow / s.u_sf;
  s.T = (p.total_enthalpy - 0.5 * s.u_sf * s.u_sf) / gas.cp();
  s.u_lab = s.u_sf + p.shift;
  return s;
}

}  // namespace

State5 viscous_shock_exact(const Vec3& x, double t, const ViscousShockParams& p) {
  const ShockLocal s = shock_local(x, t, p);
  return conserved(s.rho, {s.u_lab, 0.0, 0.0}, s.T, p.gas());
}

void viscous_shock_viscous_flux(const Vec3& x, double t, const ViscousShockParams& p, double fv[3][5]) {
  const ShockLocal s = shock_local(x, t, p);
  const GasModel gas = p.gas();
  const double dT = -s.u_sf * s.du / gas.cp();
  const double tau11 = 4.0 / 3.0 * gas.mu * s.du;
  const double tau22 = -2.0 / 3.0 * gas.mu * s.du;
  for (int m = 0; m < 3; ++m) {
    for (int k = 0; k < 5; ++k) {
      fv[m][k] = 0.0;
    }
  }
  fv[0][1] = tau11;
  fv[0][4] = tau11 * s.u_lab + gas.kappa() * dT;
  fv[1][2] = tau22;
  fv[2][3] = tau22;
}

GasModel TaylorGreenParams::gas() const {
  GasModel gas;
  gas.gamma = gamma;
  gas.R = p0 / (rho0() * t0);
  gas.Pr = prandtl;
  gas.mu = rho0() * v0 * length / reynolds;
  gas.T_inf = t0;
  gas.rho_inf = rho0();
  return gas;
}

State5 tgv_initial_condition(const Vec3& x, const TaylorGreenParams& p) {
  const double l = p.length;
  const double a = x[0] / l;
  const double b = x[1] / l;
  const double c = x[2] / l;
  const Vec3 u{p.v0 * std::sin(a) * std::cos(b) * std::cos(c), -p.v0 * std::cos(a) * std::sin(b) * std::cos(c),
               0.0};
  const double rho0 = p.rho0();
  const double pressure = p.p0 + rho0 * p.v0 * p.v0 / 16.0 * (std::cos(2.0 * a) + std::cos(2.0 * b)) *
                                     (std::cos(2.0 * c) + 2.0);
  const GasModel gas = p.gas();
  const double rho = pressure / (gas.R * p.t0);
  return conserved(rho, u, p.t0, gas);
}

ErrorNorms error_norms(const SolutionField& u, int component, const std::function<double(const Vec3&)>& exact,
                       std::span<const ElementGeometry> geom, const OperatorSet& ops) {
  if (component < 0 || component >= u.width()) {
    throw std::invalid_argument("error norm component out of range");
  }
  ErrorNorms r;
  double s1 = 0.0;
  double s2 = 0.0;
  const auto w = static_cast<std::size_t>(u.width());
  for (std::size_t e = 0; e < geom.size(); ++e) {
    const auto& g = geom[e];
    const auto& pw = ops.op(g.degree).weights;
    const int n = static_cast<int>(pw.size());
    const auto ue = u.element(e);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      const int i1 = static_cast<int>(i) / (n * n);
      const int i2 = (static_cast<int>(i) / n) % n;
      const int i3 = static_cast<int>(i) % n;
      const double mj = pw[i1] * pw[i2] * pw[i3] * g.jac[i];
      const double d = std::abs(ue[i * w + static_cast<std::size_t>(component)] - exact(g.x[i]));
      r.volume += mj;
      s1 += mj * d;
      s2 += mj * d * d;
      r.linf = std::max(r.linf, d);
    }
  }
  r.l1 = s1 / r.volume;
  r.l2 = std::sqrt(s2 / r.volume);
  return r;
}

double convergence_rate(double e_coarse, double e_fine, int grid_coarse, int grid_fine) {
  return std::log(e_fine / e_coarse) / std::log(static_cast<double>(grid_fine) / grid_coarse);
}

NsSetup make_ns_setup(const MeshSpec& spec, const GasModel& gas, const SchemeConfig& scheme,
                      NavierStokesDiscretization::Provider exterior, bool certify) {
  gas.validate();
  NsSetup s;
  s.ops = std::make_shared<const OperatorSet>(spec.p_min, spec.p_max);
  MeshTopology mesh = generate_perturbed_mesh(spec);
  auto geom = build_geometry(mesh, *s.ops, certify, &s.stats);
  NavierStokesPolicy policy;
  policy.gas = gas;
  s.disc = std::make_unique<NavierStokesDiscretization>(std::move(mesh), std::move(geom), s.ops, scheme, policy,
                                                         std::move(exterior));
  return s;
}

NavierStokesDiscretization::Provider viscous_shock_provider(const ViscousShockParams& p) {
  return [p](const Vec3& x, double t, double* q, double* fv) {
    const State5 s = viscous_shock_exact(x, t, p);
    for (int k = 0; k < 5; ++k) {
      q[k] = s[k];
    }
    double f[3][5];
    viscous_shock_viscous_flux(x, t, p, f);
    for (int m = 0; m < 3; ++m) {
      for (int k = 0; k < 5; ++k) {
        fv[m * 5 + k] = f[m][k];
      }
    }
  };
}

DormandPrince::Rhs ns_rhs(const NavierStokesDiscretization& disc) {
  auto q = std::make_shared<SolutionField>(disc.make_field());
  auto r = std::make_shared<SolutionField>(disc.make_field());
  return [&disc, q, r](double t, std::span<const double> y, std::span<double> dydt) {
    std::copy(y.begin(), y.end(), q->values().begin());
    disc.rhs(*q, t, *r);
    std::copy(r->values().begin(), r->values().end(), dydt.begin());
  };
}

Observer ns_observer(const NavierStokesDiscretization& disc, bool with_entropy_rate) {
  return [&disc, with_entropy_rate](double t, std::span<const double> y) {
    SolutionField q = disc.make_field();
    std::copy(y.begin(), y.end(), q.values().begin());
    MonitorRow row;
    row.t = t;
    row.entropy = disc.total_entropy(q);
    row.kinetic_energy = disc.integrate_scalar(q, [](std::span<const double> v) {
      return 0.5 * (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]) / v[0];
    });
    const auto totals = disc.integrate(q);
    row.conserved.assign(totals.begin(), totals.end());
    row.mass = totals[0];
    if (with_entropy_rate) {
      SolutionField r = disc.make_field();
      disc.rhs(q, t, r);
      row.entropy_rate = disc.entropy_contraction(q, r);
    }
    return row;
  };
}

std::string ConvergenceReport::header() const {
  std::ostringstream s;
  const GasModel gas = params.gas();
  s << std::setprecision(10);
  s << "# viscous shock: M=" << params.mach << " Re=" << params.reynolds << " gamma=" << params.gamma
    << " Pr=" << params.prandtl << '\n';
  s << "# R=" << gas.R << " mu=" << gas.mu << " kappa=" << gas.kappa() << " mass_flow=" << params.mass_flow
    << " u_left=" << params.u_left << " u_right=" << params.u_right << " V_f=" << params.v_f
    << " alpha=" << params.alpha << " shock_speed=" << params.shock_speed << '\n';
  s << "# p=" << options.p << (options.mixed ? " mixed p/p+1" : " conforming") << " seed=" << options.seed
    << " t_end=" << options.t_end << " rtol=" << options.integrator.rtol << " mode=" << to_string(options.scheme.mode)
    << " ip=" << (options.scheme.interior_penalty ? options.scheme.ip_scale : 0.0)
    << " dissipation=" << to_string(options.scheme.dissipation) << " mesh=" << (options.slab ? "slab" : "box")
    << " amplitude=" << options.amplitude << '\n';
  return s.str();
}

void ConvergenceReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path);
  }
  out << header();
  out << "Grid,L1,Rate,L2,Rate,Linf,Rate\n";
  out << std::scientific << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.grid << ',' << r.error.l1 << ',';
    if (r.has_rate) {
      out << std::fixed << std::setprecision(2) << r.rate_l1 << std::scientific << std::setprecision(6);
    } else {
      out << '-';
    }
    out << ',' << r.error.l2 << ',';
    if (r.has_rate) {
      out << std::fixed << std::setprecision(2) << r.rate_l2 << std::scientific << std::setprecision(6);
    } else {
      out << '-';
    }
    out << ',' << r.error.linf << ',';
    if (r.has_rate) {
      out << std::fixed << std::setprecision(2) << r.rate_linf << std::scientific << std::setprecision(6);
    } else {
      out << '-';
    }
    out << '\n';
  }
}

std::string ConvergenceReport::table() const {
  std::ostringstream s;
  s << header();
  s << std::left << std::setw(6) << "Grid" << std::setw(12) << "L1" << std::setw(8) << "Rate" << std::setw(12) << "L2"
    << std::setw(8) << "Rate" << std::setw(12) << "Linf" << std::setw(8) << "Rate" << std::setw(10) << "steps"
    << "seconds\n";
  for (const auto& r : rows) {
    auto rate = [&](double v) {
      std::ostringstream o;
      if (r.has_rate) {
        o << std::fixed << std::setprecision(2) << v;
      } else {
        o << '-';
      }
      return o.str();
    };
    std::ostringstream l1;
    std::ostringstream l2;
    std::ostringstream li;
    l1 << std::scientific << std::setprecision(2) << r.error.l1;
    l2 << std::scientific << std::setprecision(2) << r.error.l2;
    li << std::scientific << std::setprecision(2) << r.error.linf;
    s << std::left << std::setw(6) << r.grid << std::setw(12) << l1.str() << std::setw(8) << rate(r.rate_l1)
      << std::setw(12) << l2.str() << std::setw(8) << rate(r.rate_l2) << std::setw(12) << li.str() << std::setw(8)
      << rate(r.rate_linf) << std::setw(10) << r.steps << std::fixed << std::setprecision(1) << r.seconds;
    if (r.status != "completed") {
      s << "  [" << r.status << ']';
    }
    s << '\n';
  }
  return s.str();
}

ConvergenceReport run_convergence_study(const ConvergenceOptions& opt, const ViscousShockParams& params) {
  ConvergenceReport rep;
  rep.params = params;
  rep.options = opt;
  const GasModel gas = params.gas();
  for (std::size_t gi = 0; gi < opt.grids.size(); ++gi) {
    const int grid = opt.grids[gi];
    const auto start = std::chrono::steady_clock::now();
    MeshSpec spec;
    spec.cells = {grid, grid, grid};
    spec.lower = {-0.5, -0.5, -0.5};
    spec.upper = {0.5, 0.5, 0.5};
    spec.boundary = {BoundaryKind::kExactSolution, BoundaryKind::kExactSolution, BoundaryKind::kExactSolution};
    if (opt.slab) {
      spec.cells = {grid, 1, 1};
      spec.boundary[1] = spec.boundary[2] = BoundaryKind::kPeriodic;
    }
    spec.amplitude = opt.amplitude;
    spec.p_min = opt.p;
    spec.p_max = opt.mixed ? opt.p + 1 : opt.p;
    spec.seed = opt.seed;
    NsSetup setup = make_ns_setup(spec, gas, opt.scheme, viscous_shock_provider(params));
    const auto& disc = *setup.disc;
    SolutionField q = disc.make_field();
    fill_field(q, disc.geometry(), [&](const Vec3& x, std::span<double> out) {
      const State5 s = viscous_shock_exact(x, 0.0, params);
      std::copy(s.begin(), s.end(), out.begin());
    });
    IntegratorConfig ic = opt.integrator;
    ic.end_time = opt.t_end;
    auto result = integrate_with_monitors(q.values(), 0.0, ns_rhs(disc), ic);
    std::copy(result.y.begin(), result.y.end(), q.values().begin());
    ConvergenceRow row;
    row.grid = grid;
    row.status = to_string(result.status);
    row.steps = result.accepted;
    row.rejects = result.rejected;
    row.error = error_norms(
        q, 0, [&](const Vec3& x) { return viscous_shock_exact(x, result.t, params)[0]; }, disc.geometry(),
        disc.ops());
    if (gi > 0) {
      const auto& prev = rep.rows.back();
      row.has_rate = true;
      row.rate_l1 = convergence_rate(prev.error.l1, row.error.l1, prev.grid, grid);
      row.rate_l2 = convergence_rate(prev.error.l2, row.error.l2, prev.grid, grid);
      row.rate_linf = convergence_rate(prev.error.linf, row.error.linf, prev.grid, grid);
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (opt.verbose) {
      std::cerr << "grid " << grid << ": L2 " << row.error.l2 << " steps " << row.steps << " ("
                << row.seconds << " s, " << row.status << ")\n";
    }
    rep.rows.push_back(row);
    if (!result.ok()) {
      break;
    }
  }
  return rep;
}

std::string mesh_to_json(const MeshTopology& mesh) {
  using nlohmann::json;
  const auto& s = mesh.spec;
  json j;
  j["cells"] = s.cells;
  j["lower"] = s.lower;
  j["upper"] = s.upper;
  j["boundary"] = {to_string(s.boundary[0]), to_string(s.boundary[1]), to_string(s.boundary[2])};
  j["amplitude"] = s.amplitude;
  j["p_min"] = s.p_min;
  j["p_max"] = s.p_max;
  j["seed"] = s.seed;
  j["geometry_degree"] = mesh.geometry_degree;
  j["rng"] = "mt19937_64";
  json els = json::array();
  for (const auto& el : mesh.elements) {
    els.push_back({{"degree", el.degree}, {"cell", el.cell}, {"control", el.control}});
  }
  j["elements"] = els;
  json itfs = json::array();
  for (const auto& itf : mesh.interfaces) {
    itfs.push_back({{"minus", itf.minus}, {"plus", itf.plus}, {"direction", itf.direction},
                    {"periodic", itf.periodic}});
  }
  j["interfaces"] = itfs;
  return j.dump(1);
}

FreestreamReport freestream_check(const FreestreamOptions& opt) {
  MeshSpec spec;
  spec.cells = {opt.grid, opt.grid, opt.grid};
  spec.boundary = {opt.boundary, opt.boundary, opt.boundary};
  spec.amplitude = opt.amplitude;
  spec.p_min = opt.p;
  spec.p_max = opt.mixed ? opt.p + 1 : opt.p;
  spec.seed = opt.seed;
  GasModel gas;
  gas.mu = opt.mu;
  const State5 state = opt.state;
  auto provider = [state](const Vec3&, double, double* q, double* fv) {
    std::copy(state.begin(), state.end(), q);
    std::fill(fv, fv + 15, 0.0);
  };
  NsSetup setup = make_ns_setup(spec, gas, opt.scheme, provider);
  const auto& disc = *setup.disc;
  SolutionField q = disc.make_field();
  fill_field(q, disc.geometry(), [&](const Vec3&, std::span<double> out) {
    std::copy(state.begin(), state.end(), out.begin());
  });
  SolutionField r = disc.make_field();
  disc.rhs(q, 0.0, r);
  FreestreamReport rep;
  rep.stats = setup.stats;
  rep.certified = disc.gcl_certified();
  for (const double v : r.values()) {
    rep.rhs_max = std::max(rep.rhs_max, std::abs(v));
  }
  rep.watertight = watertightness(disc.mesh(), disc.geometry());
  rep.elements = disc.mesh().elements.size();
  rep.dofs = q.size();
  return rep;
}

MeshSpec tgv_mesh_spec(const TgvOptions& opt) {
  if (opt.cells < 1 || opt.p_min < 1 || opt.p_max < opt.p_min) {
    throw std::invalid_argument("invalid TGV mesh options");
  }
  const double h = std::numbers::pi * opt.params.length;
  MeshSpec spec;
  spec.cells = {opt.cells, opt.cells, opt.cells};
  spec.lower = {-h, -h, -h};
  spec.upper = {h, h, h};
  spec.boundary = {BoundaryKind::kPeriodic, BoundaryKind::kPeriodic, BoundaryKind::kPeriodic};
  spec.amplitude = opt.amplitude;
  spec.p_min = opt.p_min;
  spec.p_max = opt.p_max;
  spec.seed = opt.seed;
  return spec;
}

TgvRun run_tgv(const TgvOptions& opt) {
  TgvRun run;
  run.setup = make_ns_setup(tgv_mesh_spec(opt), opt.params.gas(), opt.scheme);
  const auto& disc = *run.setup.disc;
  SolutionField q = disc.make_field();
  fill_field(q, disc.geometry(), [&](const Vec3& x, std::span<double> out) {
    const State5 s = tgv_initial_condition(x, opt.params);
    std::copy(s.begin(), s.end(), out.begin());
  });
  run.result = integrate_with_monitors(q.values(), 0.0, ns_rhs(disc), opt.integrator,
                                       ns_observer(disc, opt.entropy_rate));
  return run;
}

SchemeConfig scheme_from_config(const KeyValueConfig& cfg, SchemeConfig base) {
  base.mode = scheme_mode_from_string(cfg.get_string("scheme.mode", to_string(base.mode)));
  base.interface_dissipation = cfg.get_bool("scheme.interface_dissipation", base.interface_dissipation);
  base.dissipation = dissipation_kind_from_string(cfg.get_string("scheme.dissipation", to_string(base.dissipation)));
  base.dissipation_coefficient = cfg.get_double("scheme.dissipation_coefficient", base.dissipation_coefficient);
  base.interior_penalty = cfg.get_bool("scheme.interior_penalty", base.interior_penalty);
  base.ip_scale = cfg.get_double("scheme.ip_scale", base.ip_scale);
  base.ip_extra_jacobian = cfg.get_bool("scheme.ip_extra_jacobian", base.ip_extra_jacobian);
  base.viscous = cfg.get_bool("scheme.viscous", base.viscous);
  return base;
}

IntegratorConfig integrator_from_config(const KeyValueConfig& cfg, IntegratorConfig base) {
  base.rtol = cfg.get_double("time.rtol", base.rtol);
  base.atol = cfg.get_double("time.atol", base.atol);
  base.safety = cfg.get_double("time.safety", base.safety);
  base.dt_initial = cfg.get_double("time.dt_initial", base.dt_initial);
  base.dt_min = cfg.get_double("time.dt_min", base.dt_min);
  base.dt_max = cfg.get_double("time.dt_max", base.dt_max);
  base.beta1 = cfg.get_double("time.beta1", base.beta1);
  base.beta2 = cfg.get_double("time.beta2", base.beta2);
  base.end_time = cfg.get_double("time.end", base.end_time);
  base.monitor_every = static_cast<int>(cfg.get_int("time.monitor_every", base.monitor_every));
  base.max_steps = cfg.get_int("time.max_steps", base.max_steps);
  base.fixed_dt = cfg.get_double("time.fixed_dt", base.fixed_dt);
  base.fixed_step = base.fixed_dt > 0.0;
  base.validate();
  return base;
}

TgvOptions tgv_options_from_config(const KeyValueConfig& cfg) {
  TgvOptions o;
  const std::string problem = cfg.get_string("problem", "tgv");
  if (problem != "tgv" && problem != "taylor-green") {
    throw std::invalid_argument("run: unsupported problem '" + problem + "'");
  }
  auto& p = o.params;
  p.mach = cfg.get_double("gas.mach", p.mach);
  p.reynolds = cfg.get_double("gas.reynolds", p.reynolds);
  p.gamma = cfg.get_double("gas.gamma", p.gamma);
  p.prandtl = cfg.get_double("gas.prandtl", p.prandtl);
  p.p0 = cfg.get_double("gas.p0", p.p0);
  p.t0 = cfg.get_double("gas.t0", p.t0);
  p.v0 = cfg.get_double("flow.v0", p.v0);
  p.length = cfg.get_double("flow.length", p.length);
  o.cells = static_cast<int>(cfg.get_int("mesh.cells", o.cells));
  o.p_min = static_cast<int>(cfg.get_int("mesh.p_min", o.p_min));
  o.p_max = static_cast<int>(cfg.get_int("mesh.p_max", o.p_max));
  o.seed = static_cast<std::uint64_t>(cfg.get_int("mesh.seed", static_cast<long>(o.seed)));
  o.amplitude = cfg.get_double("mesh.amplitude", o.amplitude);
  o.scheme = scheme_from_config(cfg);
  IntegratorConfig ic;
  ic.end_time = 5.0;
  ic.monitor_every = 10;
  o.integrator = integrator_from_config(cfg, ic);
  o.entropy_rate = cfg.get_bool("output.entropy_rate", o.entropy_rate);
  return o;
}

}  // namespace ncsbp
