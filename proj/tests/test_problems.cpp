#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <doctest.h>
#include <json.hpp>

#include "ncsbp/problems.hpp"

using namespace ncsbp;

TEST_CASE("viscous shock constants for M = 2.5, Re = 10") {
  const auto p = ViscousShockParams::standard();
  CHECK(p.v_f == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(p.u_right == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(p.alpha == doctest::Approx(2.0 * 1.4 / 2.4 * 0.1 / 0.75).epsilon(1e-14));
  CHECK(p.shock_speed == doctest::Approx(-0.3));
  const GasModel gas = p.gas();
  CHECK(gas.mu == doctest::Approx(0.1));
  CHECK(gas.R == doctest::Approx(1.0 / (1.4 * 6.25)));
  // upstream sound speed is 1/M with rho = T = 1
  CHECK(max_wave_speed(primitive(conserved(1.0, {0.0, 0.0, 0.0}, 1.0, gas), gas), gas, {1.0, 0.0, 0.0}) ==
        doctest::Approx(0.4));
  ViscousShockParams bad;
  bad.mach = 0.8;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(viscous_shock_profile(0.0, ViscousShockParams{}), std::invalid_argument);
}

TEST_CASE("viscous shock profile limits and midpoint") {
  const auto p = ViscousShockParams::standard();
  CHECK(viscous_shock_profile(-5.0, p) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(viscous_shock_profile(5.0, p) == doctest::Approx(0.3).epsilon(1e-10));
  // at V = (1 + V_f)/2 the second logarithm vanishes
  const double xi_mid = p.alpha * std::log((1.0 - p.v_f) / 2.0);
  CHECK(viscous_shock_profile(xi_mid, p) == doctest::Approx(0.65).epsilon(1e-13));
  double prev = 2.0;
  for (double xi = -1.0; xi <= 1.0; xi += 0.05) {
    const double v = viscous_shock_profile(xi, p);
    CHECK(std::abs(viscous_shock_relation(xi, v, p)) <= 1e-10);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("exact viscous shock satisfies Navier-Stokes") {
  const auto p = ViscousShockParams::standard();
  const GasModel gas = p.gas();
  const double h = 1e-4;
  const double t = 0.2;
  double worst = 0.0;
  for (double x = -0.5; x <= 0.5; x += 0.0625) {
    const State5 qp = viscous_shock_exact({x, 0.1, -0.2}, t + h, p);
    const State5 qm = viscous_shock_exact({x, 0.1, -0.2}, t - h, p);
    const State5 fp = euler_flux(viscous_shock_exact({x + h, 0.0, 0.0}, t, p), gas, 0);
    const State5 fm = euler_flux(viscous_shock_exact({x - h, 0.0, 0.0}, t, p), gas, 0);
    double vp[3][5];
    double vm[3][5];
    viscous_shock_viscous_flux({x + h, 0.0, 0.0}, t, p, vp);
    viscous_shock_viscous_flux({x - h, 0.0, 0.0}, t, p, vm);
    for (int k = 0; k < 5; ++k) {
      const double res = (qp[k] - qm[k]) / (2.0 * h) + (fp[k] - fm[k] - vp[0][k] + vm[0][k]) / (2.0 * h);
      worst = std::max(worst, std::abs(res));
    }
  }
  CHECK(worst <= 1e-5);

  // viscous stress equals 4/3 mu du/dx of the sampled velocity
  const double x = 0.05;
  const auto u = [&](double s) {
    const State5 q = viscous_shock_exact({s, 0.0, 0.0}, t, p);
    return q[1] / q[0];
  };
  double fv[3][5];
  viscous_shock_viscous_flux({x, 0.0, 0.0}, t, p, fv);
  CHECK(fv[0][1] == doctest::Approx(4.0 / 3.0 * gas.mu * (u(x + h) - u(x - h)) / (2.0 * h)).epsilon(1e-6));
  CHECK(fv[1][2] == doctest::Approx(-0.5 * fv[0][1]));
  CHECK(fv[0][0] == 0.0);
}

TEST_CASE("downstream gas is at rest and the far states satisfy the jump conditions") {
  const auto p = ViscousShockParams::standard();
  const State5 right = viscous_shock_exact({10.0, 0.0, 0.0}, 0.0, p);
  const State5 left = viscous_shock_exact({-10.0, 0.0, 0.0}, 0.0, p);
  CHECK(std::abs(right[1]) <= 1e-9);
  const double s = p.shock_speed;
  CHECK(left[0] * (left[1] / left[0] - s) == doctest::Approx(right[0] * (right[1] / right[0] - s)).epsilon(1e-9));
  CHECK(left[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Taylor-Green initial state") {
  TaylorGreenParams p;
  const GasModel gas = p.gas();
  CHECK(p.rho0() == doctest::Approx(1.4 * 0.0025));
  CHECK(gas.mu == doctest::Approx(p.rho0() / 1600.0));
  const State5 q0 = tgv_initial_condition({0.0, 0.0, 0.0}, p);
  const Primitive w0 = primitive(q0, gas);
  CHECK(w0.p == doctest::Approx(1.0 + p.rho0() * 6.0 / 16.0).epsilon(1e-14));
  CHECK(std::hypot(w0.u[0], w0.u[1], w0.u[2]) == 0.0);
  const double c = max_wave_speed(w0, gas, {1.0, 0.0, 0.0});
  CHECK(c == doctest::Approx(1.0 / p.mach).epsilon(1e-12));
  const double h = std::numbers::pi / 2.0;
  const Primitive w = primitive(tgv_initial_condition({h, 0.0, 0.0}, p), gas);
  CHECK(w.u[0] == doctest::Approx(1.0));
  CHECK(w.T == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("error norms and convergence rates") {
  CHECK(convergence_rate(1e-2, 2.5e-3, 4, 8) == doctest::Approx(-2.0));
  MeshSpec spec;
  spec.cells = {2, 2, 2};
  spec.p_min = 1;
  spec.p_max = 3;
  spec.seed = 2;
  auto ops = std::make_shared<const OperatorSet>(1, 3);
  const MeshTopology mesh = generate_perturbed_mesh(spec);
  const auto geom = build_geometry(mesh, *ops, true);
  SolutionField u = SolutionField::for_mesh(mesh, 2);
  fill_field(u, geom, [](const Vec3& x, std::span<double> out) {
    out[0] = x[0];
    out[1] = 0.1 + x[1];
  });
  const auto n0 = error_norms(u, 0, [](const Vec3& x) { return x[0]; }, geom, *ops);
  CHECK(n0.l2 <= 1e-15);
  CHECK(n0.volume == doctest::Approx(1.0).epsilon(1e-12));
  const auto n1 = error_norms(u, 1, [](const Vec3& x) { return x[1]; }, geom, *ops);
  CHECK(n1.l1 == doctest::Approx(0.1));
  CHECK(n1.l2 == doctest::Approx(0.1));
  CHECK(n1.linf == doctest::Approx(0.1));
  CHECK_THROWS_AS(error_norms(u, 2, [](const Vec3&) { return 0.0; }, geom, *ops), std::invalid_argument);
}

TEST_CASE("convergence report layout") {
  ConvergenceReport rep;
  rep.params = ViscousShockParams::standard();
  rep.options.p = 2;
  for (const int g : {4, 8}) {
    ConvergenceRow row;
    row.grid = g;
    row.error = {g == 4 ? 1e-2 : 2.5e-3, g == 4 ? 2e-2 : 5e-3, 0.1, 1.0};
    row.has_rate = g == 8;
    row.rate_l1 = row.rate_l2 = -2.0;
    row.status = "completed";
    rep.rows.push_back(row);
  }
  const auto path = (std::filesystem::temp_directory_path() / "ncsbp_conv_test.csv").string();
  rep.write_csv(path);
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    lines.push_back(line);
  }
  std::filesystem::remove(path);
  REQUIRE(lines.size() == 6);
  CHECK(lines[0].rfind("# viscous shock: M=2.5 Re=10", 0) == 0);
  CHECK(lines[2].find("mode=es") != std::string::npos);
  CHECK(lines[3] == "Grid,L1,Rate,L2,Rate,Linf,Rate");
  CHECK(lines[4].find(",-,") != std::string::npos);
  CHECK(lines[5].find("-2.00") != std::string::npos);
  CHECK(rep.table().find("Linf") != std::string::npos);
}

TEST_CASE("slab convergence study runs and reduces the error") {
  ConvergenceOptions opt;
  opt.p = 2;
  opt.slab = true;
  opt.amplitude = 0.0;
  opt.grids = {4, 8};
  opt.t_end = 0.05;
  const auto rep = run_convergence_study(opt);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[1].status == "completed");
  CHECK(rep.rows[1].error.l2 < rep.rows[0].error.l2);
  CHECK(rep.rows[1].rate_l2 < -1.0);
  CHECK(rep.header().find("mesh=slab") != std::string::npos);
}

TEST_CASE("mesh JSON round trip") {
  MeshSpec spec;
  spec.cells = {2, 3, 1};
  spec.p_min = 1;
  spec.p_max = 2;
  spec.seed = 9;
  const auto mesh = generate_perturbed_mesh(spec);
  const auto j = nlohmann::json::parse(mesh_to_json(mesh));
  CHECK(j["elements"].size() == 6);
  CHECK(j["seed"] == 9);
  CHECK(j["cells"][1] == 3);
  for (const auto& el : j["elements"]) {
    CHECK(el["degree"] >= 1);
    CHECK(el["degree"] <= 2);
    CHECK(el["control"].size() == 8);
  }
  CHECK(j["interfaces"].size() == mesh.interfaces.size());
}

TEST_CASE("run configuration readers") {
  const auto cfg = KeyValueConfig::parse(
      "problem = \"tgv\"\n[gas]\nmach = 0.1\n[mesh]\ncells = 3\np_min = 1\np_max = 2\n"
      "[scheme]\nmode = \"ec\"\ndissipation = \"matrix\"\nip_scale = 2.0\n"
      "[time]\nend = 0.5\nrtol = 1e-5\n");
  const TgvOptions o = tgv_options_from_config(cfg);
  CHECK(o.params.mach == 0.1);
  CHECK(o.cells == 3);
  CHECK(o.p_max == 2);
  CHECK(o.scheme.mode == SchemeMode::kEntropyConservative);
  CHECK(o.scheme.dissipation == DissipationKind::kMatrix);
  CHECK(o.scheme.ip_scale == 2.0);
  CHECK(o.integrator.end_time == 0.5);
  CHECK(o.integrator.rtol == 1e-5);
  CHECK(o.integrator.monitor_every == 10);
  CHECK(cfg.unused_keys().empty());
  const MeshSpec spec = tgv_mesh_spec(o);
  CHECK(spec.upper[0] == doctest::Approx(std::numbers::pi));
  CHECK(spec.boundary[2] == BoundaryKind::kPeriodic);
  CHECK_THROWS_AS(tgv_options_from_config(KeyValueConfig::parse("problem = \"shock\"\n")), std::invalid_argument);
  CHECK_THROWS_AS(tgv_options_from_config(KeyValueConfig::parse("[time]\nrtol = -1\n")), std::invalid_argument);
}

TEST_CASE("short Taylor-Green run records monitors") {
  TgvOptions opt;
  opt.cells = 2;
  opt.p_min = 1;
  opt.p_max = 2;
  opt.integrator.end_time = 0.2;
  opt.integrator.rtol = opt.integrator.atol = 1e-6;
  const TgvRun run = run_tgv(opt);
  REQUIRE(run.result.ok());
  const auto& rows = run.result.log.rows;
  REQUIRE(rows.size() >= 2);
  CHECK(rows.back().t == doctest::Approx(0.2));
  CHECK(rows.back().entropy <= rows.front().entropy + 1e-12);
  CHECK(std::abs(rows.back().mass - rows.front().mass) <= 1e-12 * rows.front().mass);
  for (const auto& r : rows) {
    CHECK(r.entropy_rate <= 1e-12);
  }
}
