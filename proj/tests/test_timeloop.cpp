#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <doctest.h>

#include "ncsbp/physics.hpp"
#include "ncsbp/timeloop.hpp"

using namespace ncsbp;

namespace {

DormandPrince::Rhs decay(double rate) {
  return [rate](double, std::span<const double> y, std::span<double> f) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      f[i] = -rate * y[i];
    }
  };
}

double fixed_error(double dt) {
  IntegratorConfig cfg;
  cfg.fixed_step = true;
  cfg.fixed_dt = dt;
  cfg.end_time = 1.0;
  const auto res = integrate_with_monitors({1.0}, 0.0, decay(1.0), cfg);
  REQUIRE(res.ok());
  return std::abs(res.y[0] - std::exp(-1.0));
}

}  // namespace

TEST_CASE("adaptive decay reaches the end time within tolerance") {
  IntegratorConfig cfg;
  cfg.rtol = 1e-9;
  cfg.atol = 1e-12;
  cfg.end_time = 2.0;
  const auto res = integrate_with_monitors({1.0, -3.0}, 0.0, decay(1.0), cfg);
  REQUIRE(res.ok());
  CHECK(res.t == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(res.y[0] - std::exp(-2.0)) <= 1e-8);
  CHECK(std::abs(res.y[1] + 3.0 * std::exp(-2.0)) <= 1e-8);
  CHECK(res.accepted > 0);
  CHECK(res.evaluations >= 6 * res.accepted);
}

TEST_CASE("quartic right-hand sides are integrated exactly in one step") {
  const auto quartic = [](double t, std::span<const double>, std::span<double> f) { f[0] = 5.0 * std::pow(t, 4); };
  DormandPrince dp(quartic, IntegratorConfig{});
  double t = 0.3;
  std::vector<double> y{std::pow(0.3, 5)};
  dp.step_fixed(t, y, 0.9);
  CHECK(t == doctest::Approx(1.2));
  CHECK(std::abs(y[0] - std::pow(1.2, 5)) <= 1e-13);
}

TEST_CASE("fixed steps converge at fifth order") {
  const double e1 = fixed_error(0.25);
  const double e2 = fixed_error(0.125);
  const double rate = std::log2(e1 / e2);
  CHECK(rate > 4.7);
  CHECK(rate < 5.5);
}

TEST_CASE("large first steps are rejected and recovered") {
  IntegratorConfig cfg;
  cfg.dt_initial = 1.0;
  cfg.end_time = 3.0;
  cfg.rtol = 1e-8;
  cfg.atol = 1e-10;
  const auto res = integrate_with_monitors({2.0}, 0.0, decay(20.0), cfg);
  REQUIRE(res.ok());
  CHECK(res.rejected > 0);
  CHECK(std::abs(res.y[0] - 2.0 * std::exp(-60.0)) <= 1e-8);
}

TEST_CASE("monitors do not change the trajectory") {
  IntegratorConfig cfg;
  cfg.end_time = 1.5;
  cfg.monitor_every = 3;
  const auto plain = integrate_with_monitors({1.0, 0.5}, 0.0, decay(2.0), cfg);
  int calls = 0;
  const auto watched = integrate_with_monitors({1.0, 0.5}, 0.0, decay(2.0), cfg,
                                               [&](double, std::span<const double> y) {
                                                 ++calls;
                                                 MonitorRow row;
                                                 row.kinetic_energy = 0.5 * y[0] * y[0];
                                                 return row;
                                               });
  REQUIRE(plain.ok());
  REQUIRE(watched.ok());
  CHECK(plain.y == watched.y);
  CHECK(plain.accepted == watched.accepted);
  CHECK(plain.evaluations == watched.evaluations);
  CHECK(calls == static_cast<int>(watched.log.rows.size()));
  CHECK(watched.log.rows.front().t == 0.0);
  CHECK(watched.log.rows.back().t == doctest::Approx(1.5));
  CHECK(plain.log.rows.empty());
}

TEST_CASE("non-finite fixed steps stop with the last good state") {
  IntegratorConfig cfg;
  cfg.fixed_step = true;
  cfg.fixed_dt = 0.1;
  cfg.end_time = 1.0;
  const auto rhs = [](double t, std::span<const double>, std::span<double> f) {
    f[0] = t > 0.45 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  };
  const auto res = integrate_with_monitors({0.0}, 0.0, rhs, cfg);
  CHECK(res.status == RunStatus::kNonFinite);
  CHECK(std::isfinite(res.y[0]));
  CHECK(res.t < 0.45);
}

TEST_CASE("blow-up ends in a step-size failure") {
  IntegratorConfig cfg;
  cfg.end_time = 2.0;
  cfg.dt_min = 1e-9;
  const auto rhs = [](double, std::span<const double> y, std::span<double> f) { f[0] = y[0] * y[0]; };
  const auto res = integrate_with_monitors({1.0}, 0.0, rhs, cfg);
  CHECK_FALSE(res.ok());
  CHECK(res.t < 1.0);
  CHECK(res.t > 0.99);
}

TEST_CASE("admissibility failures in every stage are reported") {
  IntegratorConfig cfg;
  cfg.end_time = 1.0;
  const auto rhs = [](double, std::span<const double>, std::span<double>) -> void {
    throw AdmissibilityError("negative density");
  };
  const auto res = integrate_with_monitors({1.0}, 0.0, rhs, cfg);
  CHECK(res.status == RunStatus::kAdmissibility);
  CHECK(res.message.find("negative density") != std::string::npos);
}

TEST_CASE("integrator configuration is validated") {
  IntegratorConfig cfg;
  cfg.rtol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.fixed_step = true;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.factor_min = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.monitor_every = 0;
  CHECK_THROWS_AS(DormandPrince(decay(1.0), cfg), std::invalid_argument);
  CHECK(to_string(RunStatus::kStepUnderflow) == "step size underflow");
}

TEST_CASE("kinetic-energy derivative and monitor files") {
  MonitorLog log;
  for (int i = 0; i <= 4; ++i) {
    MonitorRow row;
    row.t = 0.5 * i;
    row.kinetic_energy = 3.0 - 2.0 * row.t;
    row.conserved = {1.0, 0.0};
    log.rows.push_back(row);
  }
  log.differentiate();
  for (const auto& row : log.rows) {
    CHECK(row.dke_dt == doctest::Approx(-2.0));
  }
  const auto dir = std::filesystem::temp_directory_path();
  const auto csv = (dir / "ncsbp_monitor_test.csv").string();
  log.write_csv(csv);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,S_total,KE,dKE/dt,mass,dt,rejects,entropy_rate,q0,q1");
  int lines = 0;
  for (std::string line; std::getline(in, line);) {
    ++lines;
  }
  CHECK(lines == 5);
  const auto js = (dir / "ncsbp_monitor_test.json").string();
  log.write_json(js);
  CHECK(std::filesystem::file_size(js) > 0);
  std::filesystem::remove(csv);
  std::filesystem::remove(js);
}
