#include "ncsbp/timeloop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include <json.hpp>

#include "ncsbp/physics.hpp"

namespace ncsbp {

namespace {

constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                 b6 = 11.0 / 84.0;
// fifth minus fourth order weights
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

bool all_finite(std::span<const double> y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) {
    throw std::invalid_argument("integrator tolerances must be positive");
  }
  if (!(dt_min > 0.0) || !(dt_max >= dt_min)) {
    throw std::invalid_argument("integrator step bounds must satisfy 0 < dt_min <= dt_max");
  }
  if (!(safety > 0.0 && safety <= 1.0) || !(factor_min > 0.0 && factor_min < 1.0) || !(factor_max > 1.0)) {
    throw std::invalid_argument("invalid step controller factors");
  }
  if (fixed_step && !(fixed_dt > 0.0)) {
    throw std::invalid_argument("fixed-step mode needs fixed_dt > 0");
  }
  if (monitor_every < 1) {
    throw std::invalid_argument("monitor cadence must be at least 1");
  }
}

DormandPrince::DormandPrince(Rhs rhs, IntegratorConfig cfg) : rhs_(std::move(rhs)), cfg_(cfg) {
  cfg_.validate();
  k_.resize(7);
}

void DormandPrince::stages(double t, std::span<const double> y, double dt) {
  const std::size_t n = y.size();
  for (auto& k : k_) {
    k.resize(n);
  }
  tmp_.resize(n);
  y5_.resize(n);
  if (!fsal_valid_) {
    rhs_(t, y, k_[0]);
    ++evaluations_;
  }
  auto eval = [&](int s, double c) {
    rhs_(t + c * dt, tmp_, k_[s]);
    ++evaluations_;
  };
  for (std::size_t i = 0; i < n; ++i) {
    tmp_[i] = y[i] + dt * a21 * k_[0][i];
  }
  eval(1, c2);
  for (std::size_t i = 0; i < n; ++i) {
    tmp_[i] = y[i] + dt * (a31 * k_[0][i] + a32 * k_[1][i]);
  }
  eval(2, c3);
  for (std::size_t i = 0; i < n; ++i) {
    tmp_[i] = y[i] + dt * (a41 * k_[0][i] + a42 * k_[1][i] + a43 * k_[2][i]);
  }
  eval(3, c4);
  for (std::size_t i = 0; i < n; ++i) {
    tmp_[i] = y[i] + dt * (a51 * k_[0][i] + a52 * k_[1][i] + a53 * k_[2][i] + a54 * k_[3][i]);
  }
  eval(4, c5);
  for (std::size_t i = 0; i < n; ++i) {
    tmp_[i] = y[i] + dt * (a61 * k_[0][i] + a62 * k_[1][i] + a63 * k_[2][i] + a64 * k_[3][i] + a65 * k_[4][i]);
  }
  eval(5, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    y5_[i] = y[i] + dt * (b1 * k_[0][i] + b3 * k_[2][i] + b4 * k_[3][i] + b5 * k_[4][i] + b6 * k_[5][i]);
  }
  rhs_(t + dt, y5_, k_[6]);
  ++evaluations_;
}

DormandPrince::StepResult DormandPrince::attempt(double& t, std::vector<double>& y, double dt) {
  StepResult r;
  r.dt_used = dt;
  try {
    stages(t, y, dt);
  } catch (const AdmissibilityError&) {
    // a stage left the admissible set: reject and shrink
    fsal_valid_ = false;
    r.accepted = false;
    r.error = std::numeric_limits<double>::infinity();
    r.dt_next = dt * cfg_.factor_min;
    return r;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = dt * (e1 * k_[0][i] + e3 * k_[2][i] + e4 * k_[3][i] + e5 * k_[4][i] + e6 * k_[5][i] +
                           e7 * k_[6][i]);
    const double sc = cfg_.atol + cfg_.rtol * std::max(std::abs(y[i]), std::abs(y5_[i]));
    sum += (d / sc) * (d / sc);
  }
  const double err = y.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(y.size()));
  r.error = err;
  if (!std::isfinite(err) || !all_finite(y5_)) {
    fsal_valid_ = true;  // k_[0] still belongs to y
    r.accepted = false;
    r.dt_next = dt * cfg_.factor_min;
    return r;
  }
  const double e = std::max(err, 1e-10);
  if (err <= 1.0) {
    double fac = cfg_.safety * std::pow(e, -cfg_.beta1) * std::pow(err_prev_, -cfg_.beta2);
    fac = std::clamp(fac, cfg_.factor_min, cfg_.factor_max);
    r.accepted = true;
    r.dt_next = std::min(dt * fac, cfg_.dt_max);
    err_prev_ = std::max(err, 1e-4);
    t += dt;
    y.swap(y5_);
    k_[0].swap(k_[6]);
    fsal_valid_ = true;
  } else {
    double fac = cfg_.safety * std::pow(e, -cfg_.beta1);
    fac = std::clamp(fac, cfg_.factor_min, 1.0);
    r.accepted = false;
    r.dt_next = dt * fac;
    fsal_valid_ = true;
  }
  return r;
}

void DormandPrince::step_fixed(double& t, std::vector<double>& y, double dt) {
  stages(t, y, dt);
  t += dt;
  y.swap(y5_);
  k_[0].swap(k_[6]);
  fsal_valid_ = true;
}

double DormandPrince::initial_step(double t, std::span<const double> y) {
  if (cfg_.dt_initial > 0.0) {
    return std::min(cfg_.dt_initial, cfg_.dt_max);
  }
  // Hairer-Norsett-Wanner starting step heuristic.
  const std::size_t n = y.size();
  std::vector<double> f0(n);
  std::vector<double> f1(n);
  std::vector<double> y1(n);
  rhs_(t, y, f0);
  ++evaluations_;
  double d0 = 0.0;
  double d1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = cfg_.atol + cfg_.rtol * std::abs(y[i]);
    d0 += (y[i] / sc) * (y[i] / sc);
    d1 += (f0[i] / sc) * (f0[i] / sc);
  }
  d0 = std::sqrt(d0 / static_cast<double>(n));
  d1 = std::sqrt(d1 / static_cast<double>(n));
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, cfg_.dt_max);
  for (std::size_t i = 0; i < n; ++i) {
    y1[i] = y[i] + h0 * f0[i];
  }
  rhs_(t + h0, y1, f1);
  ++evaluations_;
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = cfg_.atol + cfg_.rtol * std::abs(y[i]);
    const double v = (f1[i] - f0[i]) / sc;
    d2 += v * v;
  }
  d2 = std::sqrt(d2 / static_cast<double>(n)) / h0;
  const double dm = std::max(d1, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, cfg_.dt_max});
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kCompleted:
      return "completed";
    case RunStatus::kNonFinite:
      return "non-finite state";
    case RunStatus::kStepUnderflow:
      return "step size underflow";
    case RunStatus::kMaxSteps:
      return "step limit reached";
    case RunStatus::kAdmissibility:
      return "non-admissible state";
  }
  return "unknown";
}

void MonitorLog::differentiate() {
  const std::size_t n = rows.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (n < 2) {
      rows[i].dke_dt = 0.0;
      continue;
    }
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    const double dt = rows[hi].t - rows[lo].t;
    rows[i].dke_dt = dt > 0.0 ? (rows[hi].kinetic_energy - rows[lo].kinetic_energy) / dt : 0.0;
  }
}

void MonitorLog::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path);
  }
  out << "t,S_total,KE,dKE/dt,mass,dt,rejects,entropy_rate";
  const std::size_t nc = rows.empty() ? 0 : rows.front().conserved.size();
  for (std::size_t k = 0; k < nc; ++k) {
    out << ",q" << k;
  }
  out << '\n' << std::setprecision(16);
  for (const auto& r : rows) {
    out << r.t << ',' << r.entropy << ',' << r.kinetic_energy << ',' << r.dke_dt << ',' << r.mass << ',' << r.dt
        << ',' << r.rejects << ',' << r.entropy_rate;
    for (double c : r.conserved) {
      out << ',' << c;
    }
    out << '\n';
  }
}

void MonitorLog::write_json(const std::string& path) const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"t", r.t},
                 {"S_total", r.entropy},
                 {"KE", r.kinetic_energy},
                 {"dKE_dt", r.dke_dt},
                 {"mass", r.mass},
                 {"dt", r.dt},
                 {"rejects", r.rejects},
                 {"entropy_rate", r.entropy_rate},
                 {"conserved", r.conserved}});
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path);
  }
  out << j.dump(2) << '\n';
}

IntegrationResult integrate_with_monitors(std::vector<double> y0, double t0, const DormandPrince::Rhs& rhs,
                                          const IntegratorConfig& cfg, const Observer& observe) {
  cfg.validate();
  IntegrationResult res;
  DormandPrince dp(rhs, cfg);
  double t = t0;
  std::vector<double> y = std::move(y0);
  const double t_end = cfg.end_time;
  auto record = [&](double dt) {
    if (!observe) {
      return;
    }
    MonitorRow row = observe(t, y);
    row.t = t;
    row.dt = dt;
    row.rejects = res.rejected;
    res.log.rows.push_back(std::move(row));
  };
  auto finish = [&](RunStatus s, std::string msg) {
    res.status = s;
    res.message = std::move(msg);
    res.t = t;
    res.y = y;
    res.evaluations = dp.rhs_evaluations();
    res.log.differentiate();
    return res;
  };

  try {
    record(0.0);
    const double span = std::abs(t_end - t0);
    const double eps = 1e-13 * std::max(1.0, span);
    if (cfg.fixed_step) {
      while (t < t_end - eps) {
        const double dt = std::min(cfg.fixed_dt, t_end - t);
        std::vector<double> keep = y;
        const double t_keep = t;
        dp.step_fixed(t, y, dt);
        ++res.accepted;
        if (!all_finite(y)) {
          y.swap(keep);
          t = t_keep;
          return finish(RunStatus::kNonFinite, "non-finite state after fixed step");
        }
        if (res.accepted % cfg.monitor_every == 0 || t >= t_end - eps) {
          record(dt);
        }
        if (res.accepted >= cfg.max_steps) {
          return finish(RunStatus::kMaxSteps, "step limit reached");
        }
      }
      return finish(RunStatus::kCompleted, "");
    }

    double dt = std::min(dp.initial_step(t, y), span);
    while (t < t_end - eps) {
      const bool last = t + dt >= t_end - eps;
      const double step = last ? t_end - t : dt;
      const auto r = dp.attempt(t, y, step);
      if (r.accepted) {
        ++res.accepted;
        if (res.accepted % cfg.monitor_every == 0 || t >= t_end - eps) {
          record(step);
        }
        // a clamped final step must not shrink the controller's proposal
        dt = last ? std::max(dt, r.dt_next) : r.dt_next;
      } else {
        ++res.rejected;
        dt = r.dt_next;
        if (!std::isfinite(r.error) && dt < cfg.dt_min) {
          return finish(RunStatus::kNonFinite, "non-finite or non-admissible stage values");
        }
      }
      if (dt < cfg.dt_min) {
        return finish(RunStatus::kStepUnderflow, "step size fell below dt_min");
      }
      if (res.accepted + res.rejected >= cfg.max_steps) {
        return finish(RunStatus::kMaxSteps, "step limit reached");
      }
    }
  } catch (const AdmissibilityError& e) {
    return finish(RunStatus::kAdmissibility, e.what());
  }
  return finish(RunStatus::kCompleted, "");
}

}  // namespace ncsbp
