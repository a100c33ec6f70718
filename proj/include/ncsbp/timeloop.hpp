#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ncsbp {

struct IntegratorConfig {
  double rtol = 1e-8;
  double atol = 1e-8;
  double safety = 0.9;
  double dt_initial = 0.0;  // 0 selects an automatic first step
  double dt_min = 1e-14;
  double dt_max = std::numeric_limits<double>::infinity();
  double beta1 = 0.7 / 5.0;   // PI gains: factor = safety * err^-beta1 * err_prev^-beta2
  double beta2 = -0.4 / 5.0;
  double factor_min = 0.2;
  double factor_max = 5.0;
  double end_time = 1.0;
  int monitor_every = 1;  // accepted steps between monitor rows
  long max_steps = 10'000'000;
  bool fixed_step = false;
  double fixed_dt = 0.0;

  void validate() const;
};

/// Embedded Dormand-Prince 5(4) pair with FSAL and a PI step-size controller.
class DormandPrince {
 public:
  using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

  struct StepResult {
    bool accepted = false;
    double dt_used = 0.0;
    double error = 0.0;  // weighted RMS norm of the embedded difference
    double dt_next = 0.0;
  };

  DormandPrince(Rhs rhs, IntegratorConfig cfg);

  const IntegratorConfig& config() const { return cfg_; }

  /// One adaptive attempt from (t, y) with step dt; on acceptance t and y advance.
  StepResult attempt(double& t, std::vector<double>& y, double dt);
  /// One unconditional fifth-order step.
  void step_fixed(double& t, std::vector<double>& y, double dt);
  double initial_step(double t, std::span<const double> y);
  /// Discards the cached first stage (call when y is changed externally).
  void reset() { fsal_valid_ = false; err_prev_ = 1.0; }
  long rhs_evaluations() const { return evaluations_; }

 private:
  void stages(double t, std::span<const double> y, double dt);

  Rhs rhs_;
  IntegratorConfig cfg_;
  std::vector<std::vector<double>> k_;
  std::vector<double> tmp_;
  std::vector<double> y5_;
  bool fsal_valid_ = false;
  double err_prev_ = 1.0;
  long evaluations_ = 0;
};

struct MonitorRow {
  double t = 0.0;
  double entropy = 0.0;
  double kinetic_energy = 0.0;
  double dke_dt = 0.0;
  double mass = 0.0;
  double dt = 0.0;
  long rejects = 0;
  std::vector<double> conserved;  // all conserved totals
  double entropy_rate = 0.0;      // w^T M J dq/dt
};

struct MonitorLog {
  std::vector<MonitorRow> rows;

  /// Fills dke_dt by differentiating the kinetic-energy series.
  void differentiate();
  void write_csv(const std::string& path) const;
  void write_json(const std::string& path) const;
};

enum class RunStatus { kCompleted, kNonFinite, kStepUnderflow, kMaxSteps, kAdmissibility };

std::string to_string(RunStatus status);

struct IntegrationResult {
  RunStatus status = RunStatus::kCompleted;
  std::string message;
  double t = 0.0;
  std::vector<double> y;  // final or last good state
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
  MonitorLog log;

  bool ok() const { return status == RunStatus::kCompleted; }
};

/// Observer producing one monitor row for (t, y); dt and reject counters are filled in by the caller.
using Observer = std::function<MonitorRow(double t, std::span<const double> y)>;

IntegrationResult integrate_with_monitors(std::vector<double> y0, double t0, const DormandPrince::Rhs& rhs,
                                          const IntegratorConfig& cfg, const Observer& observe = {});

}  // namespace ncsbp
