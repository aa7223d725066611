#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "entrosense/corrmodel.hpp"
#include "entrosense/scenario.hpp"
#include "entrosense/selector.hpp"

namespace entrosense {

struct ExperimentConfig {
  FieldParams field;  ///< field.m is the fixed M of the power sweep; field.seed is unused
  CorrelationModel model;
  std::vector<double> alphas;   ///< power sweep
  std::vector<std::size_t> ms;  ///< M sweep
  double alpha = 0.5;           ///< fixed alpha of the M sweep
  ModelOptions model_opts;
  SolverConfig solver;
  std::vector<double> noise{0.0};  ///< relative distance-noise levels
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  ///< 0: ENTROSENSE_THREADS, else hardware concurrency

  /// Throws ParameterError naming the offending field.
  void validate() const;
};

/// Reads the JSON config; unknown keys are rejected.
/// "interior-point" or "frank-wolfe".
SolverMethod solver_method_from_name(const std::string& name);

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json(const std::string& text);

struct Stat {
  double mean = 0.0;
  double se = 0.0;  ///< standard error of the mean
};

/// One Monte Carlo trial: optimized count and sum-power selections plus the
/// random baseline, all scored on the noise-free model of the same field.
struct TrialRecord {
  double sweep_value = 0.0;
  double noise = 0.0;
  std::size_t trial = 0;
  bool ok = false;
  std::string error;
  double eps_count = 0.0, mu_count = 0.0;
  double eps_power = 0.0, mu_power = 0.0;
  double eps_random = 0.0, mu_random = 0.0;
  bool converged_count = false, converged_power = false;
};

struct SweepRow {
  double sweep_value = 0.0;
  double noise = 0.0;
  std::size_t trials = 0;  ///< successful trials
  std::size_t failed = 0;
  Stat eps_count, eps_power, eps_random;
  Stat mu_count, mu_power, mu_random;
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< ordered by (noise, sweep value)
  std::vector<TrialRecord> trials;
};

/// Independent stream per (master seed, sweep value, trial, purpose).
std::uint64_t derive_seed(std::uint64_t master, double sweep_value, std::size_t trial,
                          std::uint32_t stream);

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t m, double alpha, double noise,
                      double sweep_value, std::size_t trial);

SweepResult run_power_sweep(const ExperimentConfig& cfg);
SweepResult run_m_sweep(const ExperimentConfig& cfg);

Stat aggregate(const std::vector<double>& values);

struct BoundRow {
  double delta_over_sigma = 0.0;
  double H = 0.0;
  double H_lb = 0.0;
  double rel_err = 0.0;
};

std::vector<double> log_grid(double lo, double hi, std::size_t points);
std::vector<BoundRow> run_bound_validation(const std::vector<double>& delta_over_sigma,
                                           double sigma = 1.0);

void write_power_csv(std::ostream& out, const SweepResult& result);
void write_m_csv(std::ostream& out, const SweepResult& result);
void write_bound_csv(std::ostream& out, const std::vector<BoundRow>& rows);
void write_trials_csv(std::ostream& out, const SweepResult& result);

/// Number of worker threads: cfg.threads, else ENTROSENSE_THREADS, else hardware.
std::size_t worker_count(std::size_t requested);

}  // namespace entrosense
