#include "entrosense/experiment.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "entrosense/entropy.hpp"
#include "entrosense/errors.hpp"

namespace entrosense {
namespace {

enum Stream : std::uint32_t { kFieldStream = 0, kNoiseStream = 1, kRandomStream = 2 };

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

SweepRow summarize(double sweep_value, double noise, const std::vector<TrialRecord>& trials) {
  SweepRow row;
  row.sweep_value = sweep_value;
  row.noise = noise;
  std::vector<double> ec, ep, er, mc, mp, mr;
  for (const auto& t : trials) {
    if (!t.ok) {
      ++row.failed;
      continue;
    }
    ec.push_back(t.eps_count);
    ep.push_back(t.eps_power);
    er.push_back(t.eps_random);
    mc.push_back(t.mu_count);
    mp.push_back(t.mu_power);
    mr.push_back(t.mu_random);
  }
  row.trials = ec.size();
  row.eps_count = aggregate(ec);
  row.eps_power = aggregate(ep);
  row.eps_random = aggregate(er);
  row.mu_count = aggregate(mc);
  row.mu_power = aggregate(mp);
  row.mu_random = aggregate(mr);
  return row;
}

struct Job {
  std::size_t m;
  double alpha;
  double noise;
  double sweep_value;
  std::size_t trial;
};

SweepResult run_jobs(const ExperimentConfig& cfg, const std::vector<Job>& jobs) {
  SweepResult result;
  result.trials.resize(jobs.size());
  parallel_for(jobs.size(), worker_count(cfg.threads), [&](std::size_t i) {
    const Job& j = jobs[i];
    result.trials[i] = run_trial(cfg, j.m, j.alpha, j.noise, j.sweep_value, j.trial);
  });
  // Jobs are laid out as contiguous blocks of cfg.trials per (noise, sweep value).
  for (std::size_t start = 0; start < jobs.size(); start += cfg.trials) {
    const std::vector<TrialRecord> block(result.trials.begin() + static_cast<std::ptrdiff_t>(start),
                                         result.trials.begin() + static_cast<std::ptrdiff_t>(start + cfg.trials));
    result.rows.push_back(summarize(jobs[start].sweep_value, jobs[start].noise, block));
    if (result.rows.back().failed > 0) {
      spdlog::warn("sweep value {} noise {}: {} of {} trials failed", jobs[start].sweep_value,
                   jobs[start].noise, result.rows.back().failed, cfg.trials);
    }
  }
  return result;
}

std::string num(double v) { return fmt::format("{}", v); }

}  // namespace

void ExperimentConfig::validate() const {
  if (trials < 1) throw ParameterError("config field 'trials' must be >= 1");
  if (!(field.placement_std > 0.0)) throw ParameterError("config field 'placement_std' must be > 0");
  if (!(field.sigma > 0.0)) throw ParameterError("config field 'sigma' must be > 0");
  if (!(field.gamma_low > 0.0) || field.gamma_low > field.gamma_high) {
    throw ParameterError("config fields 'gamma_low'/'gamma_high' must satisfy 0 < low <= high");
  }
  if (!(model.theta > 0.0)) throw ParameterError("config field 'theta' must be > 0");
  if (!(model_opts.nu > 0.0 && model_opts.nu < 1.0)) throw ParameterError("config field 'nu' must be in (0, 1)");
  if (!(model_opts.rank_tol > 0.0 && model_opts.rank_tol < 1.0)) {
    throw ParameterError("config field 'rank_tol' must be in (0, 1)");
  }
  if (!(model_opts.chol_tol > 0.0 && model_opts.chol_tol < 1.0)) {
    throw ParameterError("config field 'chol_tol' must be in (0, 1)");
  }
  if (noise.empty()) throw ParameterError("config field 'noise' must not be empty");
  for (double n : noise) {
    if (!(n >= 0.0)) throw ParameterError("config field 'noise' entries must be >= 0");
  }
  for (double a : alphas) {
    if (!(a > 0.0 && a <= 1.0)) throw ParameterError("config field 'alphas' entries must be in (0, 1]");
  }
  for (std::size_t m : ms) {
    if (m < 1) throw ParameterError("config field 'ms' entries must be >= 1");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("config field 'alpha' must be in (0, 1]");
  if (field.m < 1) throw ParameterError("config field 'm' must be >= 1");
  if (!(solver.tol > 0.0)) throw ParameterError("config field 'solver_tol' must be > 0");
  if (solver.max_iters < 1) throw ParameterError("config field 'max_iters' must be >= 1");
}

SolverMethod solver_method_from_name(const std::string& name) {
  if (name == "interior-point") return SolverMethod::InteriorPoint;
  if (name == "frank-wolfe") return SolverMethod::PairwiseFrankWolfe;
  throw ParameterError("config field 'solver' must be 'interior-point' or 'frank-wolfe', got '" + name + "'");
}

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be an object");

  ExperimentConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "m") cfg.field.m = value.get<std::size_t>();
      else if (key == "ms") cfg.ms = value.get<std::vector<std::size_t>>();
      else if (key == "alpha") cfg.alpha = value.get<double>();
      else if (key == "alphas") cfg.alphas = value.get<std::vector<double>>();
      else if (key == "placement_std") cfg.field.placement_std = value.get<double>();
      else if (key == "sigma") cfg.field.sigma = value.get<double>();
      else if (key == "gamma_low") cfg.field.gamma_low = value.get<double>();
      else if (key == "gamma_high") cfg.field.gamma_high = value.get<double>();
      else if (key == "theta") cfg.model.theta = value.get<double>();
      else if (key == "nu") cfg.model_opts.nu = value.get<double>();
      else if (key == "rank_tol") cfg.model_opts.rank_tol = value.get<double>();
      else if (key == "chol_tol") cfg.model_opts.chol_tol = value.get<double>();
      else if (key == "noise") cfg.noise = value.get<std::vector<double>>();
      else if (key == "trials") cfg.trials = value.get<std::size_t>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "solver_tol") cfg.solver.tol = value.get<double>();
      else if (key == "max_iters") cfg.solver.max_iters = value.get<int>();
      else if (key == "threads") cfg.threads = value.get<std::size_t>();
      else if (key == "solver") cfg.solver.method = solver_method_from_name(value.get<std::string>());
      else throw ParseError("config: unknown field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::uint64_t derive_seed(std::uint64_t master, double sweep_value, std::size_t trial,
                          std::uint32_t stream) {
  const auto bits = std::bit_cast<std::uint64_t>(sweep_value);
  const auto t = static_cast<std::uint64_t>(trial);
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(bits),   static_cast<std::uint32_t>(bits >> 32),
                    static_cast<std::uint32_t>(t),      static_cast<std::uint32_t>(t >> 32),
                    stream};
  std::uint32_t out[2];
  seq.generate(std::begin(out), std::end(out));
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t m, double alpha, double noise,
                      double sweep_value, std::size_t trial) {
  TrialRecord rec;
  rec.sweep_value = sweep_value;
  rec.noise = noise;
  rec.trial = trial;
  try {
    FieldParams fp = cfg.field;
    fp.m = m;
    fp.seed = derive_seed(cfg.seed, sweep_value, trial, kFieldStream);
    const SensorField field = generate_field(fp);
    const DistanceMatrix dist = distance_matrix(field);
    const SelectionModel truth =
        prepare_selection_model(build_correlation(field, cfg.model, dist), cfg.model_opts);

    SelectionModel estimated_storage;
    const SelectionModel* estimated = &truth;
    if (noise > 0.0) {
      const DistanceMatrix noisy =
          perturb_distances(dist, noise, derive_seed(cfg.seed, sweep_value, trial, kNoiseStream));
      estimated_storage = prepare_selection_model(
          psd_project(build_correlation(field, cfg.model, noisy)), cfg.model_opts);
      estimated = &estimated_storage;
    }

    const auto solve_and_score = [&](const ConstraintSpec& constraint, double& eps, double& mu,
                                     bool& converged) {
      const RelaxedSolution sol = solve_relaxed(*estimated, constraint, cfg.solver);
      const SelectionResult res =
          evaluate_selection(round_to_mask(sol.p, constraint, field.gamma), field.gamma, truth);
      eps = res.epsilon;
      mu = res.mu;
      converged = sol.converged;
    };
    solve_and_score(ConstraintSpec::count(m, alpha), rec.eps_count, rec.mu_count,
                    rec.converged_count);
    const ConstraintSpec power = ConstraintSpec::sum_power(field.gamma, alpha);
    solve_and_score(power, rec.eps_power, rec.mu_power, rec.converged_power);

    const SelectionResult rnd = evaluate_selection(
        random_selection(power, derive_seed(cfg.seed, sweep_value, trial, kRandomStream)),
        field.gamma, truth);
    rec.eps_random = rnd.epsilon;
    rec.mu_random = rnd.mu;
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
    spdlog::warn("trial {} (sweep value {}, noise {}) failed: {}", trial, sweep_value, noise,
                 e.what());
  }
  return rec;
}

SweepResult run_power_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.alphas.empty()) throw ParameterError("missing required field 'alphas'");
  std::vector<Job> jobs;
  for (double noise : cfg.noise) {
    for (double alpha : cfg.alphas) {
      for (std::size_t t = 0; t < cfg.trials; ++t) jobs.push_back({cfg.field.m, alpha, noise, alpha, t});
    }
  }
  return run_jobs(cfg, jobs);
}

SweepResult run_m_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.ms.empty()) throw ParameterError("missing required field 'ms'");
  std::vector<Job> jobs;
  for (double noise : cfg.noise) {
    for (std::size_t m : cfg.ms) {
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        jobs.push_back({m, cfg.alpha, noise, static_cast<double>(m), t});
      }
    }
  }
  return run_jobs(cfg, jobs);
}

Stat aggregate(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) {
    throw ParameterError("log grid needs 0 < lo <= hi and at least one point");
  }
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<BoundRow> run_bound_validation(const std::vector<double>& delta_over_sigma,
                                           double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
  const double h = 0.5 * std::log2(2.0 * std::numbers::pi * std::numbers::e * sigma * sigma);
  std::vector<BoundRow> rows;
  rows.reserve(delta_over_sigma.size());
  for (double r : delta_over_sigma) {
    const double delta = r * sigma;
    BoundRow row;
    row.delta_over_sigma = r;
    row.H = univariate_quantized_entropy(sigma, delta);
    row.H_lb = h - std::log2(delta);
    row.rel_err = std::abs(row.H - row.H_lb) / std::abs(row.H_lb);
    rows.push_back(row);
  }
  return rows;
}

void write_power_csv(std::ostream& out, const SweepResult& result) {
  out << "alpha,mu_mean,eps_count_mean,eps_count_se,eps_power_mean,eps_power_se,"
         "eps_random_mean,eps_random_se,trials,mu_count_mean,mu_random_mean,noise,failed\n";
  for (const auto& r : result.rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(r.sweep_value),
                       num(r.mu_power.mean), num(r.eps_count.mean), num(r.eps_count.se),
                       num(r.eps_power.mean), num(r.eps_power.se), num(r.eps_random.mean),
                       num(r.eps_random.se), r.trials, num(r.mu_count.mean),
                       num(r.mu_random.mean), num(r.noise), r.failed);
  }
}

void write_m_csv(std::ostream& out, const SweepResult& result) {
  out << "m,mu_mean,eps_count_mean,eps_count_se,eps_power_mean,eps_power_se,"
         "eps_random_mean,eps_random_se,trials,mu_count_mean,mu_random_mean,noise,failed\n";
  for (const auto& r : result.rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                       static_cast<std::size_t>(r.sweep_value), num(r.mu_power.mean),
                       num(r.eps_count.mean), num(r.eps_count.se), num(r.eps_power.mean),
                       num(r.eps_power.se), num(r.eps_random.mean), num(r.eps_random.se),
                       r.trials, num(r.mu_count.mean), num(r.mu_random.mean), num(r.noise),
                       r.failed);
  }
}

void write_bound_csv(std::ostream& out, const std::vector<BoundRow>& rows) {
  out << "delta_over_sigma,H,H_lb,rel_err\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{}\n", num(r.delta_over_sigma), num(r.H), num(r.H_lb),
                       num(r.rel_err));
  }
}

void write_trials_csv(std::ostream& out, const SweepResult& result) {
  out << "sweep_value,noise,trial,ok,eps_count,mu_count,eps_power,mu_power,eps_random,"
         "mu_random,converged_count,converged_power\n";
  for (const auto& t : result.trials) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", num(t.sweep_value), num(t.noise),
                       t.trial, t.ok ? 1 : 0, num(t.eps_count), num(t.mu_count),
                       num(t.eps_power), num(t.mu_power), num(t.eps_random), num(t.mu_random),
                       t.converged_count ? 1 : 0, t.converged_power ? 1 : 0);
  }
}

std::size_t worker_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ENTROSENSE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    spdlog::warn("ignoring ENTROSENSE_THREADS='{}'", env);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

}  // namespace entrosense
