#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "entrosense/cli.hpp"
#include "entrosense/errors.hpp"
#include "entrosense/experiment.hpp"

using namespace entrosense;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("entrosense_harness_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.field.m = 12;
  cfg.trials = 4;
  cfg.alphas = {0.3, 0.6, 1.0};
  cfg.ms = {6, 10};
  cfg.noise = {0.0, 0.1};
  cfg.threads = 2;
  return cfg;
}

}  // namespace

TEST(Config, ParsesKnownFields) {
  const ExperimentConfig cfg = config_from_json(
      R"({"m": 20, "alphas": [0.2, 0.4], "noise": [0, 0.1], "trials": 7, "seed": 9,
          "theta": 2.5, "placement_std": 1.5, "solver": "frank-wolfe"})");
  EXPECT_EQ(cfg.field.m, 20u);
  EXPECT_EQ(cfg.alphas, (std::vector<double>{0.2, 0.4}));
  EXPECT_EQ(cfg.noise, (std::vector<double>{0.0, 0.1}));
  EXPECT_EQ(cfg.trials, 7u);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.model.theta, 2.5);
  EXPECT_EQ(cfg.field.placement_std, 1.5);
  EXPECT_EQ(cfg.solver.method, SolverMethod::PairwiseFrankWolfe);
}

TEST(Config, Errors) {
  EXPECT_THROW(config_from_json(R"({"bogus": 1})"), ParseError);
  EXPECT_THROW(config_from_json(R"({"m": "many"})"), ParseError);
  EXPECT_THROW(config_from_json("{\"m\": 3,\n"), ParseError);
  EXPECT_THROW(config_from_json(R"({"solver": "simplex"})"), ParameterError);
  ExperimentConfig cfg;
  cfg.trials = 0;
  try {
    cfg.validate();
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("'trials'"), std::string::npos);
  }
}

TEST(Harness, DeriveSeedSeparatesStreams) {
  const auto a = derive_seed(1, 0.5, 3, 0);
  EXPECT_EQ(a, derive_seed(1, 0.5, 3, 0));
  EXPECT_NE(a, derive_seed(1, 0.5, 3, 1));
  EXPECT_NE(a, derive_seed(1, 0.5, 4, 0));
  EXPECT_NE(a, derive_seed(1, 0.6, 3, 0));
  EXPECT_NE(a, derive_seed(2, 0.5, 3, 0));
}

TEST(Harness, AggregateMeanAndStandardError) {
  const Stat s = aggregate({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(aggregate({7.0}).se, 0.0);
}

TEST(Harness, LogGrid) {
  const auto g = log_grid(1e-3, 1.0, 4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g.front(), 1e-3);
  EXPECT_DOUBLE_EQ(g.back(), 1.0);
  EXPECT_NEAR(g[1], 1e-2, 1e-15);
}

TEST(Harness, PowerSweepRowsInRange) {
  const SweepResult r = run_power_sweep(small_config());
  ASSERT_EQ(r.rows.size(), 6u);
  EXPECT_EQ(r.trials.size(), 24u);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.failed, 0u);
    for (const Stat* s : {&row.eps_count, &row.eps_power, &row.eps_random, &row.mu_count,
                          &row.mu_power, &row.mu_random}) {
      EXPECT_GE(s->mean, 0.0);
      EXPECT_LE(s->mean, 1.0);
    }
    if (row.sweep_value == 1.0) {
      EXPECT_NEAR(row.eps_count.mean, 0.0, 1e-12);
      EXPECT_NEAR(row.eps_power.mean, 0.0, 1e-12);
    }
  }
}

TEST(Harness, SweepIndependentOfThreadCount) {
  ExperimentConfig cfg = small_config();
  cfg.threads = 1;
  std::ostringstream a, b;
  write_power_csv(a, run_power_sweep(cfg));
  cfg.threads = 3;
  write_power_csv(b, run_power_sweep(cfg));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Harness, MSweepRequiresMs) {
  ExperimentConfig cfg = small_config();
  cfg.ms.clear();
  EXPECT_THROW(run_m_sweep(cfg), ParameterError);
  cfg = small_config();
  cfg.alphas.clear();
  EXPECT_THROW(run_power_sweep(cfg), ParameterError);
}

TEST(Harness, BoundValidationRows) {
  const auto rows = run_bound_validation(log_grid(1e-3, 1.0, 7));
  for (const auto& r : rows) {
    EXPECT_GE(r.H, r.H_lb);
    EXPECT_NEAR(r.rel_err, std::abs(r.H - r.H_lb) / std::abs(r.H_lb), 1e-15);
  }
}

TEST(Cli, ValidateBoundHeaderAndRows) {
  const CliRun r = run({"validate-bound"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(r.out), "delta_over_sigma,H,H_lb,rel_err");
  EXPECT_EQ(parse_csv(r.out).size(), 32u);
}

TEST(Cli, SelectDeterministic) {
  const std::vector<std::string> args{"select", "--m", "10", "--alpha", "0.5", "--constraint", "sum-power", "--seed", "1"};
  const CliRun a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(first_line(a.out),
            "constraint,alpha,m,rank,active,mu,epsilon,H_full,H_selected,iterations,converged,fw_gap");
}

TEST(Cli, SelectMaxPowerNeedsCap) {
  EXPECT_EQ(run({"select", "--m", "8", "--constraint", "max-power"}).code, 1);
  const CliRun r = run({"select", "--m", "8", "--constraint", "max-power", "--cap", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(parse_csv(r.out)[1][4], "8");
}

TEST(Cli, SweepPowerWithoutConfigNamesMissingField) {
  const CliRun r = run({"sweep-power"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("alphas"), std::string::npos) << r.err;
  const CliRun m = run({"sweep-m"});
  EXPECT_EQ(m.code, 1);
  EXPECT_NE(m.err.find("ms"), std::string::npos) << m.err;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"select", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run({"select", "--constraint", "median"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, ConfigErrorsExitOne) {
  const auto path = temp_file("bad.json");
  std::ofstream(path) << R"({"m": 10, "colour": "red"})";
  const CliRun r = run({"entropy", "--config", path.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
  EXPECT_EQ(run({"entropy", "--config", temp_file("missing.json").string()}).code, 1);
  std::filesystem::remove(path);
}

TEST(Cli, GenerateThenReuseScenario) {
  const auto path = temp_file("scenario.json");
  ASSERT_EQ(run({"generate", "--m", "9", "--seed", "4", "--out", path.string()}).code, 0);
  const CliRun a = run({"entropy", "--scenario", path.string()});
  const CliRun b = run({"entropy", "--m", "9", "--seed", "4"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(first_line(a.out), "m,rank,chol_rank,lambda_max,lambda_min_pos,delta,h,H_lb");
  std::filesystem::remove(path);
}

TEST(Cli, SweepCsvHeadersAndAggregation) {
  const auto trials_path = temp_file("trials.csv");
  const auto svg_path = temp_file("plot.svg");
  const CliRun r = run({"sweep-power", "--m", "12", "--alphas", "0.3,0.7", "--noise-levels", "0,0.1", "--trials",
                     "5", "--trials-out", trials_path.string(), "--svg", svg_path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(r.out),
            "alpha,mu_mean,eps_count_mean,eps_count_se,eps_power_mean,eps_power_se,eps_random_mean,"
            "eps_random_se,trials,mu_count_mean,mu_random_mean,noise,failed");
  EXPECT_NE(slurp(svg_path).find("<svg"), std::string::npos);

  // Recompute every mean from the per-trial dump.
  const auto summary = parse_csv(r.out);
  const auto trials = parse_csv(slurp(trials_path));
  std::map<std::pair<std::string, std::string>, std::vector<const std::vector<std::string>*>> groups;
  for (std::size_t i = 1; i < trials.size(); ++i) groups[{trials[i][0], trials[i][1]}].push_back(&trials[i]);
  ASSERT_EQ(summary.size(), 5u);
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& row = summary[i];
    const auto& members = groups.at({row[0], row[11]});
    ASSERT_EQ(members.size(), 5u);
    auto mean_of = [&](int col) {
      double s = 0.0;
      for (const auto* t : members) s += std::stod((*t)[static_cast<std::size_t>(col)]);
      return s / static_cast<double>(members.size());
    };
    EXPECT_NEAR(std::stod(row[1]), mean_of(7), 1e-12);   // mu of the power constraint
    EXPECT_NEAR(std::stod(row[2]), mean_of(4), 1e-12);   // eps count
    EXPECT_NEAR(std::stod(row[4]), mean_of(6), 1e-12);   // eps power
    EXPECT_NEAR(std::stod(row[6]), mean_of(8), 1e-12);   // eps random
    EXPECT_NEAR(std::stod(row[9]), mean_of(5), 1e-12);   // mu count
    EXPECT_NEAR(std::stod(row[10]), mean_of(9), 1e-12);  // mu random
  }
  std::filesystem::remove(trials_path);
  std::filesystem::remove(svg_path);
}

TEST(Cli, SweepMHeader) {
  const CliRun r = run({"sweep-m", "--ms", "5,8", "--trials", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(r.out).substr(0, 12), "m,mu_mean,ep");
  EXPECT_EQ(parse_csv(r.out).size(), 3u);
}

TEST(Cli, OracleCompareHeader) {
  const CliRun r = run({"oracle-compare", "--instances", "2", "--m", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(r.out), "instance,constraint,H_solver,H_exhaustive,ratio,converged,fw_gap");
  EXPECT_EQ(parse_csv(r.out).size(), 5u);
}
