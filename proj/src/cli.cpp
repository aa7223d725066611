#include "entrosense/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "entrosense/errors.hpp"
#include "entrosense/experiment.hpp"
#include "entrosense/svg.hpp"

namespace entrosense {
namespace {

std::string num(double v) { return fmt::format("{}", v); }

// Flags shared by the scenario-driven subcommands. Unset flags leave the
// config (file or defaults) untouched.
struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::size_t> m;
  std::optional<double> placement_std, sigma, gamma_low, gamma_high, theta;
  std::optional<double> nu, rank_tol, chol_tol, solver_tol;
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> solver;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON experiment config");
    app->add_option("--out", out, "Output path (default: stdout)");
    app->add_option("--m", m, "Number of sensors");
    app->add_option("--placement-std", placement_std, "Per-axis placement std (m)");
    app->add_option("--sigma", sigma, "Signal standard deviation");
    app->add_option("--gamma-low", gamma_low, "Lowest sensor power (W)");
    app->add_option("--gamma-high", gamma_high, "Highest sensor power (W)");
    app->add_option("--theta", theta, "Correlation range (m)");
    app->add_option("--nu", nu, "Relaxation floor; also scales the quantization step");
    app->add_option("--rank-tol", rank_tol, "Relative eigenvalue cutoff for the numerical rank");
    app->add_option("--chol-tol", chol_tol, "Pivoted Cholesky stopping tolerance");
    app->add_option("--solver-tol", solver_tol, "Optimality gap tolerance (bits)");
    app->add_option("--max-iters", max_iters, "Newton step or Frank-Wolfe iteration cap");
    app->add_option("--seed", seed, "Master seed");
    app->add_option("--solver", solver, "interior-point | frank-wolfe")
        ->check(CLI::IsMember({"interior-point", "frank-wolfe"}));
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    if (m) cfg.field.m = *m;
    if (placement_std) cfg.field.placement_std = *placement_std;
    if (sigma) cfg.field.sigma = *sigma;
    if (gamma_low) cfg.field.gamma_low = *gamma_low;
    if (gamma_high) cfg.field.gamma_high = *gamma_high;
    if (theta) cfg.model.theta = *theta;
    if (nu) cfg.model_opts.nu = *nu;
    if (rank_tol) cfg.model_opts.rank_tol = *rank_tol;
    if (chol_tol) cfg.model_opts.chol_tol = *chol_tol;
    if (solver_tol) cfg.solver.tol = *solver_tol;
    if (max_iters) cfg.solver.max_iters = *max_iters;
    if (seed) cfg.seed = *seed;
    if (solver) cfg.solver.method = solver_method_from_name(*solver);
    return cfg;
  }
};

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ParameterError("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }

 private:
  std::ofstream file_;
  std::ostream& fallback_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ParameterError("cannot open " + path + " for writing");
  f << text;
}

SensorField field_for(const ExperimentConfig& cfg, const std::string& scenario) {
  if (!scenario.empty()) return load_field(scenario);
  FieldParams fp = cfg.field;
  fp.seed = cfg.seed;
  return generate_field(fp);
}

// Model used for decisions: exact distances, or noisy ones when rel_std > 0.
SelectionModel estimated_model(const ExperimentConfig& cfg, const SensorField& field,
                               double rel_std) {
  const DistanceMatrix dist = distance_matrix(field);
  if (rel_std <= 0.0) return prepare_selection_model(build_correlation(field, cfg.model, dist), cfg.model_opts);
  const DistanceMatrix noisy = perturb_distances(dist, rel_std, derive_seed(cfg.seed, 0.0, 0, 1));
  return prepare_selection_model(psd_project(build_correlation(field, cfg.model, noisy)),
                                 cfg.model_opts);
}

void plot_sweep(const std::string& path, const SweepResult& result, bool power_axis) {
  std::vector<PlotSeries> series;
  for (const auto& row : result.rows) {
    const std::string suffix = row.noise > 0.0 ? fmt::format(" (noise {})", row.noise) : "";
    auto find = [&](const std::string& name) -> PlotSeries& {
      for (auto& s : series) {
        if (s.name == name) return s;
      }
      series.push_back({name, {}, {}});
      return series.back();
    };
    auto& sc = find("count" + suffix);
    sc.x.push_back(power_axis ? row.mu_count.mean : row.sweep_value);
    sc.y.push_back(row.eps_count.mean);
    auto& sp = find("sum-power" + suffix);
    sp.x.push_back(power_axis ? row.mu_power.mean : row.sweep_value);
    sp.y.push_back(row.eps_power.mean);
    auto& sr = find("random" + suffix);
    sr.x.push_back(power_axis ? row.mu_random.mean : row.sweep_value);
    sr.y.push_back(row.eps_random.mean);
  }
  PlotSpec spec;
  spec.title = power_axis ? "Relative entropy loss vs consumed power" : "Relative entropy loss vs M";
  spec.x_label = power_axis ? "mu" : "M";
  spec.y_label = "epsilon";
  write_text(path, render_line_plot(spec, series));
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy-driven sensor selection experiments", "entrosense"};
  app.require_subcommand(1);

  CommonFlags gen_flags, ent_flags, sel_flags, pow_flags, msw_flags, orc_flags;

  auto* gen = app.add_subcommand("generate", "Generate a sensor field and write it as JSON");
  gen_flags.attach(gen);

  std::string ent_scenario;
  double ent_noise = 0.0;
  auto* ent = app.add_subcommand("entropy", "Entropy of the full field");
  ent_flags.attach(ent);
  ent->add_option("--scenario", ent_scenario, "Scenario JSON (default: generate)");
  ent->add_option("--noise", ent_noise, "Relative distance-noise std");

  std::string sel_scenario, sel_sensors_out, sel_constraint = "sum-power";
  double sel_alpha = 0.5, sel_noise = 0.0;
  std::optional<double> sel_cap;
  auto* sel = app.add_subcommand("select", "Choose active sensors for one field");
  sel_flags.attach(sel);
  sel->add_option("--scenario", sel_scenario, "Scenario JSON (default: generate)");
  sel->add_option("--alpha", sel_alpha, "Budget fraction");
  sel->add_option("--constraint", sel_constraint, "count | sum-power | max-power")
      ->check(CLI::IsMember({"count", "sum-power", "max-power"}));
  sel->add_option("--cap", sel_cap, "Per-sensor power cap for max-power (W)");
  sel->add_option("--noise", sel_noise, "Relative distance-noise std used for the decision");
  sel->add_option("--sensors-out", sel_sensors_out, "Per-sensor CSV output");

  std::optional<std::vector<double>> pow_alphas, pow_noise, msw_noise;
  std::optional<std::size_t> pow_trials, msw_trials, pow_threads, msw_threads;
  std::string pow_svg, pow_trials_out, msw_svg, msw_trials_out;
  auto* pow = app.add_subcommand("sweep-power", "Entropy loss versus power budget");
  pow_flags.attach(pow);
  pow->add_option("--alphas", pow_alphas, "Budget fractions")->delimiter(',');
  pow->add_option("--noise-levels", pow_noise, "Relative distance-noise levels")->delimiter(',');
  pow->add_option("--trials", pow_trials, "Monte Carlo trials per point");
  pow->add_option("--threads", pow_threads, "Worker threads");
  pow->add_option("--svg", pow_svg, "Also write an SVG plot");
  pow->add_option("--trials-out", pow_trials_out, "Per-trial CSV");

  std::optional<std::vector<std::size_t>> msw_ms;
  std::optional<double> msw_alpha;
  auto* msw = app.add_subcommand("sweep-m", "Entropy loss versus number of sensors");
  msw_flags.attach(msw);
  msw->add_option("--ms", msw_ms, "Sensor counts")->delimiter(',');
  msw->add_option("--alpha", msw_alpha, "Budget fraction");
  msw->add_option("--noise-levels", msw_noise, "Relative distance-noise levels")->delimiter(',');
  msw->add_option("--trials", msw_trials, "Monte Carlo trials per point");
  msw->add_option("--threads", msw_threads, "Worker threads");
  msw->add_option("--svg", msw_svg, "Also write an SVG plot");
  msw->add_option("--trials-out", msw_trials_out, "Per-trial CSV");

  double vb_min = 1e-3, vb_max = 1.0, vb_sigma = 1.0;
  std::size_t vb_points = 31;
  std::string vb_out, vb_svg;
  auto* vb = app.add_subcommand("validate-bound", "Exact quantized entropy vs its lower bound (M = 1)");
  vb->add_option("--min", vb_min, "Smallest delta/sigma");
  vb->add_option("--max", vb_max, "Largest delta/sigma");
  vb->add_option("--points", vb_points, "Log-spaced grid points");
  vb->add_option("--sigma", vb_sigma, "Source standard deviation");
  vb->add_option("--out", vb_out, "Output path (default: stdout)");
  vb->add_option("--svg", vb_svg, "Also write an SVG plot");

  std::size_t orc_instances = 30;
  double orc_alpha = 0.5;
  auto* orc = app.add_subcommand("oracle-compare", "Rounded solver vs exhaustive search on small fields");
  orc_flags.attach(orc);
  orc->add_option("--instances", orc_instances, "Number of random fields");
  orc->add_option("--alpha", orc_alpha, "Budget fraction");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*gen) {
      ExperimentConfig cfg = gen_flags.resolve();
      cfg.validate();
      Output o(gen_flags.out, out);
      o.stream() << field_to_json(field_for(cfg, ""));
    } else if (*ent) {
      ExperimentConfig cfg = ent_flags.resolve();
      cfg.validate();
      const SensorField field = field_for(cfg, ent_scenario);
      const SelectionModel model = estimated_model(cfg, field, ent_noise);
      Output o(ent_flags.out, out);
      o.stream() << "m,rank,chol_rank,lambda_max,lambda_min_pos,delta,h,H_lb\n"
                 << fmt::format("{},{},{},{},{},{},{},{}\n", field.size(), model.spectrum.rank,
                                model.chol.rank(), num(model.spectrum.lambda_max),
                                num(model.spectrum.lambda_min_pos), num(model.quant.delta),
                                num(model.full.h), num(model.full.H_tilde));
    } else if (*sel) {
      ExperimentConfig cfg = sel_flags.resolve();
      cfg.validate();
      const SensorField field = field_for(cfg, sel_scenario);
      const DistanceMatrix dist = distance_matrix(field);
      const SelectionModel truth =
          prepare_selection_model(build_correlation(field, cfg.model, dist), cfg.model_opts);
      const SelectionModel model = sel_noise > 0.0 ? estimated_model(cfg, field, sel_noise) : truth;

      SelectionResult res;
      double budget_param = sel_alpha;
      if (sel_constraint == "max-power") {
        if (!sel_cap) throw ParameterError("missing required field 'cap' for max-power");
        budget_param = *sel_cap;
        res = evaluate_selection(threshold_select_max_power(field.gamma, *sel_cap), field.gamma, truth);
        res.relaxed.converged = true;
      } else {
        const ConstraintSpec c = sel_constraint == "count"
                                     ? ConstraintSpec::count(field.size(), sel_alpha)
                                     : ConstraintSpec::sum_power(field.gamma, sel_alpha);
        const RelaxedSolution sol = solve_relaxed(model, c, cfg.solver);
        res = evaluate_selection(round_to_mask(sol.p, c, field.gamma), field.gamma, truth);
        res.relaxed = sol;
      }
      Output o(sel_flags.out, out);
      o.stream() << "constraint,alpha,m,rank,active,mu,epsilon,H_full,H_selected,iterations,"
                    "converged,fw_gap\n"
                 << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", sel_constraint,
                                num(budget_param), field.size(), truth.spectrum.rank,
                                res.active_count, num(res.mu), num(res.epsilon),
                                num(truth.full.H_tilde), num(res.empty ? 0.0 : res.selected.H_tilde),
                                res.relaxed.iterations, res.relaxed.converged ? 1 : 0,
                                num(res.relaxed.duality_gap));
      if (!sel_sensors_out.empty()) {
        std::ofstream s(sel_sensors_out);
        if (!s) throw ParameterError("cannot open " + sel_sensors_out + " for writing");
        s << "sensor,x,y,gamma,p_relaxed,active\n";
        for (std::size_t i = 0; i < field.size(); ++i) {
          const double p = res.relaxed.p.size() ? res.relaxed.p[static_cast<Eigen::Index>(i)] : 0.0;
          s << fmt::format("{},{},{},{},{},{}\n", i, num(field.positions[i].x),
                           num(field.positions[i].y), num(field.gamma[i]), num(p),
                           static_cast<int>(res.b[i]));
        }
      }
    } else if (*pow) {
      ExperimentConfig cfg = pow_flags.resolve();
      if (pow_alphas) cfg.alphas = *pow_alphas;
      if (pow_noise) cfg.noise = *pow_noise;
      if (pow_trials) cfg.trials = *pow_trials;
      if (pow_threads) cfg.threads = *pow_threads;
      if (cfg.alphas.empty()) {
        throw ParameterError("missing required field 'alphas' (set it in --config or pass --alphas)");
      }
      const SweepResult r = run_power_sweep(cfg);
      Output o(pow_flags.out, out);
      write_power_csv(o.stream(), r);
      if (!pow_svg.empty()) plot_sweep(pow_svg, r, true);
      if (!pow_trials_out.empty()) {
        std::ofstream t(pow_trials_out);
        write_trials_csv(t, r);
      }
    } else if (*msw) {
      ExperimentConfig cfg = msw_flags.resolve();
      if (msw_ms) cfg.ms = *msw_ms;
      if (msw_alpha) cfg.alpha = *msw_alpha;
      if (msw_noise) cfg.noise = *msw_noise;
      if (msw_trials) cfg.trials = *msw_trials;
      if (msw_threads) cfg.threads = *msw_threads;
      if (cfg.ms.empty()) {
        throw ParameterError("missing required field 'ms' (set it in --config or pass --ms)");
      }
      const SweepResult r = run_m_sweep(cfg);
      Output o(msw_flags.out, out);
      write_m_csv(o.stream(), r);
      if (!msw_svg.empty()) plot_sweep(msw_svg, r, false);
      if (!msw_trials_out.empty()) {
        std::ofstream t(msw_trials_out);
        write_trials_csv(t, r);
      }
    } else if (*vb) {
      const auto rows = run_bound_validation(log_grid(vb_min, vb_max, vb_points), vb_sigma);
      Output o(vb_out, out);
      write_bound_csv(o.stream(), rows);
      if (!vb_svg.empty()) {
        PlotSeries h{"H (exact)", {}, {}}, lb{"lower bound", {}, {}};
        for (const auto& r : rows) {
          h.x.push_back(r.delta_over_sigma);
          h.y.push_back(r.H);
          lb.x.push_back(r.delta_over_sigma);
          lb.y.push_back(r.H_lb);
        }
        write_text(vb_svg, render_line_plot({"Quantized entropy vs bound", "delta/sigma", "bits", true, false},
                                            {h, lb}));
      }
    } else if (*orc) {
      ExperimentConfig cfg = orc_flags.resolve();
      if (!orc_flags.m) cfg.field.m = 10;
      cfg.validate();
      Output o(orc_flags.out, out);
      o.stream() << "instance,constraint,H_solver,H_exhaustive,ratio,converged,fw_gap\n";
      for (std::size_t k = 0; k < orc_instances; ++k) {
        FieldParams fp = cfg.field;
        fp.seed = derive_seed(cfg.seed, orc_alpha, k, 0);
        const SensorField field = generate_field(fp);
        const SelectionModel model = prepare_selection_model(
            build_correlation(field, cfg.model, distance_matrix(field)), cfg.model_opts);
        for (const char* name : {"count", "sum-power"}) {
          const ConstraintSpec c = std::string(name) == "count"
                                       ? ConstraintSpec::count(field.size(), orc_alpha)
                                       : ConstraintSpec::sum_power(field.gamma, orc_alpha);
          const RelaxedSolution sol = solve_relaxed(model, c, cfg.solver);
          const SelectionResult rounded = round_selection(sol, c, field.gamma, model);
          const SelectionResult best = exhaustive_select(model, c, field.gamma);
          const double hs = rounded.empty ? 0.0 : rounded.selected.H_tilde;
          const double he = best.empty ? 0.0 : best.selected.H_tilde;
          o.stream() << fmt::format("{},{},{},{},{},{},{}\n", k, name, num(hs), num(he),
                                    num(he != 0.0 ? hs / he : 0.0), sol.converged ? 1 : 0,
                                    num(sol.duality_gap));
        }
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace entrosense
