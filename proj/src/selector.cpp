#include "entrosense/selector.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "entrosense/errors.hpp"
#include "entrosense/kernels.hpp"

namespace entrosense {
namespace {

constexpr double kBudgetSlack = 1e-12;

double log2_snr_term(const QuantizationSpec& q) {
  if (!(q.delta > 0.0)) throw ParameterError("quantization step must be > 0");
  return std::log2(2.0 * std::numbers::pi * std::numbers::e / (q.delta * q.delta));
}

void check_dims(const Eigen::VectorXd& p, const Eigen::VectorXd& cbar_diag,
                const Eigen::MatrixXd& l) {
  if (p.size() != cbar_diag.size() || p.size() != l.rows()) {
    throw ParameterError("objective: dimension mismatch");
  }
}

Eigen::MatrixXd gram_of(const Eigen::MatrixXd& l, const Eigen::VectorXd& w) {
  const auto rows = static_cast<std::size_t>(l.rows());
  const auto cols = static_cast<std::size_t>(l.cols());
  Eigen::MatrixXd g(l.cols(), l.cols());
  kernels::active().weighted_gram(std::span<const double>(l.data(), rows * cols), rows, cols,
                                  std::span<const double>(w.data(), rows),
                                  std::span<double>(g.data(), cols * cols));
  return g;
}

// Exact line search of the concave 1-D restriction t -> f(p + t d) on [0, t_max].
// The log-det part only needs the r x r matrices G(p) and G(d).
class LineSearch {
 public:
  LineSearch(const SelectionModel& model, const Eigen::VectorXd& p, const Eigen::VectorXd& d,
             double snr)
      : g0_(gram_of(model.chol.l, p)),
        dg_(gram_of(model.chol.l, d)),
        linear_(0.5 * snr * model.cbar_diag.dot(d)) {}

  double run(double t_max) const {
    double lo = 0.0;
    double hi = t_max;
    double slope_hi = 0.0;
    double curv = 0.0;
    if (!eval(hi, slope_hi, curv) || slope_hi >= 0.0) {
      if (slope_hi >= 0.0) return hi;
    }
    double slope = 0.0;
    if (!eval(lo, slope, curv) || slope <= 0.0) return 0.0;

    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
      if (!eval(t, slope, curv)) {
        hi = t;
        t = 0.5 * (lo + hi);
        continue;
      }
      if (slope > 0.0) {
        lo = t;
      } else {
        hi = t;
      }
      // Newton may approach the root from above, so a converged t beats lo.
      if (std::abs(slope) <= 1e-13 * (1.0 + std::abs(linear_))) return t;
      if (hi - lo <= 1e-15 * t_max) break;
      double next = curv < 0.0 ? t - slope / curv : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      t = next;
    }
    return lo;
  }

 private:
  bool eval(double t, double& slope, double& curv) const {
    const Eigen::MatrixXd g = g0_ + t * dg_;
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::MatrixXd x = llt.solve(dg_);
    slope = linear_ + 0.5 * x.trace() / std::numbers::ln2;
    curv = -0.5 * x.cwiseProduct(x.transpose()).sum() / std::numbers::ln2;
    return std::isfinite(slope);
  }

  Eigen::MatrixXd g0_;
  Eigen::MatrixXd dg_;
  double linear_;
};

struct ActiveVertex {
  Eigen::VectorXd v;
  double weight;
};

// Order in which rounding and random selection visit sensors is fixed by the
// caller; this applies the shared greedy guard.
Mask greedy_fill(const std::vector<std::size_t>& order, const ConstraintSpec& constraint) {
  const auto m = static_cast<std::size_t>(constraint.size());
  Mask b(m, 0);
  const double limit = constraint.budget * (1.0 + kBudgetSlack);
  double used = 0.0;
  for (std::size_t i : order) {
    const double w = constraint.weights[static_cast<Eigen::Index>(i)];
    if (constraint.kind == ConstraintKind::MaxPower) {
      if (w <= limit) b[i] = 1;
    } else if (used + w <= limit) {
      b[i] = 1;
      used += w;
    }
  }
  return b;
}

}  // namespace

ConstraintSpec ConstraintSpec::count(std::size_t m, double alpha) {
  if (m == 0) throw ParameterError("constraint over zero sensors");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must be in (0, 1]");
  ConstraintSpec c;
  c.kind = ConstraintKind::Count;
  c.alpha = alpha;
  c.weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m));
  c.budget = alpha * static_cast<double>(m);
  return c;
}

ConstraintSpec ConstraintSpec::sum_power(std::span<const double> gamma, double alpha) {
  if (gamma.empty()) throw ParameterError("constraint over zero sensors");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must be in (0, 1]");
  ConstraintSpec c;
  c.kind = ConstraintKind::SumPower;
  c.alpha = alpha;
  c.weights = Eigen::Map<const Eigen::VectorXd>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
  if ((c.weights.array() < 0.0).any()) throw ParameterError("power weights must be >= 0");
  c.budget = alpha * c.weights.sum();
  if (!(c.budget > 0.0)) throw ParameterError("power budget must be > 0");
  return c;
}

ConstraintSpec ConstraintSpec::max_power(std::span<const double> gamma, double cap) {
  if (gamma.empty()) throw ParameterError("constraint over zero sensors");
  if (!(cap > 0.0)) throw ParameterError("power cap must be > 0");
  ConstraintSpec c;
  c.kind = ConstraintKind::MaxPower;
  c.alpha = 1.0;
  c.weights = Eigen::Map<const Eigen::VectorXd>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
  c.budget = cap;
  return c;
}

bool ConstraintSpec::admits(const Mask& active) const {
  if (static_cast<Eigen::Index>(active.size()) != weights.size()) return false;
  const double limit = budget * (1.0 + kBudgetSlack);
  double used = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!active[i]) continue;
    const double w = weights[static_cast<Eigen::Index>(i)];
    if (kind == ConstraintKind::MaxPower) {
      if (w > limit) return false;
    } else {
      used += w;
    }
  }
  return kind == ConstraintKind::MaxPower || used <= limit;
}

Eigen::VectorXd normalized_diagonal(const RawCorrelation& c) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.c, Eigen::EigenvaluesOnly);
  const double spectral_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(spectral_norm > 0.0)) throw DomainError("correlation matrix is zero");
  return c.c.diagonal() / spectral_norm;
}

SelectionModel prepare_selection_model(const RawCorrelation& c, const ModelOptions& opts) {
  SelectionModel model;
  const SpectralData raw = eig_sym(c.c, opts.rank_tol);
  if (raw.rank < 1) throw DomainError("correlation matrix has numerical rank 0");
  model.c = opts.truncate ? RawCorrelation{truncate_to_rank(raw)} : c;
  model.spectrum = opts.truncate ? eig_sym(model.c.c, opts.rank_tol) : raw;
  model.chol = pivoted_cholesky(model.c.c, opts.chol_tol);
  if (model.chol.rank() != model.spectrum.rank) {
    spdlog::warn("pivoted Cholesky rank {} differs from spectral rank {}", model.chol.rank(),
                 model.spectrum.rank);
  }
  model.cbar_diag = model.c.c.diagonal() / model.spectrum.lambda_max;
  model.quant = choose_delta(model.spectrum, opts.nu);
  model.full = entropy_report(model.spectrum, model.quant);
  return model;
}

double objective_lb(const Eigen::VectorXd& p, const Eigen::VectorXd& cbar_diag,
                    const Eigen::MatrixXd& l, const QuantizationSpec& q) {
  check_dims(p, cbar_diag, l);
  return 0.5 * (cbar_diag.dot(p) * log2_snr_term(q) + logdet_gram_value(l, p));
}

Eigen::VectorXd objective_gradient(const Eigen::VectorXd& p, const Eigen::VectorXd& cbar_diag,
                                   const Eigen::MatrixXd& l, const QuantizationSpec& q) {
  check_dims(p, cbar_diag, l);
  const LogDetGram lg = logdet_gram(l, p);
  return 0.5 * (cbar_diag * log2_snr_term(q) + lg.gradient);
}

Eigen::VectorXd linear_maximizer(const Eigen::VectorXd& g, const ConstraintSpec& constraint,
                                 double nu) {
  const Eigen::Index m = g.size();
  const Eigen::VectorXd& w = constraint.weights;
  Eigen::VectorXd s = Eigen::VectorXd::Constant(m, nu);
  double remaining = constraint.budget - nu * w.sum();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  // Zero-weight coordinates are free and go first.
  auto ratio = [&](Eigen::Index i) {
    return w[i] > 0.0 ? g[i] / w[i] : std::numeric_limits<double>::infinity();
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return ratio(a) > ratio(b); });

  for (Eigen::Index i : order) {
    if (g[i] <= 0.0) break;
    if (w[i] <= 0.0) {
      s[i] = 1.0;
      continue;
    }
    if (remaining <= 0.0) break;
    const double t = std::min(1.0 - nu, remaining / w[i]);
    s[i] += t;
    remaining -= t * w[i];
  }
  return s;
}

namespace {

RelaxedSolution solve_pairwise_fw(const SelectionModel& model, const ConstraintSpec& constraint,
                                  const SolverConfig& cfg) {
  const double nu = model.quant.nu;

  const double snr = log2_snr_term(model.quant);
  const Eigen::MatrixXd& l = model.chol.l;
  auto value = [&](const Eigen::VectorXd& p) { return objective_lb(p, model.cbar_diag, l, model.quant); };
  auto gradient = [&](const Eigen::VectorXd& p) {
    return objective_gradient(p, model.cbar_diag, l, model.quant);
  };

  // Start from the vertex chosen by the gradient at the uniform feasible point.
  const double level =
      std::clamp(constraint.budget / constraint.weights.sum(), nu, 1.0);
  std::vector<ActiveVertex> active;
  active.push_back({linear_maximizer(gradient(Eigen::VectorXd::Constant(model.size(), level)),
                                     constraint, nu),
                    1.0});

  RelaxedSolution sol;
  Eigen::VectorXd p = active.front().v;
  double f = value(p);
  sol.p = p;
  sol.objective = f;
  if (cfg.record_history) sol.history.push_back(f);

  double gap = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    const Eigen::VectorXd g = gradient(p);
    const Eigen::VectorXd s = linear_maximizer(g, constraint, nu);
    gap = g.dot(s - p);
    if (gap <= cfg.tol) break;

    // Away vertex: the active vertex with the smallest linear score.
    std::size_t away = 0;
    double worst = g.dot(active[0].v);
    for (std::size_t k = 1; k < active.size(); ++k) {
      const double score = g.dot(active[k].v);
      if (score < worst) {
        worst = score;
        away = k;
      }
    }
    const Eigen::VectorXd d = s - active[away].v;
    const double t_max = active[away].weight;
    const double t = LineSearch(model, p, d, snr).run(t_max);
    if (t <= 0.0) {
      spdlog::debug("line search stalled at gap {}", gap);
      break;
    }

    p += t * d;
    active[away].weight -= t;
    auto hit = std::find_if(active.begin(), active.end(),
                            [&](const ActiveVertex& a) { return a.v == s; });
    if (hit != active.end()) {
      hit->weight += t;
    } else {
      active.push_back({s, t});
    }
    if (t >= t_max) active[away].weight = 0.0;
    std::erase_if(active, [](const ActiveVertex& a) { return a.weight <= 0.0; });

    f = value(p);
    if (cfg.record_history) sol.history.push_back(f);
    if (f >= sol.objective) {
      sol.objective = f;
      sol.p = p;
    }
  }

  sol.iterations = it;
  const Eigen::VectorXd g = gradient(sol.p);
  sol.duality_gap = g.dot(linear_maximizer(g, constraint, nu) - sol.p);
  sol.converged = sol.duality_gap <= cfg.tol;
  return sol;
}

// Log-barrier path following on
//   f(p) + tau * [sum log(p - nu) + sum log(1 - p) + log(budget - w.p)].
// The barrier has parameter 2M + 1, so a centred point is within (2M + 1) tau
// of the optimum; tau shrinks until the Frank-Wolfe gap certifies tol.
class BarrierProblem {
 public:
  BarrierProblem(const SelectionModel& model, const ConstraintSpec& constraint)
      : model_(model), w_(constraint.weights), budget_(constraint.budget),
        nu_(model.quant.nu), snr_(log2_snr_term(model.quant)) {}

  bool interior(const Eigen::VectorXd& p) const {
    return (p.array() > nu_).all() && (p.array() < 1.0).all() && w_.dot(p) < budget_;
  }

  double barrier(const Eigen::VectorXd& p) const {
    return (p.array() - nu_).log().sum() + (1.0 - p.array()).log().sum() +
           std::log(budget_ - w_.dot(p));
  }

  double value(const Eigen::VectorXd& p) const {
    return objective_lb(p, model_.cbar_diag, model_.chol.l, model_.quant);
  }

  // Gradient and Hessian of the penalized objective.
  void derivatives(const Eigen::VectorXd& p, double tau, Eigen::VectorXd& grad,
                   Eigen::MatrixXd& hess) const {
    const Eigen::MatrixXd& l = model_.chol.l;
    Eigen::LLT<Eigen::MatrixXd> llt(gram_of(l, p));
    if (llt.info() != Eigen::Success) throw DomainError("singular Gram matrix in the barrier solver");
    const Eigen::MatrixXd x = llt.solve(l.transpose());  // G^-1 L^T
    const Eigen::MatrixXd k = l * x;                     // L G^-1 L^T
    const double inv_ln2 = 1.0 / std::numbers::ln2;
    const double slack = budget_ - w_.dot(p);
    const Eigen::ArrayXd lo = p.array() - nu_;
    const Eigen::ArrayXd hi = 1.0 - p.array();
    grad = 0.5 * (model_.cbar_diag * snr_ + inv_ln2 * k.diagonal());
    grad.array() += tau * (1.0 / lo - 1.0 / hi);
    grad -= (tau / slack) * w_;
    hess = -0.5 * inv_ln2 * k.cwiseProduct(k);
    hess.diagonal().array() -= tau * (1.0 / lo.square() + 1.0 / hi.square());
    hess -= (tau / (slack * slack)) * w_ * w_.transpose();
  }

  // Largest step keeping p + t d strictly inside, scaled back from the boundary.
  double max_step(const Eigen::VectorXd& p, const Eigen::VectorXd& d) const {
    double t = 1.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (d[i] < 0.0) t = std::min(t, 0.99 * (p[i] - nu_) / -d[i]);
      if (d[i] > 0.0) t = std::min(t, 0.99 * (1.0 - p[i]) / d[i]);
    }
    const double wd = w_.dot(d);
    if (wd > 0.0) t = std::min(t, 0.99 * (budget_ - w_.dot(p)) / wd);
    return t;
  }

 private:
  const SelectionModel& model_;
  const Eigen::VectorXd& w_;
  double budget_;
  double nu_;
  double snr_;
};

RelaxedSolution solve_interior_point(const SelectionModel& model,
                                     const ConstraintSpec& constraint, const SolverConfig& cfg) {
  const double nu = model.quant.nu;
  const Eigen::Index m = model.size();
  BarrierProblem prob(model, constraint);
  const auto gap_at = [&](const Eigen::VectorXd& p) {
    const Eigen::VectorXd g = objective_gradient(p, model.cbar_diag, model.chol.l, model.quant);
    return g.dot(linear_maximizer(g, constraint, nu) - p);
  };

  RelaxedSolution sol;
  const double level = std::min(1.0, constraint.budget / constraint.weights.sum());
  Eigen::VectorXd p = Eigen::VectorXd::Constant(m, nu + 0.5 * (level - nu));
  if (!prob.interior(p)) {
    // Only nu * sum(w) == budget leaves no interior; the floor is then the answer.
    sol.p = Eigen::VectorXd::Constant(m, nu);
    sol.objective = prob.value(sol.p);
    sol.duality_gap = gap_at(sol.p);
    sol.converged = sol.duality_gap <= cfg.tol;
    return sol;
  }

  const double barrier_param = 2.0 * static_cast<double>(m) + 1.0;
  double tau = 1.0;
  int steps = 0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  while (steps < cfg.max_iters) {
    // Centring by damped Newton with backtracking on the penalized objective.
    for (; steps < cfg.max_iters; ++steps) {
      prob.derivatives(p, tau, grad, hess);
      Eigen::LLT<Eigen::MatrixXd> llt(-hess);
      if (llt.info() != Eigen::Success) throw DomainError("barrier Hessian is not definite");
      const Eigen::VectorXd d = llt.solve(grad);
      const double decrement = grad.dot(d);
      if (decrement <= 1e-12) break;
      const double f0 = prob.value(p) + tau * prob.barrier(p);
      double t = prob.max_step(p, d);
      bool moved = false;
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        const Eigen::VectorXd q = p + t * d;
        if (prob.interior(q) && prob.value(q) + tau * prob.barrier(q) >= f0 + 0.25 * t * decrement) {
          p = q;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (cfg.record_history) sol.history.push_back(prob.value(p));
    if (barrier_param * tau <= 0.5 * cfg.tol && gap_at(p) <= cfg.tol) break;
    if (tau < 1e-16) break;
    tau *= 0.1;
  }

  sol.p = p;
  sol.objective = prob.value(p);
  sol.iterations = steps;
  sol.duality_gap = gap_at(p);
  sol.converged = sol.duality_gap <= cfg.tol;
  return sol;
}

}  // namespace

RelaxedSolution solve_relaxed(const SelectionModel& model, const ConstraintSpec& constraint,
                              const SolverConfig& cfg) {
  if (constraint.kind == ConstraintKind::MaxPower) {
    throw ParameterError("max-power constraint is solved by threshold_select_max_power");
  }
  if (constraint.size() != model.size()) throw ParameterError("constraint size mismatch");
  if (model.quant.nu * constraint.weights.sum() > constraint.budget) {
    throw ParameterError("infeasible constraint: nu * sum(weights) exceeds the budget");
  }
  return cfg.method == SolverMethod::PairwiseFrankWolfe ? solve_pairwise_fw(model, constraint, cfg)
                                                        : solve_interior_point(model, constraint, cfg);
}

Mask round_to_mask(const Eigen::VectorXd& p, const ConstraintSpec& constraint,
                   std::span<const double> gamma) {
  const auto m = static_cast<std::size_t>(p.size());
  if (gamma.size() != m || static_cast<std::size_t>(constraint.size()) != m) {
    throw ParameterError("round_to_mask: dimension mismatch");
  }
  std::vector<long long> grid(m);
  for (std::size_t i = 0; i < m; ++i) grid[i] = std::llround(p[static_cast<Eigen::Index>(i)] * 1e9);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (grid[a] != grid[b]) return grid[a] > grid[b];
    if (gamma[a] != gamma[b]) return gamma[a] < gamma[b];
    return a < b;
  });
  return greedy_fill(order, constraint);
}

SelectionResult evaluate_selection(const Mask& active, std::span<const double> gamma,
                                   const SelectionModel& model) {
  if (static_cast<Eigen::Index>(active.size()) != model.size() || gamma.size() != active.size()) {
    throw ParameterError("evaluate_selection: dimension mismatch");
  }
  SelectionResult r;
  r.b = active;
  double used = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    total += gamma[i];
    if (active[i]) {
      used += gamma[i];
      ++r.active_count;
    }
  }
  r.mu = total > 0.0 ? std::clamp(used / total, 0.0, 1.0) : 0.0;
  r.empty = r.active_count == 0;
  if (r.empty) {
    r.epsilon = 1.0;
    return r;
  }
  r.selected = selected_entropy_lb(model.c, active, model.quant, model.spectrum.rel_tol,
                                   model.spectrum.lambda_max);
  r.epsilon = relative_entropy_loss(model.full, r.selected);
  return r;
}

SelectionResult round_selection(const RelaxedSolution& sol, const ConstraintSpec& constraint,
                                std::span<const double> gamma, const SelectionModel& model) {
  SelectionResult r = evaluate_selection(round_to_mask(sol.p, constraint, gamma), gamma, model);
  if (r.empty) spdlog::warn("rounding produced an empty selection");
  r.relaxed = sol;
  return r;
}

SelectionResult exhaustive_select(const SelectionModel& model, const ConstraintSpec& constraint,
                                  std::span<const double> gamma, std::size_t max_m) {
  const auto m = static_cast<std::size_t>(model.size());
  if (m > max_m || m >= 63) {
    throw ParameterError("exhaustive_select refuses M = " + std::to_string(m) +
                         " (limit " + std::to_string(max_m) + ")");
  }
  Mask best;
  double best_h = -std::numeric_limits<double>::infinity();
  std::size_t best_count = 0;
  Mask b(m, 0);
  for (std::uint64_t bits = 1; bits < (std::uint64_t{1} << m); ++bits) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < m; ++i) {
      b[i] = static_cast<std::uint8_t>((bits >> i) & 1U);
      count += b[i];
    }
    if (!constraint.admits(b)) continue;
    const double h = selected_entropy_lb(model.c, b, model.quant, model.spectrum.rel_tol,
                                         model.spectrum.lambda_max)
                         .H_tilde;
    const double tie = 1e-9 * std::max(1.0, std::abs(best_h));
    bool take = false;
    if (best.empty() || h > best_h + tie) {
      take = true;
    } else if (h >= best_h - tie) {
      if (count < best_count) {
        take = true;
      } else if (count == best_count) {
        // Smaller index list first: the first differing sensor is active in `b`.
        for (std::size_t i = 0; i < m; ++i) {
          if (b[i] != best[i]) {
            take = b[i] != 0;
            break;
          }
        }
      }
    }
    if (take) {
      best = b;
      best_h = h;
      best_count = count;
    }
  }
  if (best.empty()) return evaluate_selection(Mask(m, 0), gamma, model);
  return evaluate_selection(best, gamma, model);
}

Mask random_selection(const ConstraintSpec& constraint, std::uint64_t seed) {
  std::vector<std::size_t> order(static_cast<std::size_t>(constraint.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return greedy_fill(order, constraint);
}

Mask threshold_select_max_power(std::span<const double> gamma, double cap) {
  Mask b(gamma.size(), 0);
  for (std::size_t i = 0; i < gamma.size(); ++i) b[i] = gamma[i] <= cap ? 1 : 0;
  return b;
}

}  // namespace entrosense
