#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "entrosense/corrmodel.hpp"
#include "entrosense/entropy.hpp"
#include "entrosense/speclinalg.hpp"

namespace entrosense {

enum class ConstraintKind {
  Count,     ///< number of active sensors <= alpha * M
  SumPower,  ///< sum of active gamma <= alpha * sum(gamma)
  MaxPower,  ///< every active gamma <= cap
};

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::Count;
  double alpha = 1.0;
  Eigen::VectorXd weights;  ///< all-ones for Count, gamma otherwise
  double budget = 0.0;      ///< alpha * sum(weights), or the cap for MaxPower

  static ConstraintSpec count(std::size_t m, double alpha);
  static ConstraintSpec sum_power(std::span<const double> gamma, double alpha);
  static ConstraintSpec max_power(std::span<const double> gamma, double cap);

  Eigen::Index size() const noexcept { return weights.size(); }

  /// Budget check with a 1e-12 relative slack for summation order.
  bool admits(const Mask& active) const;
};

/// Everything the relaxed problem needs, derived once from a correlation matrix.
/// `c` is the rank-truncated (exactly singular) approximation of the input.
struct SelectionModel {
  RawCorrelation c;
  SpectralData spectrum;
  ReducedCholesky chol;
  Eigen::VectorXd cbar_diag;  ///< diag(C) / ||C||_2
  QuantizationSpec quant;
  EntropyReport full;

  Eigen::Index size() const noexcept { return c.size(); }
};

struct ModelOptions {
  double nu = kDefaultNu;
  double rank_tol = kDefaultRankTol;
  double chol_tol = kDefaultCholTol;
  bool truncate = true;  ///< replace C by its rank-r spectral truncation
};

SelectionModel prepare_selection_model(const RawCorrelation& c, const ModelOptions& opts = {});

/// diag(C) / lambda_max(C).
Eigen::VectorXd normalized_diagonal(const RawCorrelation& c);

/// Concave lower bound on the relaxed entropy:
/// 0.5 * (tr(diag(p) Cbar) log2(2 pi e / delta^2) + log2 det(L^T diag(p) L)).
double objective_lb(const Eigen::VectorXd& p, const Eigen::VectorXd& cbar_diag,
                    const Eigen::MatrixXd& l, const QuantizationSpec& q);

Eigen::VectorXd objective_gradient(const Eigen::VectorXd& p, const Eigen::VectorXd& cbar_diag,
                                   const Eigen::MatrixXd& l, const QuantizationSpec& q);

enum class SolverMethod {
  InteriorPoint,       ///< log-barrier Newton; default
  PairwiseFrankWolfe,  ///< slower, kept as a cross-check
};

struct SolverConfig {
  SolverMethod method = SolverMethod::InteriorPoint;
  double tol = 1e-6;  ///< Frank-Wolfe gap, bits
  int max_iters = 2000;  ///< Newton steps or Frank-Wolfe iterations
  bool record_history = false;
};

struct RelaxedSolution {
  Eigen::VectorXd p;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double duality_gap = 0.0;
  std::vector<double> history;  ///< objective per Frank-Wolfe iterate or per barrier stage
};

/// Pairwise Frank-Wolfe over {nu <= p <= 1, weights . p <= budget}.
/// Throws ParameterError if nu * sum(weights) > budget or for MaxPower.
RelaxedSolution solve_relaxed(const SelectionModel& model, const ConstraintSpec& constraint,
                              const SolverConfig& cfg = {});

/// Frank-Wolfe vertex for gradient g: a fractional knapsack by g_i / w_i.
Eigen::VectorXd linear_maximizer(const Eigen::VectorXd& g, const ConstraintSpec& constraint,
                                 double nu);

struct SelectionResult {
  Mask b;
  double mu = 0.0;       ///< sum(b gamma) / sum(gamma)
  double epsilon = 1.0;  ///< relative loss of the quantized entropy bound
  std::size_t active_count = 0;
  bool empty = true;  ///< no sensor active; epsilon is then 1
  EntropyReport selected;
  RelaxedSolution relaxed;
};

/// Sort by p descending (p compared on a 1e-9 grid), then gamma ascending,
/// then index; activate greedily while the constraint admits the sensor.
Mask round_to_mask(const Eigen::VectorXd& p, const ConstraintSpec& constraint,
                   std::span<const double> gamma);

/// mu, epsilon and the entropy report of `active`, measured on `model`.
SelectionResult evaluate_selection(const Mask& active, std::span<const double> gamma,
                                   const SelectionModel& model);

SelectionResult round_selection(const RelaxedSolution& sol, const ConstraintSpec& constraint,
                                std::span<const double> gamma, const SelectionModel& model);

/// Brute force over all feasible masks. Ties: fewer active, then the
/// lexicographically smallest index list. Refuses M > max_m.
SelectionResult exhaustive_select(const SelectionModel& model, const ConstraintSpec& constraint,
                                  std::span<const double> gamma, std::size_t max_m = 15);

/// Random order, same greedy guard as rounding.
Mask random_selection(const ConstraintSpec& constraint, std::uint64_t seed);

Mask threshold_select_max_power(std::span<const double> gamma, double cap);

}  // namespace entrosense
