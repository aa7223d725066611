#include "entrosense/entropy.hpp"

#include <cmath>
#include <numbers>

#include "entrosense/errors.hpp"

namespace entrosense {
namespace {

const double kLog2TwoPiE = std::log2(2.0 * std::numbers::pi * std::numbers::e);

}  // namespace

double differential_entropy(const SpectralData& spec) {
  if (spec.rank < 1) throw DomainError("differential entropy undefined: rank 0");
  return 0.5 * (static_cast<double>(spec.rank) * kLog2TwoPiE + pseudo_log_det(spec));
}

double quantized_entropy_lb(double h, Eigen::Index rank, const QuantizationSpec& q) {
  if (rank < 1) throw DomainError("quantized entropy bound undefined: rank 0");
  if (!(q.delta > 0.0)) throw ParameterError("quantization step must be > 0");
  return h - static_cast<double>(rank) * std::log2(q.delta);
}

EntropyReport entropy_report(const SpectralData& spec, const QuantizationSpec& q) {
  EntropyReport r;
  r.h = differential_entropy(spec);
  r.rank_used = spec.rank;
  r.delta = q.delta;
  r.H_tilde = quantized_entropy_lb(r.h, r.rank_used, q);
  return r;
}

EntropyReport selected_entropy_lb(const RawCorrelation& c, const Mask& active,
                                  const QuantizationSpec& q, double rel_tol,
                                  double reference_lambda_max) {
  if (static_cast<Eigen::Index>(active.size()) != c.size()) {
    throw ParameterError("selection mask length does not match correlation size");
  }
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i]) idx.push_back(static_cast<Eigen::Index>(i));
  }
  if (idx.empty()) throw DomainError("entropy of an empty selection is undefined");

  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd sub(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = c.c(idx[a], idx[b]);
  }
  return entropy_report(eig_sym(sub, rel_tol, reference_lambda_max), q);
}

QuantizationSpec choose_delta(const SpectralData& spec, double nu) {
  if (!(nu > 0.0 && nu < 1.0)) throw ParameterError("nu must be in (0, 1)");
  if (spec.rank < 1) throw DomainError("choose_delta: rank 0");
  return QuantizationSpec{nu * spec.lambda_min_pos, nu};
}

double univariate_quantized_entropy(double sigma, double delta) {
  if (!(sigma > 0.0) || !(delta > 0.0)) throw ParameterError("sigma and delta must be > 0");
  constexpr double kTail = 1e-15;
  const double step = delta / sigma / std::numbers::sqrt2;

  // Mass of [k step, (k+1) step) in units of the standard normal, using erf
  // near the origin and erfc in the tail to avoid cancellation.
  auto bin_mass = [](double lo, double hi) {
    if (hi < 1.0) return 0.5 * (std::erf(hi) - std::erf(lo));
    return 0.5 * (std::erfc(lo) - std::erfc(hi));
  };

  // Bins k and -k-1 carry equal mass.
  long double sum = 0.0L;
  for (long k = 0;; ++k) {
    const double lo = static_cast<double>(k) * step;
    if (0.5 * std::erfc(lo) < kTail) break;
    const double p = bin_mass(lo, static_cast<double>(k + 1) * step);
    if (p > 0.0) sum -= static_cast<long double>(p) * std::log2(static_cast<long double>(p));
  }
  return static_cast<double>(2.0L * sum);
}

double relative_entropy_loss(const EntropyReport& full, const EntropyReport& selected) {
  const double scale = std::max(std::abs(full.delta), std::abs(selected.delta));
  if (std::abs(full.delta - selected.delta) > 1e-12 * scale) {
    throw ParameterError("entropy reports use different quantization steps");
  }
  if (full.H_tilde == 0.0) throw DomainError("relative loss undefined: full entropy bound is 0");
  return std::abs(full.H_tilde - selected.H_tilde) / std::abs(full.H_tilde);
}

}  // namespace entrosense
