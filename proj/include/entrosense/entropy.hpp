#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "entrosense/corrmodel.hpp"
#include "entrosense/speclinalg.hpp"

namespace entrosense {

/// On/off state per sensor (1 = active).
using Mask = std::vector<std::uint8_t>;

inline constexpr double kDefaultNu = 1e-3;

/// Uniform scalar quantizer step and the box floor nu of the relaxed weights.
struct QuantizationSpec {
  double delta = 1.0;
  double nu = kDefaultNu;
};

/// Differential entropy and its quantized lower bound, both in bits.
/// Invariant: H_tilde == h - rank_used * log2(delta), bit-exactly.
struct EntropyReport {
  double h = 0.0;
  double H_tilde = 0.0;
  Eigen::Index rank_used = 0;
  double delta = 1.0;
};

/// 0.5 * (r log2(2 pi e) + log2 Det(C)); the ordinary Gaussian entropy at full rank.
double differential_entropy(const SpectralData& spec);

/// h - rank * log2(delta).
double quantized_entropy_lb(double h, Eigen::Index rank, const QuantizationSpec& q);

EntropyReport entropy_report(const SpectralData& spec, const QuantizationSpec& q);

/// Entropy report of the active principal submatrix of C. The rank cutoff is
/// rel_tol * max(lambda_max(sub), reference_lambda_max); pass the full
/// matrix's lambda_max to rank every subset on the full matrix's scale.
EntropyReport selected_entropy_lb(const RawCorrelation& c, const Mask& active,
                                  const QuantizationSpec& q, double rel_tol = kDefaultRankTol,
                                  double reference_lambda_max = 0.0);

/// delta = nu * (smallest retained eigenvalue).
QuantizationSpec choose_delta(const SpectralData& spec, double nu = kDefaultNu);

/// Exact entropy in bits of N(0, sigma^2) after uniform quantization with
/// step delta (bins [k delta, (k+1) delta)). Deterministic bin summation.
double univariate_quantized_entropy(double sigma, double delta);

/// |H_full - H_sel| / |H_full|.
double relative_entropy_loss(const EntropyReport& full, const EntropyReport& selected);

}  // namespace entrosense
