#pragma once

// Data-parallel inner loops used by the model builders and the relaxed
// objective. Every kernel has a scalar reference implementation; SIMD
// variants must agree with it (bit-exactly for `pairwise_distances`, to a few
// ulps for the rest) and are selected once at runtime.

#include <cstddef>
#include <span>
#include <string_view>

namespace entrosense::kernels {

/// Row-major M x M Euclidean distances between points (xs[i], ys[i]).
using PairwiseDistancesFn = void (*)(std::span<const double> xs, std::span<const double> ys,
                                     std::span<double> out);

/// Row-major M x M: out[i*M+j] = sigma[i] * sigma[j] * exp(-(dist[i*M+j] * inv_theta)^2).
using SqExpCorrelationFn = void (*)(std::span<const double> dist, std::span<const double> sigma,
                                    double inv_theta, std::span<double> out);

/// Column-major L (M x r): gram (r x r, column-major, full) = L^T diag(w) L.
using WeightedGramFn = void (*)(std::span<const double> l, std::size_t rows, std::size_t cols,
                                std::span<const double> w, std::span<double> gram);

/// Column-major A, B (M x r): out[i] = sum_k A[i,k] * B[i,k].
using RowDotFn = void (*)(std::span<const double> a, std::span<const double> b,
                          std::size_t rows, std::size_t cols, std::span<double> out);

struct KernelTable {
  std::string_view name;
  PairwiseDistancesFn pairwise_distances;
  SqExpCorrelationFn sqexp_correlation;
  WeightedGramFn weighted_gram;
  RowDotFn row_dot;
};

const KernelTable& scalar_table();

/// nullptr when the AVX2 variants were not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// Table chosen at first use: AVX2 when available, unless ENTROSENSE_SIMD=scalar.
const KernelTable& active();

}  // namespace entrosense::kernels
