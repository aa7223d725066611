#pragma once

#include <cstddef>
#include <span>

namespace entrosense::kernels {

namespace scalar {
void pairwise_distances(std::span<const double> xs, std::span<const double> ys,
                        std::span<double> out);
void sqexp_correlation(std::span<const double> dist, std::span<const double> sigma,
                       double inv_theta, std::span<double> out);
void weighted_gram(std::span<const double> l, std::size_t rows, std::size_t cols,
                   std::span<const double> w, std::span<double> gram);
void row_dot(std::span<const double> a, std::span<const double> b, std::size_t rows,
             std::size_t cols, std::span<double> out);
}  // namespace scalar

#if defined(ENTROSENSE_HAVE_AVX2)
namespace avx2 {
void pairwise_distances(std::span<const double> xs, std::span<const double> ys,
                        std::span<double> out);
void sqexp_correlation(std::span<const double> dist, std::span<const double> sigma,
                       double inv_theta, std::span<double> out);
void weighted_gram(std::span<const double> l, std::size_t rows, std::size_t cols,
                   std::span<const double> w, std::span<double> gram);
void row_dot(std::span<const double> a, std::span<const double> b, std::size_t rows,
             std::size_t cols, std::span<double> out);
}  // namespace avx2
#endif

}  // namespace entrosense::kernels
