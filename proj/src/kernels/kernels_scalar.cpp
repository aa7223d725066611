#include <cmath>

#include "entrosense/kernels.hpp"
#include "kernels_impl.hpp"

namespace entrosense::kernels::scalar {

void pairwise_distances(std::span<const double> xs, std::span<const double> ys,
                        std::span<double> out) {
  const std::size_t m = xs.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double dx = xs[j] - xs[i];
      const double dy = ys[j] - ys[i];
      out[i * m + j] = std::sqrt(dx * dx + dy * dy);
    }
  }
}

void sqexp_correlation(std::span<const double> dist, std::span<const double> sigma,
                       double inv_theta, std::span<double> out) {
  const std::size_t m = sigma.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double u = dist[i * m + j] * inv_theta;
      out[i * m + j] = sigma[i] * sigma[j] * std::exp(-(u * u));
    }
  }
}

void weighted_gram(std::span<const double> l, std::size_t rows, std::size_t cols,
                   std::span<const double> w, std::span<double> gram) {
  for (std::size_t a = 0; a < cols; ++a) {
    const double* la = l.data() + a * rows;
    for (std::size_t b = 0; b <= a; ++b) {
      const double* lb = l.data() + b * rows;
      double acc = 0.0;
      for (std::size_t i = 0; i < rows; ++i) acc += la[i] * w[i] * lb[i];
      gram[a * cols + b] = acc;
      gram[b * cols + a] = acc;
    }
  }
}

void row_dot(std::span<const double> a, std::span<const double> b, std::size_t rows,
             std::size_t cols, std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i) out[i] = 0.0;
  for (std::size_t k = 0; k < cols; ++k) {
    const double* ak = a.data() + k * rows;
    const double* bk = b.data() + k * rows;
    for (std::size_t i = 0; i < rows; ++i) out[i] += ak[i] * bk[i];
  }
}

}  // namespace entrosense::kernels::scalar
