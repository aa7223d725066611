// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached through the
// dispatch table after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace entrosense::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// exp(x) for x <= 0, accurate to about 1 ulp. Cody-Waite reduction
// x = n ln2 + r, |r| <= ln2/2, then a degree-13 Taylor polynomial.
inline __m256d exp_nonpositive(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d underflow = _mm256_set1_pd(-745.2);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  static constexpr double kInvFact[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,      1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,         0.5,
      1.0,                1.0};
  __m256d poly = _mm256_set1_pd(kInvFact[0]);
  for (int k = 1; k < 14; ++k) poly = _mm256_fmadd_pd(poly, r, _mm256_set1_pd(kInvFact[k]));

  // 2^n split in two factors so that n down to -1074 stays representable.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m128i half = _mm_srai_epi32(n32, 1);
  const __m128i rest = _mm_sub_epi32(n32, half);
  const __m256i bias = _mm256_set1_epi64x(1023);
  const __m256d s1 = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(half), bias), 52));
  const __m256d s2 = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(rest), bias), 52));
  const __m256d y = _mm256_mul_pd(_mm256_mul_pd(poly, s1), s2);

  const __m256d dead = _mm256_cmp_pd(x, underflow, _CMP_LT_OQ);
  return _mm256_andnot_pd(dead, y);
}

}  // namespace

void pairwise_distances(std::span<const double> xs, std::span<const double> ys,
                        std::span<double> out) {
  const std::size_t m = xs.size();
  for (std::size_t i = 0; i < m; ++i) {
    const __m256d xi = _mm256_set1_pd(xs[i]);
    const __m256d yi = _mm256_set1_pd(ys[i]);
    double* row = out.data() + i * m;
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
      const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs.data() + j), xi);
      const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys.data() + j), yi);
      const __m256d s = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
      _mm256_storeu_pd(row + j, _mm256_sqrt_pd(s));
    }
    for (; j < m; ++j) {
      const double dx = xs[j] - xs[i];
      const double dy = ys[j] - ys[i];
      row[j] = std::sqrt(dx * dx + dy * dy);
    }
  }
}

void sqexp_correlation(std::span<const double> dist, std::span<const double> sigma,
                       double inv_theta, std::span<double> out) {
  const std::size_t m = sigma.size();
  const __m256d it = _mm256_set1_pd(inv_theta);
  const __m256d neg = _mm256_set1_pd(-0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const __m256d si = _mm256_set1_pd(sigma[i]);
    const double* drow = dist.data() + i * m;
    double* row = out.data() + i * m;
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
      const __m256d u = _mm256_mul_pd(_mm256_loadu_pd(drow + j), it);
      const __m256d e = exp_nonpositive(_mm256_xor_pd(_mm256_mul_pd(u, u), neg));
      const __m256d ss = _mm256_mul_pd(si, _mm256_loadu_pd(sigma.data() + j));
      _mm256_storeu_pd(row + j, _mm256_mul_pd(ss, e));
    }
    for (; j < m; ++j) {
      const double u = drow[j] * inv_theta;
      row[j] = sigma[i] * sigma[j] * std::exp(-(u * u));
    }
  }
}

void weighted_gram(std::span<const double> l, std::size_t rows, std::size_t cols,
                   std::span<const double> w, std::span<double> gram) {
  for (std::size_t a = 0; a < cols; ++a) {
    const double* la = l.data() + a * rows;
    for (std::size_t b = 0; b <= a; ++b) {
      const double* lb = l.data() + b * rows;
      __m256d acc = _mm256_setzero_pd();
      std::size_t i = 0;
      for (; i + 4 <= rows; i += 4) {
        const __m256d t = _mm256_mul_pd(_mm256_loadu_pd(la + i), _mm256_loadu_pd(w.data() + i));
        acc = _mm256_fmadd_pd(t, _mm256_loadu_pd(lb + i), acc);
      }
      double s = hsum(acc);
      for (; i < rows; ++i) s += la[i] * w[i] * lb[i];
      gram[a * cols + b] = s;
      gram[b * cols + a] = s;
    }
  }
}

void row_dot(std::span<const double> a, std::span<const double> b, std::size_t rows,
             std::size_t cols, std::span<double> out) {
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < cols; ++k) {
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + k * rows + i),
                            _mm256_loadu_pd(b.data() + k * rows + i), acc);
    }
    _mm256_storeu_pd(out.data() + i, acc);
  }
  for (; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < cols; ++k) s += a[k * rows + i] * b[k * rows + i];
    out[i] = s;
  }
}

}  // namespace entrosense::kernels::avx2
