#pragma once

// Reference computations for tests. Deliberately share no code with the
// library: cyclic Jacobi instead of Eigen's tridiagonal QR, Simpson
// integration of the density instead of erf.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "entrosense/scenario.hpp"

namespace oracle {

// Eigenvalues of a symmetric matrix, descending.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

struct LowerBound {
  int rank = 0;
  double h = 0.0;        // differential entropy, bits
  double H_tilde = 0.0;  // h - rank * log2(delta)
};

// Gaussian entropy bound from the spectrum, counting eigenvalues above an
// absolute cutoff.
inline LowerBound entropy_from_spectrum(const std::vector<double>& ev, double cutoff, double delta) {
  LowerBound out;
  double logdet = 0.0;
  for (double v : ev) {
    if (v > cutoff) {
      ++out.rank;
      logdet += std::log2(v);
    }
  }
  out.h = 0.5 * (out.rank * std::log2(2.0 * std::numbers::pi * std::numbers::e) + logdet);
  out.H_tilde = out.h - out.rank * std::log2(delta);
  return out;
}

// Entropy (bits) of N(0, sigma^2) quantized to bins [k delta, (k+1) delta),
// each bin mass integrated with composite Simpson over 32 panels.
inline double binned_gaussian_entropy(double sigma, double delta) {
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  auto pdf = [&](double x) { return norm * std::exp(-0.5 * (x / sigma) * (x / sigma)); };
  const long kmax = static_cast<long>(std::ceil(12.0 * sigma / delta)) + 1;
  constexpr int panels = 32;
  double h = 0.0;
  for (long k = -kmax; k <= kmax; ++k) {
    const double a = static_cast<double>(k) * delta;
    const double step = delta / panels;
    double s = pdf(a) + pdf(a + delta);
    for (int j = 1; j < panels; ++j) s += (j % 2 ? 4.0 : 2.0) * pdf(a + j * step);
    const double mass = s * step / 3.0;
    if (mass > 0.0) h -= mass * std::log2(mass);
  }
  return h;
}

inline double central_difference(const auto& f, Eigen::VectorXd p, Eigen::Index i, double step) {
  const double x = p[i];
  p[i] = x + step;
  const double up = f(p);
  p[i] = x - step;
  const double down = f(p);
  return (up - down) / (2.0 * step);
}

inline entrosense::SensorField random_field(std::size_t m, std::uint64_t seed, double spread = 2.0) {
  entrosense::FieldParams fp;
  fp.m = m;
  fp.seed = seed;
  fp.placement_std = spread;
  return entrosense::generate_field(fp);
}

}  // namespace oracle
