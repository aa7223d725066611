#pragma once

#include <Eigen/Dense>

#include "entrosense/scenario.hpp"

namespace entrosense {

enum class KernelKind { SquaredExponential };

/// Distance-to-correlation model. Only the squared exponential is shipped;
/// new kinds extend `KernelKind` and the switch in `kernel_value`.
struct CorrelationModel {
  KernelKind kind = KernelKind::SquaredExponential;
  double theta = 3.08;  ///< correlation range, meters
};

/// Symmetric data-correlation matrix, C_ij = sigma_i sigma_j K(d_ij).
struct RawCorrelation {
  Eigen::MatrixXd c;

  Eigen::Index size() const noexcept { return c.rows(); }
};

/// K(d) in (0, 1]. Throws ParameterError for d < 0 or theta <= 0.
double kernel_value(const CorrelationModel& model, double d);

RawCorrelation build_correlation(const SensorField& field, const CorrelationModel& model,
                                 const DistanceMatrix& dist);

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped to 0).
/// Returns the input untouched when its smallest eigenvalue is already
/// >= -tol * max(|lambda|).
RawCorrelation psd_project(const RawCorrelation& c, double tol = 1e-12);

}  // namespace entrosense
