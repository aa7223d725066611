#include "entrosense/corrmodel.hpp"

#include <cmath>
#include <vector>

#include "entrosense/errors.hpp"
#include "entrosense/kernels.hpp"

namespace entrosense {
namespace {

void check_model(const CorrelationModel& model) {
  if (!(model.theta > 0.0)) throw ParameterError("theta must be > 0");
}

}  // namespace

double kernel_value(const CorrelationModel& model, double d) {
  check_model(model);
  if (!(d >= 0.0)) throw ParameterError("distance must be >= 0");
  switch (model.kind) {
    case KernelKind::SquaredExponential: {
      const double u = d / model.theta;
      return std::exp(-(u * u));
    }
  }
  throw ParameterError("unknown kernel kind");
}

RawCorrelation build_correlation(const SensorField& field, const CorrelationModel& model,
                                 const DistanceMatrix& dist) {
  check_model(model);
  const std::size_t m = field.size();
  if (field.sigma.size() != m || static_cast<std::size_t>(dist.size()) != m ||
      dist.d.cols() != dist.d.rows()) {
    throw ParameterError("build_correlation: field has " + std::to_string(m) +
                         " sensors but distance matrix is " + std::to_string(dist.d.rows()) +
                         "x" + std::to_string(dist.d.cols()));
  }

  RawCorrelation out{Eigen::MatrixXd(m, m)};
  switch (model.kind) {
    case KernelKind::SquaredExponential: {
      // Distances are symmetric, so the column-major buffer reads as row-major.
      std::vector<double> buf(m * m);
      kernels::active().sqexp_correlation(
          std::span<const double>(dist.d.data(), m * m), field.sigma, 1.0 / model.theta, buf);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) out.c(i, j) = buf[i * m + j];
      }
      break;
    }
  }
  // Enforce exact symmetry and the sigma_i^2 diagonal.
  for (std::size_t i = 0; i < m; ++i) {
    out.c(i, i) = field.sigma[i] * field.sigma[i];
    for (std::size_t j = i + 1; j < m; ++j) out.c(j, i) = out.c(i, j);
  }
  return out;
}

RawCorrelation psd_project(const RawCorrelation& c, double tol) {
  const Eigen::MatrixXd sym = 0.5 * (c.c + c.c.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw DomainError("psd_project: eigensolver failed");
  const Eigen::VectorXd& w = es.eigenvalues();
  const double scale = w.cwiseAbs().maxCoeff();
  if (w.minCoeff() >= -tol * scale) return c;
  const Eigen::VectorXd clipped = w.cwiseMax(0.0);
  RawCorrelation out{es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose()};
  out.c = 0.5 * (out.c + out.c.transpose()).eval();
  return out;
}

}  // namespace entrosense
