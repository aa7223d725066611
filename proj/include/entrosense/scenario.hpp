#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace entrosense {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Sensor deployment around a collector node at the origin.
/// Positions in meters, sigma in phenomenon units, gamma in watts.
struct SensorField {
  std::vector<Point2> positions;
  std::vector<double> sigma;
  std::vector<double> gamma;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return positions.size(); }

  /// Throws ParameterError if lengths disagree or any sigma/gamma is not > 0.
  void validate() const;

  friend bool operator==(const SensorField&, const SensorField&) = default;
};

/// Symmetric, zero-diagonal, nonnegative pairwise distances.
struct DistanceMatrix {
  Eigen::MatrixXd d;

  Eigen::Index size() const noexcept { return d.rows(); }
};

struct FieldParams {
  std::size_t m = 50;
  double placement_std = 2.0;
  double sigma = 50.0;
  double gamma_low = 0.01;
  double gamma_high = 0.2;
  std::uint64_t seed = 1;
};

/// Positions i.i.d. circular Gaussian about the origin; gamma i.i.d. uniform.
SensorField generate_field(const FieldParams& params);

DistanceMatrix distance_matrix(const SensorField& field);

/// One Gaussian draw per unordered pair, std rel_std * d_ij; clipped at zero.
DistanceMatrix perturb_distances(const DistanceMatrix& dist, double rel_std, std::uint64_t seed);

std::string field_to_json(const SensorField& field);
SensorField field_from_json(const std::string& text);

void save_field(const SensorField& field, const std::filesystem::path& path);
SensorField load_field(const std::filesystem::path& path);

}  // namespace entrosense
