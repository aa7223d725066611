#include "entrosense/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "entrosense/errors.hpp"
#include "entrosense/kernels.hpp"

namespace entrosense {
namespace {

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

}  // namespace

void SensorField::validate() const {
  const std::size_t m = positions.size();
  if (m == 0) throw ParameterError("sensor field is empty");
  if (sigma.size() != m || gamma.size() != m) {
    throw ParameterError("sensor field arrays disagree: " + std::to_string(m) + " positions, " +
                         std::to_string(sigma.size()) + " sigma, " +
                         std::to_string(gamma.size()) + " gamma");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(sigma[i] > 0.0)) throw ParameterError("sigma[" + std::to_string(i) + "] must be > 0");
    if (!(gamma[i] > 0.0)) throw ParameterError("gamma[" + std::to_string(i) + "] must be > 0");
    if (!std::isfinite(positions[i].x) || !std::isfinite(positions[i].y)) {
      throw ParameterError("position[" + std::to_string(i) + "] is not finite");
    }
  }
}

SensorField generate_field(const FieldParams& params) {
  if (params.m < 1) throw ParameterError("field needs at least one sensor");
  if (!(params.placement_std > 0.0)) throw ParameterError("placement_std must be > 0");
  if (!(params.sigma > 0.0)) throw ParameterError("sigma must be > 0");
  if (!(params.gamma_low > 0.0) || params.gamma_low > params.gamma_high) {
    throw ParameterError("gamma range must satisfy 0 < low <= high");
  }

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> place(0.0, params.placement_std);
  std::uniform_real_distribution<double> power(params.gamma_low, params.gamma_high);

  SensorField field;
  field.seed = params.seed;
  field.positions.reserve(params.m);
  for (std::size_t i = 0; i < params.m; ++i) {
    const double x = place(rng);
    const double y = place(rng);
    field.positions.push_back({x, y});
  }
  field.sigma.assign(params.m, params.sigma);
  field.gamma.reserve(params.m);
  for (std::size_t i = 0; i < params.m; ++i) {
    // uniform_real_distribution is half-open; low == high still yields low.
    field.gamma.push_back(params.gamma_low == params.gamma_high ? params.gamma_low : power(rng));
  }
  return field;
}

DistanceMatrix distance_matrix(const SensorField& field) {
  const std::size_t m = field.size();
  std::vector<double> xs(m), ys(m), out(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    xs[i] = field.positions[i].x;
    ys[i] = field.positions[i].y;
  }
  kernels::active().pairwise_distances(xs, ys, out);
  DistanceMatrix dist{Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                     Eigen::RowMajor>>(out.data(), m, m)};
  return dist;
}

DistanceMatrix perturb_distances(const DistanceMatrix& dist, double rel_std, std::uint64_t seed) {
  if (!(rel_std >= 0.0)) throw ParameterError("rel_std must be >= 0");
  DistanceMatrix out = dist;
  if (rel_std == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const Eigen::Index m = dist.size();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double d = dist.d(i, j);
      const double v = std::max(0.0, d + rel_std * d * noise(rng));
      out.d(i, j) = v;
      out.d(j, i) = v;
    }
    out.d(i, i) = 0.0;
  }
  return out;
}

std::string field_to_json(const SensorField& field) {
  nlohmann::ordered_json j;
  j["m"] = field.size();
  j["seed"] = field.seed;
  auto& pos = j["positions"] = nlohmann::ordered_json::array();
  for (const auto& p : field.positions) pos.push_back({p.x, p.y});
  j["sigma"] = field.sigma;
  j["gamma"] = field.gamma;
  return j.dump(2) + "\n";
}

SensorField field_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what(), line_of_offset(text, e.byte));
  }
  SensorField field;
  try {
    for (const char* key : {"m", "seed", "positions", "sigma", "gamma"}) {
      if (!j.contains(key)) throw ParseError(std::string("scenario: missing key '") + key + "'");
    }
    const auto m = j.at("m").get<std::size_t>();
    field.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& p : j.at("positions")) {
      if (!p.is_array() || p.size() != 2) throw ParseError("scenario: positions entries must be [x, y]");
      field.positions.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    field.sigma = j.at("sigma").get<std::vector<double>>();
    field.gamma = j.at("gamma").get<std::vector<double>>();
    if (field.positions.size() != m || field.sigma.size() != m || field.gamma.size() != m) {
      throw ParseError("scenario: array lengths do not match m = " + std::to_string(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  field.validate();
  return field;
}

void save_field(const SensorField& field, const std::filesystem::path& path) {
  field.validate();
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  out << field_to_json(field);
}

SensorField load_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return field_from_json(buf.str());
}

}  // namespace entrosense
