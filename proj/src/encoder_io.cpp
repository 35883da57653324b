#include <fstream>
#include <string>

#include "json.hpp"
#include "statedet/encoder.hpp"
#include "statedet/error.hpp"

namespace statedet {
namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

json dense_to_json(const DenseLayer& layer, json& bias_out) {
  json rows = json::array();
  for (std::size_t o = 0; o < layer.weight.rows(); ++o) {
    auto r = layer.weight.row(o);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  bias_out = layer.bias;
  return rows;
}

Vector read_vector(const json& j, const char* field, std::size_t expected) {
  if (!j.contains(field) || !j.at(field).is_array()) {
    throw ParseError(std::string("model file: missing array '") + field + "'");
  }
  Vector v = j.at(field).get<Vector>();
  if (v.size() != expected) {
    throw ParseError(std::string("model file: '") + field + "' has " + std::to_string(v.size()) +
                     " entries, expected " + std::to_string(expected));
  }
  return v;
}

Matrix read_matrix(const json& j, const char* field, std::size_t rows, std::size_t cols) {
  if (!j.contains(field) || !j.at(field).is_array() || j.at(field).size() != rows) {
    throw ParseError(std::string("model file: '") + field + "' must be a " +
                     std::to_string(rows) + "-row array");
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    Vector row = j.at(field).at(r).get<Vector>();
    if (row.size() != cols) {
      throw ParseError(std::string("model file: row ") + std::to_string(r) + " of '" + field +
                       "' has " + std::to_string(row.size()) + " entries, expected " +
                       std::to_string(cols));
    }
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

void save_encoder(const EncoderParams& params, const std::filesystem::path& path) {
  const auto& c = params.config;
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["config"] = {{"N", c.input_dims},
                   {"C", c.channels},
                   {"D", c.embed_dim},
                   {"kernel", c.kernel_size},
                   {"seed", c.seed}};
  doc["fixed"] = {{"conv_t_w", params.conv_trend.weight},
                  {"conv_t_b", params.conv_trend.bias},
                  {"conv_s_w", params.conv_seasonal.weight},
                  {"conv_s_b", params.conv_seasonal.bias}};
  json& tr = doc["trainable"];
  tr["theta_t_w"] = dense_to_json(params.trend, tr["theta_t_b"]);
  tr["theta_s_w"] = dense_to_json(params.seasonal, tr["theta_s_b"]);
  tr["theta_f_w"] = dense_to_json(params.fusion, tr["theta_f_b"]);

  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file '" + path.string() + "'");
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("write failure on model file '" + path.string() + "'");
}

EncoderParams load_encoder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("model file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    if (!doc.contains("schema_version") || doc.at("schema_version") != kSchemaVersion) {
      throw ParseError("model file '" + path.string() + "': unsupported schema_version");
    }
    const json& c = doc.at("config");
    EncoderParams p;
    p.config.input_dims = c.at("N").get<std::size_t>();
    p.config.channels = c.at("C").get<std::size_t>();
    p.config.embed_dim = c.at("D").get<std::size_t>();
    p.config.kernel_size = c.at("kernel").get<std::size_t>();
    p.config.seed = c.at("seed").get<std::uint64_t>();
    try {
      p.config.validate();
    } catch (const ConfigError& e) {
      throw ParseError(std::string("model file config: ") + e.what());
    }
    const std::size_t n = p.config.input_dims, ch = p.config.channels, d = p.config.embed_dim;
    const std::size_t taps = ch * n * p.config.kernel_size;

    const json& f = doc.at("fixed");
    p.conv_trend = {read_vector(f, "conv_t_w", taps), read_vector(f, "conv_t_b", ch)};
    p.conv_seasonal = {read_vector(f, "conv_s_w", taps), read_vector(f, "conv_s_b", ch)};

    const json& t = doc.at("trainable");
    p.trend = {read_matrix(t, "theta_t_w", d, ch), read_vector(t, "theta_t_b", d)};
    p.seasonal = {read_matrix(t, "theta_s_w", d, ch), read_vector(t, "theta_s_b", d)};
    p.fusion = {read_matrix(t, "theta_f_w", d, 2 * d), read_vector(t, "theta_f_b", d)};
    return p;
  } catch (const json::exception& e) {
    throw ParseError("model file '" + path.string() + "' does not match the schema: " + e.what());
  }
}

}  // namespace statedet
