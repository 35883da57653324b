#include "statedet/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "statedet/error.hpp"

namespace statedet {
namespace {

using nlohmann::json;

// Reads one section, remembering which keys were consumed so leftovers can
// be reported as unknown.
class Section {
 public:
  Section(const json& doc, std::string name) : name_(std::move(name)) {
    if (!doc.contains(name_)) return;
    node_ = &doc.at(name_);
    if (!node_->is_object()) throw ConfigError(name_ + ": expected an object");
  }

  void read(const char* key, std::size_t& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number_unsigned()) {
      throw ConfigError(field(key) + ": expected a non-negative integer");
    }
    out = v->get<std::size_t>();
  }

  void read(const char* key, double& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number()) throw ConfigError(field(key) + ": expected a number");
    out = v->get<double>();
  }

  void read(const char* key, bool& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_boolean()) throw ConfigError(field(key) + ": expected true or false");
    out = v->get<bool>();
  }

  void read(const char* key, DetectMode& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
    try {
      out = parse_mode(v->get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.count(key)) throw ConfigError(field(key.c_str()) + ": unknown key");
    }
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }
  std::string field(const char* key) const { return name_ + "." + key; }

  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

constexpr std::string_view kSections[] = {"window", "compressor", "decompose", "encoder",
                                          "train",  "dpgmm",      "detect",    "synth"};

}  // namespace

void RunConfig::validate() const {
  window.validate();
  const std::size_t bins = one_sided_bins(window.window_size);
  compressor.validate_for(bins);
  const std::size_t compressed = compressor.compressed_length();
  if (trend_kernel == 0 || trend_kernel % 2 == 0 || trend_kernel > compressed) {
    throw ConfigError("decompose.kernel must be odd and within [1, " +
                      std::to_string(compressed) + "] (got " + std::to_string(trend_kernel) +
                      ")");
  }
  EncoderConfig enc = encoder;
  if (enc.input_dims == 0) enc.input_dims = 1;
  enc.validate();
  if (encoder.kernel_size > compressed) {
    throw ConfigError("encoder.kernel_size (" + std::to_string(encoder.kernel_size) +
                      ") exceeds the compressed window length " + std::to_string(compressed));
  }
  train.validate();
  pipeline().validate();
  synth.validate();
}

void RunConfig::set_seed(std::uint64_t seed) {
  encoder.seed = seed;
  train.seed = seed;
  dpgmm.seed = seed;
  synth.seed = seed;
}

EmbeddingStage RunConfig::stage() const { return {compressor, trend_kernel}; }

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.windows = window;
  p.stage = stage();
  p.dpgmm = dpgmm;
  p.mode = mode;
  p.adatd = adatd;
  p.tau_fixed = tau_fixed;
  p.buffer_cap = buffer_cap;
  p.normalize_similarity = normalize_similarity;
  return p;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (auto s : kSections) known = known || key == s;
    if (!known) throw ConfigError(key + ": unknown config section");
  }

  RunConfig c;
  Section w(doc, "window");
  w.read("size", c.window.window_size);
  w.read("step", c.window.step_size);
  w.finish();

  Section q(doc, "compressor");
  q.read("bandwidth", c.compressor.bandwidth);
  q.finish();

  Section k(doc, "decompose");
  k.read("kernel", c.trend_kernel);
  k.finish();

  Section e(doc, "encoder");
  e.read("channels", c.encoder.channels);
  e.read("embed_dim", c.encoder.embed_dim);
  e.read("kernel_size", c.encoder.kernel_size);
  e.read("seed", c.encoder.seed);
  e.read("calibrate_bias", c.calibrate_bias);
  e.finish();

  Section t(doc, "train");
  t.read("groups", c.train.groups);
  t.read("group_size", c.train.group_size);
  t.read("fraction", c.train.fraction);
  t.read("learning_rate", c.train.learning_rate);
  t.read("epochs", c.train.epochs);
  t.read("steps_per_epoch", c.train.steps_per_epoch);
  t.read("group_stride", c.train.group_stride);
  t.read("adam_beta1", c.train.adam_beta1);
  t.read("adam_beta2", c.train.adam_beta2);
  t.read("adam_epsilon", c.train.adam_epsilon);
  t.read("seed", c.train.seed);
  t.finish();

  Section g(doc, "dpgmm");
  g.read("truncation", c.dpgmm.truncation);
  g.read("concentration", c.dpgmm.concentration);
  g.read("prior_mean_scale", c.dpgmm.prior_mean_scale);
  g.read("prior_precision", c.dpgmm.prior_precision);
  g.read("prior_var_scale", c.dpgmm.prior_var_scale);
  g.read("max_iters", c.dpgmm.max_iters);
  g.read("restarts", c.dpgmm.restarts);
  g.read("tol", c.dpgmm.tol);
  g.read("weight_floor", c.dpgmm.weight_floor);
  g.read("var_floor", c.dpgmm.var_floor);
  g.read("seed", c.dpgmm.seed);
  g.finish();

  Section d(doc, "detect");
  d.read("mode", c.mode);
  d.read("tau_init", c.adatd.tau_init);
  d.read("delta_inc", c.adatd.delta_inc);
  d.read("delta_dec", c.adatd.delta_dec);
  d.read("tau_fixed", c.tau_fixed);
  d.read("buffer_cap", c.buffer_cap);
  d.read("normalize_similarity", c.normalize_similarity);
  d.finish();

  Section s(doc, "synth");
  s.read("num_states", c.synth.num_states);
  s.read("dims", c.synth.dims);
  s.read("length", c.synth.length);
  s.read("min_duration", c.synth.min_duration);
  s.read("max_duration", c.synth.max_duration);
  s.read("min_frequency", c.synth.min_frequency);
  s.read("max_frequency", c.synth.max_frequency);
  s.read("min_amplitude", c.synth.min_amplitude);
  s.read("max_amplitude", c.synth.max_amplitude);
  s.read("noise_sigma", c.synth.noise_sigma);
  s.read("relative_noise", c.synth.relative_noise);
  s.read("seed", c.synth.seed);
  s.finish();

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const RunConfig& c) {
  json doc = json::object();
  doc["window"] = {{"size", c.window.window_size}, {"step", c.window.step_size}};
  doc["compressor"] = {{"bandwidth", c.compressor.bandwidth}};
  doc["decompose"] = {{"kernel", c.trend_kernel}};
  doc["encoder"] = {{"channels", c.encoder.channels},
                    {"embed_dim", c.encoder.embed_dim},
                    {"kernel_size", c.encoder.kernel_size},
                    {"seed", c.encoder.seed},
                    {"calibrate_bias", c.calibrate_bias}};
  doc["train"] = {{"groups", c.train.groups},
                  {"group_size", c.train.group_size},
                  {"fraction", c.train.fraction},
                  {"learning_rate", c.train.learning_rate},
                  {"epochs", c.train.epochs},
                  {"steps_per_epoch", c.train.steps_per_epoch},
                  {"group_stride", c.train.group_stride},
                  {"adam_beta1", c.train.adam_beta1},
                  {"adam_beta2", c.train.adam_beta2},
                  {"adam_epsilon", c.train.adam_epsilon},
                  {"seed", c.train.seed}};
  doc["dpgmm"] = {{"truncation", c.dpgmm.truncation},
                  {"concentration", c.dpgmm.concentration},
                  {"prior_mean_scale", c.dpgmm.prior_mean_scale},
                  {"prior_precision", c.dpgmm.prior_precision},
                  {"prior_var_scale", c.dpgmm.prior_var_scale},
                  {"max_iters", c.dpgmm.max_iters},
                  {"restarts", c.dpgmm.restarts},
                  {"tol", c.dpgmm.tol},
                  {"weight_floor", c.dpgmm.weight_floor},
                  {"var_floor", c.dpgmm.var_floor},
                  {"seed", c.dpgmm.seed}};
  doc["detect"] = {{"mode", std::string(mode_name(c.mode))},
                   {"tau_init", c.adatd.tau_init},
                   {"delta_inc", c.adatd.delta_inc},
                   {"delta_dec", c.adatd.delta_dec},
                   {"tau_fixed", c.tau_fixed},
                   {"buffer_cap", c.buffer_cap},
                   {"normalize_similarity", c.normalize_similarity}};
  doc["synth"] = {{"num_states", c.synth.num_states},
                  {"dims", c.synth.dims},
                  {"length", c.synth.length},
                  {"min_duration", c.synth.min_duration},
                  {"max_duration", c.synth.max_duration},
                  {"min_frequency", c.synth.min_frequency},
                  {"max_frequency", c.synth.max_frequency},
                  {"min_amplitude", c.synth.min_amplitude},
                  {"max_amplitude", c.synth.max_amplitude},
                  {"noise_sigma", c.synth.noise_sigma},
                  {"relative_noise", c.synth.relative_noise},
                  {"seed", c.synth.seed}};
  return doc.dump(2) + "\n";
}

}  // namespace statedet
