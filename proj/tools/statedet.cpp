// statedet: gen | train | detect | stream | eval
//
// Exit codes: 0 ok, 1 I/O or parse failure, 2 config/validation, 3 numeric.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "statedet/config.hpp"
#include "statedet/error.hpp"
#include "statedet/fncc.hpp"
#include "statedet/metrics.hpp"
#include "statedet/pipeline.hpp"
#include "statedet/series.hpp"
#include "statedet/synthgen.hpp"

namespace {

using nlohmann::json;
using namespace statedet;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::optional<double> tau_fixed;
  std::string out;
  bool print_config = false;
  std::string data;
  std::string model;
  std::string truth;
  std::string pred;
  std::string loss_out;
  std::string stats;
  std::string trace;
};

RunConfig effective_config(const Options& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.seed) cfg.set_seed(*o.seed);
  if (!o.mode.empty()) cfg.mode = parse_mode(o.mode);
  if (o.tau_fixed) cfg.tau_fixed = *o.tau_fixed;
  cfg.validate();
  return cfg;
}

const std::string& need(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string(flag) + " is required");
  return value;
}

void write_json(const json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failure on '" + path + "'");
}

json run_stats(const DetectionResult& res, DetectMode mode, const MultivariateTimeSeries& series) {
  json j;
  j["mode"] = std::string(mode_name(mode));
  j["T"] = series.length();
  j["windows_seen"] = res.stats.windows_seen;
  j["clustering_ops"] = res.stats.clustering_ops;
  j["wall_time_s"] = res.stats.wall_time_s;
  j["distinct_states"] = distinct_count(res.states.states);
  if (series.has_labels()) {
    j["ari"] = ari(*series.labels(), res.states.states);
    j["nmi"] = nmi(*series.labels(), res.states.states);
  }
  return j;
}

EncoderParams load_model_for(const std::string& path, const MultivariateTimeSeries& series) {
  EncoderParams enc = load_encoder(path);
  if (enc.config.input_dims != series.dims()) {
    throw DimensionError("model '" + path + "' expects " +
                         std::to_string(enc.config.input_dims) + " variates, data has " +
                         std::to_string(series.dims()));
  }
  return enc;
}

int cmd_gen(const Options& o) {
  const RunConfig cfg = effective_config(o);
  if (o.print_config) {
    std::cout << dump_config(cfg);
    return 0;
  }
  const auto& out = need(o.out, "--out");
  if (cfg.synth.min_duration < cfg.window.window_size) {
    std::cerr << "warning: synth.min_duration " << cfg.synth.min_duration
              << " is shorter than window.size " << cfg.window.window_size << '\n';
  }
  const SyntheticSeries syn = generate_synthetic(cfg.synth);
  save_csv(syn.series, out);
  json j{{"T", syn.series.length()},
         {"N", syn.series.dims()},
         {"S", cfg.synth.num_states},
         {"seed", cfg.synth.seed}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  RunConfig cfg = effective_config(o);
  if (o.print_config) {
    std::cout << dump_config(cfg);
    return 0;
  }
  const auto series = load_csv(need(o.data, "--data"));
  const auto& out = need(o.out, "--out");
  cfg.encoder.input_dims = series.dims();
  const TrainResult res =
      fit_encoder(series, cfg.window, cfg.stage(), cfg.encoder, cfg.train, cfg.calibrate_bias);
  save_encoder(res.params, out);

  const std::string loss_path = o.loss_out.empty() ? out + ".loss.csv" : o.loss_out;
  std::ofstream loss(loss_path);
  if (!loss) throw IoError("cannot write '" + loss_path + "'");
  loss.precision(17);
  loss << "step,total,pos,neg\n";
  for (std::size_t i = 0; i < res.history.size(); ++i) {
    const auto& h = res.history[i];
    loss << i << ',' << h.total << ',' << h.pos << ',' << h.neg << '\n';
  }
  if (!loss) throw IoError("write failure on '" + loss_path + "'");

  const ParamCounts pc = param_counts(res.params);
  json j{{"trainable", pc.trainable},
         {"total", pc.total},
         {"steps", res.history.size()},
         {"final_loss", res.history.empty() ? 0.0 : res.history.back().total},
         {"loss_history", loss_path}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_detect(const Options& o) {
  RunConfig cfg = effective_config(o);
  cfg.mode = DetectMode::kOffline;
  if (o.print_config) {
    std::cout << dump_config(cfg);
    return 0;
  }
  const auto series = load_csv(need(o.data, "--data"));
  const auto enc = load_model_for(need(o.model, "--model"), series);
  const auto& out = need(o.out, "--out");
  DpgmmModel model;
  const DetectionResult res = detect_offline(series, enc, cfg.pipeline(), &model);
  save_states(res.states, out);
  json j = run_stats(res, cfg.mode, series);
  j["effective_components"] = effective_components(model);
  if (!o.stats.empty()) write_json(j, o.stats);
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_stream(const Options& o) {
  RunConfig cfg = effective_config(o);
  if (cfg.mode == DetectMode::kOffline) {
    if (!o.mode.empty()) throw ConfigError("stream: --mode must be adatd, acd or std");
    cfg.mode = DetectMode::kAdatd;
  }
  if (o.print_config) {
    std::cout << dump_config(cfg);
    return 0;
  }
  const auto series = load_csv(need(o.data, "--data"));
  const auto enc = load_model_for(need(o.model, "--model"), series);
  const auto& out = need(o.out, "--out");
  const StreamResult res = stream_run(series, enc, cfg.pipeline());
  save_states(res.detection.states, out);
  if (!o.trace.empty()) {
    std::ofstream tr(o.trace);
    if (!tr) throw IoError("cannot write '" + o.trace + "'");
    tr.precision(17);
    tr << "index,start,similarity,clustered,cluster_outcome,state,tau\n";
    for (const auto& r : res.trace) {
      tr << r.index << ',' << res.detection.window_starts[r.index] << ',';
      if (std::isfinite(r.similarity)) tr << r.similarity;
      tr << ',' << (r.clustered ? 1 : 0) << ',' << r.cluster_outcome << ',' << r.state << ','
         << r.tau << '\n';
    }
    if (!tr) throw IoError("write failure on '" + o.trace + "'");
  }
  json j = run_stats(res.detection, cfg.mode, series);
  j["final_tau"] = res.trace.empty() ? 0.0 : res.trace.back().tau;
  if (!o.stats.empty()) write_json(j, o.stats);
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_eval(const Options& o) {
  const auto truth = load_labels(need(o.truth, "--truth"));
  const auto pred = load_labels(need(o.pred, "--pred"));
  if (truth.size() != pred.size()) {
    throw DimensionError("truth has " + std::to_string(truth.size()) + " labels, prediction has " +
                         std::to_string(pred.size()));
  }
  json j{{"ari", ari(truth, pred)},
         {"nmi", nmi(truth, pred)},
         {"n", truth.size()},
         {"distinct_truth", distinct_count(truth)},
         {"distinct_pred", distinct_count(pred)},
         {"nmi_normalizer", "arithmetic"}};
  if (!o.out.empty()) write_json(j, o.out);
  std::cout << j.dump() << '\n';
  return 0;
}

void add_config_flags(CLI::App* cmd, Options& o, bool with_mode) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "override every seed in the config");
  if (with_mode) {
    cmd->add_option("--mode", o.mode, "offline, adatd, acd or std");
    cmd->add_option("--tau-fixed", o.tau_fixed, "threshold for mode std");
  }
  cmd->add_flag("--print-config", o.print_config, "print the effective config and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised state detection for multivariate time series"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen", "write a labelled synthetic series");
  add_config_flags(gen, o, false);
  gen->add_option("--out", o.out, "output CSV");

  auto* train = app.add_subcommand("train", "fit the encoder on a series");
  add_config_flags(train, o, false);
  train->add_option("--data", o.data, "input CSV");
  train->add_option("--out", o.out, "model file");
  train->add_option("--loss-out", o.loss_out, "loss history CSV (default <out>.loss.csv)");

  auto* detect = app.add_subcommand("detect", "offline detection");
  add_config_flags(detect, o, false);
  detect->add_option("--data", o.data, "input CSV");
  detect->add_option("--model", o.model, "model file from train");
  detect->add_option("--out", o.out, "state CSV (t,state)");
  detect->add_option("--stats", o.stats, "also write the stats JSON here");

  auto* stream = app.add_subcommand("stream", "streaming detection");
  add_config_flags(stream, o, true);
  stream->add_option("--data", o.data, "input CSV");
  stream->add_option("--model", o.model, "model file from train");
  stream->add_option("--out", o.out, "state CSV (t,state)");
  stream->add_option("--stats", o.stats, "also write the stats JSON here");
  stream->add_option("--trace", o.trace, "per-window trace CSV");

  auto* eval = app.add_subcommand("eval", "compare two label sequences");
  eval->add_option("--truth", o.truth, "CSV with a label or state column");
  eval->add_option("--pred", o.pred, "CSV with a label or state column");
  eval->add_option("--out", o.out, "also write the metrics JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*train) return cmd_train(o);
    if (*detect) return cmd_detect(o);
    if (*stream) return cmd_stream(o);
    if (*eval) return cmd_eval(o);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
