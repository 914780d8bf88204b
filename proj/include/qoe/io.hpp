// SPDX-License-Identifier: Apache-2.0
/**
 * @file   io.hpp
 * @brief  On-disk formats: trace CSV, corpus manifest, weights file, split
 *         plan, metrics report and the configuration files.
 *
 * Trace CSV: header `t,stsq,playing,qoe` (the qoe column may be omitted
 * for inference-only traces), one row per second, t = 0, 1, ...
 *
 * Corpus manifest (corpus.json):
 *   { "format_version": 1, "name": ..., "vqa_metric": ...,
 *     "vqa_range": [lo, hi] | null, "vqa_orientation": "higher_better",
 *     "qoe_scale": [min, max],
 *     "videos": [ { "video_id", "content_id", "pattern_id", "trace": path,
 *                   optional per-video overrides of the vqa_* / qoe_scale
 *                   fields, optional "overall_qoe" } ] }
 * Trace paths are relative to the manifest's directory.
 *
 * Weights are written with shortest round-trip decimal formatting, so a
 * load after save reproduces every double bit for bit.
 */
#pragma once

#include "datasets.hpp"
#include "features.hpp"
#include "lstm.hpp"
#include "metrics.hpp"
#include "synth.hpp"
#include "training.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qoe::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- helpers

inline std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path &path, const std::string &text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

inline json read_json(const fs::path &path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error &e) {
    throw FormatError("'" + path.string() + "': invalid JSON: " + e.what());
  }
}

inline void write_json(const fs::path &path, const json &j) { write_file(path, j.dump(2) + "\n"); }

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  json j = v;
  return j.dump();
}

inline std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r' && c != ' ' && c != '\t') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_number(const std::string &s, const std::string &where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw FormatError(where + ": '" + s + "' is not a number");
  }
}

template <class T> T get_or(const json &j, const char *key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

inline void reject_unknown_keys(const json &j, std::initializer_list<const char *> allowed,
                                const std::string &what) {
  for (const auto &[key, value] : j.items()) {
    bool ok = false;
    for (const char *a : allowed) ok = ok || key == a;
    if (!ok) throw FormatError(what + ": unknown key '" + key + "'");
  }
}

// ---------------------------------------------------------------- enums

inline std::string to_string(Orientation o) {
  return o == Orientation::higher_better ? "higher_better" : "lower_better";
}
inline Orientation parse_orientation(const std::string &s) {
  if (s == "higher_better") return Orientation::higher_better;
  if (s == "lower_better") return Orientation::lower_better;
  throw FormatError("unknown vqa_orientation '" + s + "'");
}
inline std::string to_string(TrBeforeStall m) {
  return m == TrBeforeStall::session_start ? "session_start" : "constant_max";
}
inline TrBeforeStall parse_tr_mode(const std::string &s) {
  if (s == "session_start") return TrBeforeStall::session_start;
  if (s == "constant_max") return TrBeforeStall::constant_max;
  throw FormatError("unknown tr_before_stall '" + s + "'");
}
inline std::string to_string(FeatureMode m) { return m == FeatureMode::full ? "full" : "stsq_only"; }
inline FeatureMode parse_feature_mode(const std::string &s) {
  if (s == "full") return FeatureMode::full;
  if (s == "stsq_only") return FeatureMode::stsq_only;
  throw FormatError("unknown feature mode '" + s + "'");
}
inline std::string to_string(WindowState w) { return w == WindowState::carried ? "carried" : "zero"; }
inline WindowState parse_window_state(const std::string &s) {
  if (s == "carried") return WindowState::carried;
  if (s == "zero") return WindowState::zero;
  throw FormatError("unknown window_state '" + s + "'");
}

// ---------------------------------------------------------------- traces

inline std::string trace_to_csv(const SessionTrace &tr) {
  std::string out = tr.qoe ? "t,stsq,playing,qoe\n" : "t,stsq,playing\n";
  for (std::size_t t = 0; t < tr.duration(); ++t) {
    out += std::to_string(t) + "," + format_double(tr.stsq[t]) + "," + (tr.playing[t] ? "1" : "0");
    if (tr.qoe) out += "," + format_double((*tr.qoe)[t]);
    out += "\n";
  }
  return out;
}

/// Parse the per-second columns into `tr` (metadata left untouched).
inline void parse_trace_csv(const std::string &text, SessionTrace &tr, const std::string &name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(name + ": empty trace file");
  const auto header = split_csv_line(line);
  const bool with_qoe = header.size() == 4 && header[3] == "qoe";
  if (!(header.size() >= 3 && header[0] == "t" && header[1] == "stsq" && header[2] == "playing") ||
      header.size() > 4 || (header.size() == 4 && !with_qoe))
    throw FormatError(name + ": header must be 't,stsq,playing[,qoe]'");
  tr.stsq.clear();
  tr.playing.clear();
  std::vector<double> qoe;
  std::size_t row = 0, missing_qoe = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const std::string where = name + " row " + std::to_string(row + 1);
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw FormatError(where + ": expected " + std::to_string(header.size()) + " columns");
    if (parse_number(cells[0], where) != static_cast<double>(row))
      throw FormatError(where + ": t must count seconds from 0 without gaps");
    tr.stsq.push_back(parse_number(cells[1], where));
    const double p = parse_number(cells[2], where);
    if (p != 0.0 && p != 1.0) throw FormatError(where + ": playing must be 0 or 1");
    tr.playing.push_back(p == 1.0 ? 1 : 0);
    if (with_qoe) {
      if (cells[3].empty()) {
        ++missing_qoe;
        qoe.push_back(0.0);
      } else {
        qoe.push_back(parse_number(cells[3], where));
      }
    }
    ++row;
  }
  if (row == 0) throw FormatError(name + ": no data rows");
  if (with_qoe && missing_qoe != 0 && missing_qoe != row)
    throw FormatError(name + ": qoe column partially empty");
  if (with_qoe && missing_qoe == 0) tr.qoe = std::move(qoe);
  else tr.qoe.reset();
}

inline SessionTrace load_trace_csv(const fs::path &path) {
  SessionTrace tr;
  tr.video_id = path.stem().string();
  parse_trace_csv(read_file(path), tr, path.string());
  return tr;
}

// ---------------------------------------------------------------- corpus

inline json scale_json(QoeScale s) { return json::array({s.min, s.max}); }
inline QoeScale parse_scale(const json &j, const std::string &what) {
  if (!j.is_array() || j.size() != 2) throw FormatError(what + ": qoe_scale must be [min, max]");
  QoeScale s{j[0].get<double>(), j[1].get<double>()};
  if (!(s.min < s.max)) throw FormatError(what + ": qoe_scale min must be < max");
  return s;
}

inline Corpus load_corpus(const fs::path &dir_or_manifest) {
  const fs::path manifest =
      fs::is_directory(dir_or_manifest) ? dir_or_manifest / "corpus.json" : dir_or_manifest;
  const json j = read_json(manifest);
  const std::string what = manifest.string();
  if (get_or<int>(j, "format_version", kFormatVersion) != kFormatVersion)
    throw FormatError(what + ": unsupported format_version");
  Corpus c;
  c.name = get_or<std::string>(j, "name", manifest.parent_path().filename().string());
  const std::string metric = get_or<std::string>(j, "vqa_metric", "");
  const auto orientation = parse_orientation(get_or<std::string>(j, "vqa_orientation", "higher_better"));
  const QoeScale scale = j.contains("qoe_scale") ? parse_scale(j.at("qoe_scale"), what) : QoeScale{};
  std::optional<std::array<double, 2>> range;
  if (j.contains("vqa_range") && !j.at("vqa_range").is_null())
    range = j.at("vqa_range").get<std::array<double, 2>>();
  if (!j.contains("videos") || !j.at("videos").is_array()) throw FormatError(what + ": missing videos[]");
  for (const auto &v : j.at("videos")) {
    SessionTrace tr;
    tr.video_id = v.at("video_id").get<std::string>();
    tr.content_id = get_or<std::string>(v, "content_id", "");
    tr.pattern_id = get_or<std::string>(v, "pattern_id", "");
    tr.vqa_metric = get_or<std::string>(v, "vqa_metric", metric);
    tr.orientation = v.contains("vqa_orientation")
                         ? parse_orientation(v.at("vqa_orientation").get<std::string>())
                         : orientation;
    tr.qoe_scale = v.contains("qoe_scale") ? parse_scale(v.at("qoe_scale"), what) : scale;
    tr.vqa_range = range;
    if (v.contains("vqa_range"))
      tr.vqa_range = v.at("vqa_range").is_null()
                         ? std::nullopt
                         : std::optional(v.at("vqa_range").get<std::array<double, 2>>());
    if (v.contains("overall_qoe") && !v.at("overall_qoe").is_null())
      tr.overall_qoe = v.at("overall_qoe").get<double>();
    const fs::path trace_path = manifest.parent_path() / v.at("trace").get<std::string>();
    parse_trace_csv(read_file(trace_path), tr, trace_path.string());
    tr.validate();
    c.traces.push_back(std::move(tr));
  }
  c.validate_metadata();
  return c;
}

/// Writes corpus.json, traces/<video_id>.csv and overall.csv (when every
/// trace carries an overall score).
inline void save_corpus(const Corpus &c, const fs::path &dir) {
  fs::create_directories(dir / "traces");
  json videos = json::array();
  bool all_overall = !c.traces.empty();
  for (const auto &tr : c.traces) {
    const std::string rel = "traces/" + tr.video_id + ".csv";
    write_file(dir / rel, trace_to_csv(tr));
    json v = {{"video_id", tr.video_id},
              {"content_id", tr.content_id},
              {"pattern_id", tr.pattern_id},
              {"trace", rel},
              {"vqa_metric", tr.vqa_metric},
              {"vqa_orientation", to_string(tr.orientation)},
              {"qoe_scale", scale_json(tr.qoe_scale)}};
    v["vqa_range"] = tr.vqa_range ? json(*tr.vqa_range) : json(nullptr);
    if (tr.overall_qoe) v["overall_qoe"] = *tr.overall_qoe;
    else all_overall = false;
    videos.push_back(std::move(v));
  }
  json j = {{"format_version", kFormatVersion}, {"name", c.name}, {"videos", std::move(videos)}};
  write_json(dir / "corpus.json", j);
  if (all_overall) {
    std::string csv = "video_id,overall\n";
    for (const auto &tr : c.traces) csv += tr.video_id + "," + format_double(*tr.overall_qoe) + "\n";
    write_file(dir / "overall.csv", csv);
  }
}

/// `video_id,overall` rows.
inline std::vector<std::pair<std::string, double>> load_overall_csv(const fs::path &path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  if (header.size() != 2 || header[0] != "video_id" || header[1] != "overall")
    throw FormatError(path.string() + ": header must be 'video_id,overall'");
  std::vector<std::pair<std::string, double>> out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) throw FormatError(path.string() + ": expected 2 columns");
    out.emplace_back(cells[0], parse_number(cells[1], path.string()));
  }
  return out;
}

inline std::string series_to_csv(std::span<const double> y, const char *column = "qoe_hat") {
  std::string out = std::string("t,") + column + "\n";
  for (std::size_t t = 0; t < y.size(); ++t) out += std::to_string(t) + "," + format_double(y[t]) + "\n";
  return out;
}

inline std::vector<double> load_series_csv(const fs::path &path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  if (header.size() != 2 || header[0] != "t") throw FormatError(path.string() + ": header must be 't,<value>'");
  std::vector<double> y;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) throw FormatError(path.string() + ": expected 2 columns");
    y.push_back(parse_number(cells[1], path.string()));
  }
  return y;
}

// ---------------------------------------------------------------- configs

inline json to_json(const TrainConfig &c) {
  return {{"timestep", c.timestep},         {"window_state", to_string(c.window_state)},
          {"epochs", c.epochs},             {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
          {"beta2", c.beta2},               {"epsilon", c.epsilon},
          {"seed", c.seed},                 {"shuffle", c.shuffle},
          {"patience", c.patience},         {"min_delta", c.min_delta}};
}

inline TrainConfig train_config_from_json(const json &j) {
  reject_unknown_keys(j, {"timestep", "window_state", "epochs", "batch_size", "learning_rate", "beta1", "beta2",
                          "epsilon", "seed", "shuffle", "patience", "min_delta"},
                      "train config");
  TrainConfig c;
  c.timestep = get_or(j, "timestep", c.timestep);
  c.window_state = parse_window_state(get_or<std::string>(j, "window_state", to_string(c.window_state)));
  c.epochs = get_or(j, "epochs", c.epochs);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
  c.beta1 = get_or(j, "beta1", c.beta1);
  c.beta2 = get_or(j, "beta2", c.beta2);
  c.epsilon = get_or(j, "epsilon", c.epsilon);
  c.seed = get_or(j, "seed", c.seed);
  c.shuffle = get_or(j, "shuffle", c.shuffle);
  c.patience = get_or(j, "patience", c.patience);
  c.min_delta = get_or(j, "min_delta", c.min_delta);
  c.validate();
  return c;
}

inline json to_json(const SynthConfig &c) {
  return {{"n_contents", c.n_contents},
          {"n_patterns", c.n_patterns},
          {"duration", c.duration},
          {"levels", c.levels},
          {"switch_period", c.switch_period},
          {"content_offset", c.content_offset},
          {"jitter", c.jitter},
          {"max_stalls", c.max_stalls},
          {"stall_min", c.stall_min},
          {"stall_max", c.stall_max},
          {"oracle",
           {{"alpha", c.oracle.alpha}, {"beta", c.oracle.beta}, {"memory", c.oracle.memory}, {"rho", c.oracle.rho}}},
          {"seed", c.seed}};
}

inline SynthConfig synth_config_from_json(const json &j) {
  reject_unknown_keys(j, {"n_contents", "n_patterns", "duration", "levels", "switch_period", "content_offset",
                          "jitter", "max_stalls", "stall_min", "stall_max", "oracle", "seed"},
                      "synth config");
  SynthConfig c;
  c.n_contents = get_or(j, "n_contents", c.n_contents);
  c.n_patterns = get_or(j, "n_patterns", c.n_patterns);
  c.duration = get_or(j, "duration", c.duration);
  c.levels = get_or(j, "levels", c.levels);
  c.switch_period = get_or(j, "switch_period", c.switch_period);
  c.content_offset = get_or(j, "content_offset", c.content_offset);
  c.jitter = get_or(j, "jitter", c.jitter);
  c.max_stalls = get_or(j, "max_stalls", c.max_stalls);
  c.stall_min = get_or(j, "stall_min", c.stall_min);
  c.stall_max = get_or(j, "stall_max", c.stall_max);
  c.seed = get_or(j, "seed", c.seed);
  if (j.contains("oracle")) {
    const auto &o = j.at("oracle");
    reject_unknown_keys(o, {"alpha", "beta", "memory", "rho"}, "synth config oracle");
    c.oracle.alpha = get_or(o, "alpha", c.oracle.alpha);
    c.oracle.beta = get_or(o, "beta", c.oracle.beta);
    c.oracle.memory = get_or(o, "memory", c.oracle.memory);
    c.oracle.rho = get_or(o, "rho", c.oracle.rho);
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------- model

inline json matrix_json(const Matrix &m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

inline Matrix matrix_from_json(const json &j, std::size_t rows, std::size_t cols, const std::string &what) {
  if (!j.is_array() || j.size() != rows) throw FormatError(what + ": expected " + std::to_string(rows) + " rows");
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto &row : j) {
    if (!row.is_array() || row.size() != cols)
      throw FormatError(what + ": expected " + std::to_string(cols) + " columns");
    for (const auto &v : row) data.push_back(v.get<double>());
  }
  try {
    return Matrix(rows, cols, std::move(data));
  } catch (const std::invalid_argument &e) {
    throw FormatError(what + ": " + e.what());
  }
}

inline json to_json(const NormSpec &n) {
  return {{"stsq_range", {n.stsq_lo, n.stsq_hi}},
          {"vqa_orientation", to_string(n.orientation)},
          {"tr_max", n.tr_max},
          {"tr_before_stall", to_string(n.tr_mode)},
          {"qoe_scale", scale_json(n.target)}};
}

inline NormSpec norm_from_json(const json &j) {
  NormSpec n;
  const auto r = j.at("stsq_range").get<std::array<double, 2>>();
  n.stsq_lo = r[0];
  n.stsq_hi = r[1];
  n.orientation = parse_orientation(j.at("vqa_orientation").get<std::string>());
  n.tr_max = j.at("tr_max").get<double>();
  n.tr_mode = parse_tr_mode(j.at("tr_before_stall").get<std::string>());
  n.target = parse_scale(j.at("qoe_scale"), "normalization");
  n.validate();
  return n;
}

inline json to_json(const LstmNetwork &net) {
  json layers = json::array();
  for (const auto &lw : net.layers()) {
    json l;
    for (std::size_t g = 0; g < kGateCount; ++g) {
      const std::string s = kGateNames[g];
      l["W_" + s] = matrix_json(lw.W[g]);
      l["U_" + s] = matrix_json(lw.U[g]);
      l["b_" + s] = lw.b[g];
    }
    layers.push_back(std::move(l));
  }
  const auto &c = net.config();
  return {{"config", {{"l", c.layers}, {"d", c.units}, {"m", c.inputs}}},
          {"layers", std::move(layers)},
          {"head", {{"w", net.head().w}, {"b", net.head().b}}}};
}

inline LstmNetwork network_from_json(const json &j) {
  NetworkConfig c;
  c.layers = j.at("config").at("l").get<std::size_t>();
  c.units = j.at("config").at("d").get<std::size_t>();
  c.inputs = j.at("config").at("m").get<std::size_t>();
  c.validate();
  const auto &layers = j.at("layers");
  if (!layers.is_array() || layers.size() != c.layers)
    throw FormatError("weights: expected " + std::to_string(c.layers) + " layers");
  std::vector<LstmLayerWeights> out(c.layers);
  for (std::size_t k = 0; k < c.layers; ++k) {
    for (std::size_t g = 0; g < kGateCount; ++g) {
      const std::string s = kGateNames[g];
      const std::string where = "weights layer " + std::to_string(k) + " ";
      out[k].W[g] = matrix_from_json(layers[k].at("W_" + s), c.units, c.layer_inputs(k), where + "W_" + s);
      out[k].U[g] = matrix_from_json(layers[k].at("U_" + s), c.units, c.units, where + "U_" + s);
      out[k].b[g] = layers[k].at("b_" + s).get<std::vector<double>>();
    }
  }
  OutputHead head{j.at("head").at("w").get<std::vector<double>>(), j.at("head").at("b").get<double>()};
  try {
    return LstmNetwork::from_parts(c, std::move(out), std::move(head));
  } catch (const std::invalid_argument &e) {
    throw FormatError(std::string("weights: ") + e.what());
  }
}

inline json to_json(const Provenance &p) {
  return {{"corpus", p.corpus},
          {"fold", p.fold},
          {"train_ids", p.train_ids},
          {"train_config", to_json(p.config)},
          {"initial_loss", p.initial_loss},
          {"final_loss", p.final_loss},
          {"epochs_run", p.epochs_run},
          {"loss_curve", p.loss_curve}};
}

inline Provenance provenance_from_json(const json &j) {
  Provenance p;
  p.corpus = get_or<std::string>(j, "corpus", "");
  p.fold = get_or<std::string>(j, "fold", "");
  p.train_ids = get_or(j, "train_ids", p.train_ids);
  if (j.contains("train_config")) p.config = train_config_from_json(j.at("train_config"));
  p.initial_loss = get_or(j, "initial_loss", 0.0);
  p.final_loss = get_or(j, "final_loss", 0.0);
  p.epochs_run = get_or<std::size_t>(j, "epochs_run", 0);
  p.loss_curve = get_or(j, "loss_curve", p.loss_curve);
  return p;
}

/// The weights file: network, normalization, feature selection, provenance.
inline json to_json(const TrainedModel &m) {
  json j = to_json(m.network);
  j["format_version"] = kFormatVersion;
  j["normalization"] = to_json(m.norm);
  j["features"] = {{"mode", to_string(m.mode)}, {"set", m.features.name()}};
  j["provenance"] = to_json(m.provenance);
  return j;
}

inline TrainedModel model_from_json(const json &j) {
  if (get_or<int>(j, "format_version", -1) != kFormatVersion)
    throw FormatError("weights: unsupported or missing format_version");
  TrainedModel m;
  m.network = network_from_json(j);
  m.norm = norm_from_json(j.at("normalization"));
  m.mode = parse_feature_mode(j.at("features").at("mode").get<std::string>());
  m.features = FeatureSet::parse(j.at("features").at("set").get<std::string>());
  if (j.contains("provenance")) m.provenance = provenance_from_json(j.at("provenance"));
  if (m.features.size() != m.network.config().inputs)
    throw FormatError("weights: feature set size does not match network input dimension");
  return m;
}

inline void save_model(const TrainedModel &m, const fs::path &path, const std::string &created_at = "") {
  json j = to_json(m);
  if (!created_at.empty()) j["created_at"] = created_at;
  write_json(path, j);
}

inline TrainedModel load_model(const fs::path &path) {
  try {
    return model_from_json(read_json(path));
  } catch (const json::exception &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- plans

inline json to_json(const SplitPlan &plan) {
  json folds = json::array();
  for (std::size_t i = 0; i < plan.folds.size(); ++i) {
    const auto &f = plan.folds[i];
    folds.push_back({{"index", i}, {"train", f.train_ids}, {"test", f.test_ids}, {"degenerate", f.degenerate}});
  }
  return {{"format_version", kFormatVersion}, {"protocol", to_string(plan.protocol)}, {"folds", std::move(folds)}};
}

inline SplitPlan plan_from_json(const json &j) {
  SplitPlan p;
  p.protocol = parse_protocol(j.at("protocol").get<std::string>());
  for (const auto &f : j.at("folds"))
    p.folds.push_back({f.at("train").get<std::vector<std::string>>(), f.at("test").get<std::vector<std::string>>(),
                       f.at("degenerate").get<bool>()});
  return p;
}

// ---------------------------------------------------------------- reports

inline json correlation_json(const Correlation &c) { return c.defined() ? json(c.value) : json(nullptr); }

inline json to_json(const Summary &s) {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return {{"mean", num(s.mean)}, {"median", num(s.median)}, {"count", s.count}, {"skipped", s.skipped}};
}

inline json to_json(const PooledCorrelation &p, Pooling method) {
  return {{"method", method == Pooling::mean ? "mean" : "median"},
          {"lcc", correlation_json(p.lcc)},
          {"srocc", correlation_json(p.srocc)},
          {"videos", p.pooled.size()}};
}

inline json to_json(const MetricsReport &r) {
  json sessions = json::array();
  for (const auto &s : r.sessions) {
    json e = {{"video_id", s.video_id},
              {"fold", s.fold},
              {"lcc", correlation_json(s.lcc)},
              {"srocc", correlation_json(s.srocc)},
              {"rmse_n_percent", s.rmse_n_percent},
              {"or_percent", s.or_percent}};
    if (!s.lcc.defined()) e["lcc_undefined"] = s.lcc.undefined_reason;
    if (!s.srocc.defined()) e["srocc_undefined"] = s.srocc.undefined_reason;
    sessions.push_back(std::move(e));
  }
  json j = {{"format_version", kFormatVersion},
            {"model", r.model},
            {"vqa_metric", r.vqa_metric},
            {"or_delta", r.or_delta},
            {"sessions", std::move(sessions)},
            {"aggregate",
             {{"lcc", to_json(r.lcc)},
              {"srocc", to_json(r.srocc)},
              {"rmse_n_percent", to_json(r.rmse_n)},
              {"or_percent", to_json(r.outage)}}}};
  if (r.pooled_mean) j["pooling"]["mean"] = to_json(*r.pooled_mean, Pooling::mean);
  if (r.pooled_median) j["pooling"]["median"] = to_json(*r.pooled_median, Pooling::median);
  return j;
}

/// Aligned text table with one row per aggregation: model, VQA metric,
/// LCC, SROCC, RMSE_n (%), OR (%).
inline std::string report_table(const MetricsReport &r) {
  auto cell = [](double v, int prec) {
    if (std::isnan(v)) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return std::string(buf);
  };
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-12s %-8s %8s %8s %12s %8s\n", "Model", "VQA metric", "Pool", "LCC",
                "SROCC", "RMSE_n (%)", "OR (%)");
  out += line;
  for (int median = 0; median < 2; ++median) {
    auto pick = [&](const Summary &s) { return median ? s.median : s.mean; };
    std::snprintf(line, sizeof line, "%-18s %-12s %-8s %8s %8s %12s %8s\n", r.model.c_str(),
                  r.vqa_metric.empty() ? "-" : r.vqa_metric.c_str(), median ? "median" : "mean",
                  cell(pick(r.lcc), 3).c_str(), cell(pick(r.srocc), 3).c_str(), cell(pick(r.rmse_n), 2).c_str(),
                  cell(pick(r.outage), 2).c_str());
    out += line;
  }
  std::snprintf(line, sizeof line, "sessions: %zu (LCC undefined: %zu, SROCC undefined: %zu); OR threshold: %.3g of scale range\n",
                r.sessions.size(), r.lcc.skipped, r.srocc.skipped, r.or_delta);
  out += line;
  return out;
}

} // namespace qoe::io
