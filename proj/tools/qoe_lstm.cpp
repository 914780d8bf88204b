// SPDX-License-Identifier: Apache-2.0
//
// qoe_lstm: generate corpora, train, predict, evaluate, sweep and pool.
//
// Every command exits 0 on success. On failure it prints a single line
//   qoe_lstm: error: <command>: <message>
// to stderr and exits 1 (2 for command-line usage errors).

#include <qoe/datasets.hpp>
#include <qoe/experiment.hpp>
#include <qoe/io.hpp>
#include <qoe/synth.hpp>
#include <qoe/training.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using qoe::io::json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  bool deterministic = false;

  /// --seed, else QOE_LSTM_SEED, else the value from a config file.
  std::uint64_t resolve(std::uint64_t config_seed) const {
    if (seed) return *seed;
    if (const char *env = std::getenv("QOE_LSTM_SEED"); env && *env) {
      std::size_t used = 0;
      const std::string s(env);
      std::uint64_t v = 0;
      try {
        v = std::stoull(s, &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used != s.size()) throw std::invalid_argument("QOE_LSTM_SEED is not an unsigned integer: '" + s + "'");
      return v;
    }
    return config_seed;
  }

  std::string timestamp() const {
    if (deterministic) return "";
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
  }
};

struct SplitArgs {
  std::string corpus;
  std::string protocol = "netflix";
  std::size_t p = 5;
  double fraction = 0.8;
  std::string fold = "all";
};

void add_split_options(CLI::App *cmd, SplitArgs &a) {
  cmd->add_option("--corpus", a.corpus, "Corpus directory or manifest")->required();
  cmd->add_option("--protocol", a.protocol, "netflix | lfovia | leave-p-out | random | fixed-80-20");
  cmd->add_option("--p", a.p, "Group size for leave-p-out");
  cmd->add_option("--fraction", a.fraction, "Training fraction for random / fixed-80-20");
  cmd->add_option("--fold", a.fold, "Fold index, comma-separated list, or 'all'");
}

qoe::SplitPlan make_split(const qoe::Corpus &corpus, const SplitArgs &a, std::uint64_t seed) {
  qoe::Rng rng = qoe::Rng(seed).derive(0x5b1);
  qoe::SplitOptions opts;
  opts.p = a.p;
  opts.fraction = a.fraction;
  return qoe::make_plan(corpus, qoe::parse_protocol(a.protocol), rng, opts);
}

qoe::TrainConfig load_train_config(const std::string &path, const Globals &g) {
  qoe::TrainConfig cfg;
  if (!path.empty()) cfg = qoe::io::train_config_from_json(qoe::io::read_json(path));
  cfg.seed = g.resolve(cfg.seed);
  return cfg;
}

qoe::NetworkConfig parse_net(const std::string &text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("--net expects l,d (e.g. 2,22), got '" + text + "'");
  qoe::NetworkConfig c;
  try {
    c.layers = std::stoul(text.substr(0, comma));
    c.units = std::stoul(text.substr(comma + 1));
  } catch (const std::exception &) {
    throw std::invalid_argument("--net expects l,d (e.g. 2,22), got '" + text + "'");
  }
  return c;
}

/// "1..3" or "1,4,10".
std::vector<std::size_t> parse_grid(const std::string &text, const char *flag) {
  std::vector<std::size_t> out;
  try {
    if (const auto dots = text.find(".."); dots != std::string::npos) {
      const std::size_t lo = std::stoul(text.substr(0, dots)), hi = std::stoul(text.substr(dots + 2));
      if (lo > hi) throw std::invalid_argument("empty range");
      for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      std::size_t start = 0;
      while (start <= text.size()) {
        const std::size_t end = std::min(text.find(',', start), text.size());
        out.push_back(std::stoul(text.substr(start, end - start)));
        start = end + 1;
      }
    }
  } catch (const std::exception &) {
    throw std::invalid_argument(std::string(flag) + " expects 'A..B' or a comma list, got '" + text + "'");
  }
  return out;
}

struct FeatureChoice {
  qoe::FeatureMode mode = qoe::FeatureMode::full;
  qoe::FeatureSet set = qoe::FeatureSet::all();
  std::string label; // subdirectory for ablation:all, else empty
};

/// full | stsq-only | ablation:SET | ablation:all
std::vector<FeatureChoice> parse_features(const std::string &text) {
  if (text == "full") return {{}};
  if (text == "stsq-only") return {{qoe::FeatureMode::stsq_only, qoe::FeatureSet::all(), ""}};
  const std::string prefix = "ablation:";
  if (text.rfind(prefix, 0) != 0)
    throw std::invalid_argument("--features expects full, stsq-only or ablation:SET, got '" + text + "'");
  const std::string set = text.substr(prefix.size());
  if (set == "all") {
    std::vector<FeatureChoice> out;
    for (char c : qoe::FeatureSet::kLetters)
      out.push_back({qoe::FeatureMode::full, qoe::FeatureSet::parse(std::string(1, c)),
                     std::string("ablation_") + c});
    return out;
  }
  return {{qoe::FeatureMode::full, qoe::FeatureSet::parse(set), ""}};
}

std::string model_label(const qoe::TrainedModel &m) {
  std::string s = "LSTM-QoE";
  if (m.mode == qoe::FeatureMode::stsq_only) return s + " (stsq-only)";
  if (!(m.features == qoe::FeatureSet::all())) s += " (" + m.features.name() + ")";
  return s;
}

void write_report(const qoe::MetricsReport &report, const fs::path &out, const Globals &g) {
  json j = qoe::io::to_json(report);
  if (const auto ts = g.timestamp(); !ts.empty()) j["created_at"] = ts;
  qoe::io::write_json(out, j);
  fs::path txt = out;
  txt.replace_extension(".txt");
  qoe::io::write_file(txt, qoe::io::report_table(report));
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  std::string config;
  std::string out;
  std::string name = "synthetic";
};

void run_synth(const SynthArgs &a, const Globals &g) {
  qoe::SynthConfig cfg;
  if (!a.config.empty()) cfg = qoe::io::synth_config_from_json(qoe::io::read_json(a.config));
  cfg.seed = g.resolve(cfg.seed);
  const auto corpus = qoe::gen_corpus(cfg, a.name);
  qoe::io::save_corpus(corpus, a.out);
  qoe::io::write_json(fs::path(a.out) / "synth_config.json", qoe::io::to_json(cfg));
  std::cout << "wrote " << corpus.traces.size() << " traces to " << a.out << "\n";
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  SplitArgs split;
  std::string net = "2,22";
  std::string features = "full";
  std::string train_config;
  std::string tr_before_stall = "session_start";
  std::string out;
};

void save_fold_models(const std::vector<qoe::FoldModel> &models, const fs::path &dir, const Globals &g) {
  for (const auto &fm : models) {
    qoe::io::save_model(fm.model, dir / (qoe::fold_name(fm.fold) + ".json"), g.timestamp());
    const auto &p = fm.model.provenance;
    std::cout << dir.filename().string() << "/" << qoe::fold_name(fm.fold) << ": train=" << p.train_ids.size()
              << " epochs=" << p.epochs_run << " loss " << p.initial_loss << " -> " << p.final_loss << "\n";
  }
}

void run_train(const TrainArgs &a, const Globals &g) {
  const auto corpus = qoe::io::load_corpus(a.split.corpus);
  const auto cfg = load_train_config(a.train_config, g);
  const auto plan = make_split(corpus, a.split, cfg.seed);
  const auto folds = qoe::select_folds(plan, a.split.fold);
  if (folds.empty()) throw std::invalid_argument("no non-degenerate folds selected");
  const fs::path out(a.out);
  fs::create_directories(out);
  qoe::io::write_json(out / "plan.json", qoe::io::to_json(plan));
  qoe::io::write_json(out / "train_config.json", qoe::io::to_json(cfg));

  qoe::ExperimentSpec spec;
  spec.net = parse_net(a.net);
  spec.train = cfg;
  spec.fit.norm.tr_mode = qoe::io::parse_tr_mode(a.tr_before_stall);
  for (const auto &choice : parse_features(a.features)) {
    spec.fit.mode = choice.mode;
    spec.fit.features = choice.set;
    const fs::path dir = choice.label.empty() ? out : out / choice.label;
    if (!choice.label.empty()) qoe::io::write_json(dir / "plan.json", qoe::io::to_json(plan));
    save_fold_models(qoe::train_folds(corpus, plan, folds, spec, g.jobs), dir, g);
  }
}

// ------------------------------------------------------------------ predict

struct PredictArgs {
  std::string model;
  std::string trace;
  std::string out;
};

void run_predict(const PredictArgs &a, const Globals &) {
  const auto model = qoe::io::load_model(a.model);
  auto trace = qoe::io::load_trace_csv(a.trace);
  trace.qoe_scale = model.norm.target;
  trace.orientation = model.norm.orientation;
  const auto y = qoe::predict(model, trace);
  const std::string csv = qoe::io::series_to_csv(y);
  if (a.out.empty() || a.out == "-") std::cout << csv;
  else qoe::io::write_file(a.out, csv);
}

// ------------------------------------------------------------------ evaluate

struct EvaluateArgs {
  SplitArgs split;
  std::string models;
  double or_delta = 0.10;
  std::string out;
  std::string predictions_out;
};

std::vector<qoe::FoldModel> load_fold_models(const fs::path &dir, const qoe::SplitPlan &plan,
                                             const std::string &fold_spec) {
  std::vector<qoe::FoldModel> out;
  const bool all = fold_spec == "all";
  const auto wanted = qoe::select_folds(plan, fold_spec);
  for (std::size_t f : wanted) {
    const fs::path path = dir / (qoe::fold_name(f) + ".json");
    if (!fs::exists(path)) {
      if (all) continue;
      throw std::invalid_argument("missing model file " + path.string());
    }
    out.push_back({f, qoe::io::load_model(path)});
  }
  if (out.empty()) throw std::invalid_argument("no fold_*.json model files in " + dir.string());
  return out;
}

void write_predictions(const std::vector<qoe::VideoPrediction> &preds, const fs::path &dir) {
  std::map<std::string, int> seen;
  for (const auto &p : preds) {
    if (seen[p.video_id]++) throw std::invalid_argument("video '" + p.video_id + "' is tested in several folds");
    qoe::io::write_file(dir / (p.video_id + ".csv"), qoe::io::series_to_csv(p.qoe_hat));
  }
}

void run_evaluate(const EvaluateArgs &a, const Globals &g) {
  const auto corpus = qoe::io::load_corpus(a.split.corpus);
  const fs::path dir(a.models);
  qoe::SplitPlan plan;
  if (fs::exists(dir / "plan.json")) {
    plan = qoe::io::plan_from_json(qoe::io::read_json(dir / "plan.json"));
    if (plan.protocol != qoe::parse_protocol(a.split.protocol))
      throw std::invalid_argument(std::string("models were trained with protocol '") + qoe::to_string(plan.protocol) +
                                  "', not '" + a.split.protocol + "'");
  } else {
    plan = make_split(corpus, a.split, g.resolve(0));
  }
  const auto models = load_fold_models(dir, plan, a.split.fold);
  const auto ev = qoe::evaluate_folds(corpus, plan, models, a.or_delta, model_label(models.front().model), g.jobs);
  write_report(ev.report, a.out, g);
  if (!a.predictions_out.empty()) write_predictions(ev.predictions, a.predictions_out);
  std::cout << qoe::io::report_table(ev.report);
}

// ------------------------------------------------------------------ sweep

struct SweepArgs {
  SplitArgs split;
  std::string layers = "1..3";
  std::string units = "1,4,10,22,30";
  std::string features = "full";
  std::string train_config;
  double or_delta = 0.10;
  std::string out;
};

void run_sweep(const SweepArgs &a, const Globals &g) {
  const auto corpus = qoe::io::load_corpus(a.split.corpus);
  const auto cfg = load_train_config(a.train_config, g);
  const auto plan = make_split(corpus, a.split, cfg.seed);
  const auto folds = qoe::select_folds(plan, a.split.fold);
  if (folds.empty()) throw std::invalid_argument("no non-degenerate folds selected");
  const auto choices = parse_features(a.features);
  if (choices.size() != 1) throw std::invalid_argument("sweep takes a single feature set");

  struct Point {
    std::size_t layers, units;
  };
  std::vector<Point> grid;
  for (auto l : parse_grid(a.layers, "--layers"))
    for (auto d : parse_grid(a.units, "--units")) grid.push_back({l, d});

  const fs::path out(a.out);
  fs::create_directories(out);
  qoe::io::write_json(out / "plan.json", qoe::io::to_json(plan));
  qoe::io::write_json(out / "train_config.json", qoe::io::to_json(cfg));

  // One task per (grid point, fold).
  std::vector<qoe::FoldModel> trained(grid.size() * folds.size());
  qoe::parallel_for(trained.size(), g.jobs, [&](std::size_t i) {
    const auto &pt = grid[i / folds.size()];
    qoe::ExperimentSpec spec;
    spec.net.layers = pt.layers;
    spec.net.units = pt.units;
    spec.train = cfg;
    spec.fit.mode = choices[0].mode;
    spec.fit.features = choices[0].set;
    trained[i] = qoe::train_folds(corpus, plan, {folds[i % folds.size()]}, spec, 1).front();
  });

  json summary = json::array();
  std::string csv = "layers,units,lcc_mean,lcc_median,srocc_mean,srocc_median,rmse_n_mean,or_mean\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto &pt = grid[k];
    std::vector<qoe::FoldModel> models(trained.begin() + static_cast<std::ptrdiff_t>(k * folds.size()),
                                       trained.begin() + static_cast<std::ptrdiff_t>((k + 1) * folds.size()));
    const fs::path dir = out / ("l" + std::to_string(pt.layers) + "_d" + std::to_string(pt.units));
    for (const auto &fm : models)
      qoe::io::save_model(fm.model, dir / (qoe::fold_name(fm.fold) + ".json"), g.timestamp());
    const auto ev = qoe::evaluate_folds(corpus, plan, models, a.or_delta,
                                        "LSTM-QoE l=" + std::to_string(pt.layers) + " d=" + std::to_string(pt.units),
                                        g.jobs);
    write_report(ev.report, dir / "report.json", g);
    const auto &r = ev.report;
    summary.push_back({{"layers", pt.layers},
                       {"units", pt.units},
                       {"lcc", qoe::io::to_json(r.lcc)},
                       {"srocc", qoe::io::to_json(r.srocc)},
                       {"rmse_n_percent", qoe::io::to_json(r.rmse_n)},
                       {"or_percent", qoe::io::to_json(r.outage)}});
    csv += std::to_string(pt.layers) + "," + std::to_string(pt.units) + "," + qoe::io::format_double(r.lcc.mean) +
           "," + qoe::io::format_double(r.lcc.median) + "," + qoe::io::format_double(r.srocc.mean) + "," +
           qoe::io::format_double(r.srocc.median) + "," + qoe::io::format_double(r.rmse_n.mean) + "," +
           qoe::io::format_double(r.outage.mean) + "\n";
    std::cout << "l=" << pt.layers << " d=" << pt.units << " lcc mean " << r.lcc.mean << " median " << r.lcc.median
              << "\n";
  }
  qoe::io::write_json(out / "sweep.json", {{"or_delta", a.or_delta}, {"grid", summary}});
  qoe::io::write_file(out / "sweep.csv", csv);
}

// ------------------------------------------------------------------ pool

struct PoolArgs {
  std::string predictions;
  std::string overall;
  std::string method = "mean";
  std::string out;
};

void run_pool(const PoolArgs &a, const Globals &) {
  const auto overall = qoe::io::load_overall_csv(a.overall);
  std::vector<std::vector<double>> series;
  std::vector<double> truth;
  for (const auto &[id, value] : overall) {
    const fs::path path = fs::path(a.predictions) / (id + ".csv");
    if (!fs::exists(path)) continue; // video not predicted (e.g. a training video)
    series.push_back(qoe::io::load_series_csv(path));
    truth.push_back(value);
  }
  if (series.size() < 2) throw std::invalid_argument("need predictions for at least 2 videos listed in " + a.overall);
  std::vector<qoe::Pooling> methods;
  if (a.method == "both") methods = {qoe::Pooling::mean, qoe::Pooling::median};
  else methods = {qoe::parse_pooling(a.method)};
  json results = json::array();
  for (auto m : methods) {
    const auto r = qoe::pool_overall(series, truth, m);
    results.push_back(qoe::io::to_json(r, m));
    std::printf("%-8s LCC %s SROCC %s videos %zu\n", m == qoe::Pooling::mean ? "mean" : "median",
                r.lcc.defined() ? std::to_string(r.lcc.value).c_str() : "n/a",
                r.srocc.defined() ? std::to_string(r.srocc.value).c_str() : "n/a", series.size());
  }
  if (!a.out.empty()) qoe::io::write_json(a.out, {{"pooling", results}});
}

std::string one_line(std::string s) {
  for (char &c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Continuous QoE prediction with stacked LSTMs"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  auto *seed_opt = app.add_option("--seed", seed_value, "Seed for all randomness (falls back to QOE_LSTM_SEED)");
  app.add_option("--jobs", g.jobs, "Worker threads for folds")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", g.deterministic, "Omit timestamps so outputs are byte-reproducible");

  SynthArgs synth;
  auto *c_synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  c_synth->add_option("--config", synth.config, "Synthetic corpus config (JSON)");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--name", synth.name, "Corpus name");

  TrainArgs train;
  auto *c_train = app.add_subcommand("train", "Train one model per fold");
  add_split_options(c_train, train.split);
  c_train->add_option("--net", train.net, "Layers and units per layer, l,d");
  c_train->add_option("--features", train.features, "full | stsq-only | ablation:SET | ablation:all");
  c_train->add_option("--train-config", train.train_config, "Training config (JSON)");
  c_train->add_option("--tr-before-stall", train.tr_before_stall, "session_start | constant_max");
  c_train->add_option("--out", train.out, "Output directory")->required();

  PredictArgs predict;
  auto *c_predict = app.add_subcommand("predict", "Per-second QoE for one trace");
  c_predict->add_option("--model", predict.model, "Weights file")->required();
  c_predict->add_option("--trace", predict.trace, "Trace CSV")->required();
  c_predict->add_option("--out", predict.out, "Output CSV (default stdout)");

  EvaluateArgs evaluate;
  auto *c_eval = app.add_subcommand("evaluate", "Score trained fold models");
  add_split_options(c_eval, evaluate.split);
  c_eval->add_option("--models", evaluate.models, "Directory written by train")->required();
  c_eval->add_option("--or-delta", evaluate.or_delta, "Outage threshold as a fraction of the QoE range");
  c_eval->add_option("--out", evaluate.out, "Report JSON (a .txt table is written next to it)")->required();
  c_eval->add_option("--predictions-out", evaluate.predictions_out, "Directory for per-video prediction CSVs");

  SweepArgs sweep;
  auto *c_sweep = app.add_subcommand("sweep", "Grid over layers and units");
  add_split_options(c_sweep, sweep.split);
  c_sweep->add_option("--layers", sweep.layers, "Layer counts, A..B or a comma list");
  c_sweep->add_option("--units", sweep.units, "Units per layer, A..B or a comma list");
  c_sweep->add_option("--features", sweep.features, "full | stsq-only | ablation:SET");
  c_sweep->add_option("--train-config", sweep.train_config, "Training config (JSON)");
  c_sweep->add_option("--or-delta", sweep.or_delta, "Outage threshold as a fraction of the QoE range");
  c_sweep->add_option("--out", sweep.out, "Output directory")->required();

  PoolArgs pool;
  auto *c_pool = app.add_subcommand("pool", "Correlate pooled predictions with overall QoE");
  c_pool->add_option("--predictions", pool.predictions, "Directory of <video_id>.csv predictions")->required();
  c_pool->add_option("--overall", pool.overall, "CSV with video_id,overall")->required();
  c_pool->add_option("--method", pool.method, "mean | median | both");
  c_pool->add_option("--out", pool.out, "Result JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "qoe_lstm: error: usage: " << one_line(e.what()) << "\n";
    return 2;
  }
  if (*seed_opt) g.seed = seed_value;

  std::string command = "?";
  try {
    if (*c_synth) command = "synth", run_synth(synth, g);
    else if (*c_train) command = "train", run_train(train, g);
    else if (*c_predict) command = "predict", run_predict(predict, g);
    else if (*c_eval) command = "evaluate", run_evaluate(evaluate, g);
    else if (*c_sweep) command = "sweep", run_sweep(sweep, g);
    else if (*c_pool) command = "pool", run_pool(pool, g);
  } catch (const std::exception &e) {
    std::cerr << "qoe_lstm: error: " << command << ": " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
