#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "run_config.hpp"
#include "sstkg/error.hpp"
#include "sstkg/inference.hpp"
#include "sstkg/ingest.hpp"
#include "sstkg/metrics.hpp"
#include "sstkg/persistence.hpp"
#include "sstkg/synthetic.hpp"
#include "sstkg/training.hpp"

namespace sstkg::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Failure inside a pipeline stage; reported with the stage name and exit code 1.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

template <typename T>
CLI::Option* add_optional(CLI::App* app, const std::string& name, std::optional<T>& target,
                          const std::string& description) {
  return app->add_option_function<T>(name, [&target](const T& v) { target = v; }, description);
}

/// Flag values collected before the config file is read, so that flags win.
struct Overrides {
  std::optional<std::string> config;
  std::optional<double> distance_threshold_km;
  std::optional<double> ridge_lambda;
  std::optional<double> prune_epsilon;
  std::optional<std::string> train_slots;
  std::optional<std::string> test_slots;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> static_dim;
  std::optional<std::size_t> record_window;
  std::optional<double> learning_rate;
  std::optional<std::size_t> epochs_influence;
  std::optional<std::size_t> epochs_embedding;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> negatives_per_sample;
  std::optional<double> similarity_band;
  std::optional<std::uint64_t> seed;
  bool scale_static_by_influence = false;
  bool raw_metrics = false;
  std::optional<std::string> acc_levels;
  std::optional<std::string> data;
  std::optional<std::string> graph;
  std::optional<std::string> model;
};

void add_config_flag(CLI::App* app, Overrides& o) {
  add_optional(app, "--config", o.config, "Run configuration file (default: ./sstkg.json when present)");
}

void add_build_flags(CLI::App* app, Overrides& o) {
  add_optional(app, "--distance-threshold", o.distance_threshold_km, "Neighbourhood radius in km (default 2.0)");
  add_optional(app, "--ridge-lambda", o.ridge_lambda, "Ridge penalty of the influence regression (default 1e-3)");
  add_optional(app, "--prune-epsilon", o.prune_epsilon, "Drop edges with |influence| below this (default 1e-4)");
  add_optional(app, "--train-slots", o.train_slots, "Slots used for construction and training, 'A-B' inclusive");
  add_optional(app, "--workers", o.workers, "Construction threads (default 1, bit-reproducible)");
}

void add_train_flags(CLI::App* app, Overrides& o) {
  add_optional(app, "--static-dim", o.static_dim, "Static embedding dimension (default 16)");
  add_optional(app, "--record-window", o.record_window, "Record slice length in slots (default 7)");
  add_optional(app, "--learning-rate", o.learning_rate, "SGD step size (default 0.01)");
  add_optional(app, "--epochs-embedding", o.epochs_embedding, "Epochs of the embedding phase (default 50)");
  add_optional(app, "--epochs-influence", o.epochs_influence, "Epochs of the influence phase (default 50)");
  add_optional(app, "--batch-size", o.batch_size, "Samples per batch (default 64)");
  add_optional(app, "--negatives", o.negatives_per_sample, "Negatives per sample in the embedding phase (default 4)");
  add_optional(app, "--similarity-band", o.similarity_band, "Relative overall-record band for negatives (default 0.2)");
  add_optional(app, "--seed", o.seed, "Training seed (overrides SSTKG_SEED and the config file)");
  app->add_flag("--scale-static-by-influence", o.scale_static_by_influence,
                "Scale neighbour static slices by influence in the in embedding");
}

void add_selection_flags(CLI::App* app, Overrides& o, std::optional<std::string>& entities,
                         std::optional<std::string>& entities_from, std::optional<std::string>& method) {
  add_optional(app, "--test-slots,--slots", o.test_slots, "Slots to predict, 'A-B' inclusive");
  add_optional(app, "--entities", entities, "Comma-separated entity ids (default: every entity)");
  add_optional(app, "--entities-from", entities_from,
               "File with entity ids: ground_truth.json (its targets) or one id per line");
  add_optional(app, "--method", method, "embedding_decode (default) or influence_direct")
      ->check(CLI::IsMember({"embedding_decode", "influence_direct"}));
}

std::uint64_t parse_seed_env(const char* text) {
  std::uint64_t v = 0;
  const std::string s(text);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ValidationError("SSTKG_SEED must be an unsigned integer, got '" + s + "'");
  }
  return v;
}

std::optional<std::uint64_t> env_seed() {
  const char* env = std::getenv("SSTKG_SEED");
  if (env == nullptr) return std::nullopt;
  return parse_seed_env(env);
}

/// default < config file < SSTKG_SEED < flags
RunConfig resolve(const Overrides& o) {
  RunConfig c;
  if (o.config) {
    c = load_run_config(*o.config);
  } else if (std::filesystem::exists("sstkg.json")) {
    c = load_run_config("sstkg.json");
  }
  if (auto s = env_seed()) c.embedding.seed = *s;

  if (o.distance_threshold_km) c.build.distance_threshold_km = *o.distance_threshold_km;
  if (o.ridge_lambda) c.build.ridge_lambda = *o.ridge_lambda;
  if (o.prune_epsilon) c.build.prune_epsilon = *o.prune_epsilon;
  if (o.train_slots) c.build.training_window = parse_slot_range(*o.train_slots);
  if (o.test_slots) c.test_slots = parse_slot_range(*o.test_slots);
  if (o.workers) c.build.workers = *o.workers;
  if (o.static_dim) c.embedding.static_dim = *o.static_dim;
  if (o.record_window) c.embedding.record_window = *o.record_window;
  if (o.learning_rate) c.embedding.learning_rate = *o.learning_rate;
  if (o.epochs_influence) c.embedding.epochs_influence = *o.epochs_influence;
  if (o.epochs_embedding) c.embedding.epochs_embedding = *o.epochs_embedding;
  if (o.batch_size) c.embedding.batch_size = *o.batch_size;
  if (o.negatives_per_sample) c.embedding.negatives_per_sample = *o.negatives_per_sample;
  if (o.similarity_band) c.embedding.similarity_band = *o.similarity_band;
  if (o.seed) c.embedding.seed = *o.seed;
  if (o.scale_static_by_influence) c.embedding.scale_static_by_influence = true;
  if (o.raw_metrics) c.raw_metrics = true;
  if (o.acc_levels) {
    c.acc_levels.clear();
    for (const std::string& item : split_list(*o.acc_levels)) {
      try {
        std::size_t pos = 0;
        c.acc_levels.push_back(std::stoi(item, &pos));
        if (pos != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ValidationError("bad --acc-levels entry '" + item + "'");
      }
    }
  }
  if (o.data) c.data = *o.data;
  if (o.graph) c.graph = *o.graph;
  if (o.model) c.model = *o.model;
  c.validate();
  return c;
}

std::string require_path(const std::string& value, const std::string& what) {
  if (value.empty()) throw ValidationError("missing " + what);
  return value;
}

SaveOptions echo(const RunConfig& config) { return SaveOptions{run_config_to_json(config)}; }

std::vector<std::string> select_entities(const Sstkg& graph, const std::optional<std::string>& list,
                                         const std::optional<std::string>& from) {
  std::vector<std::string> ids;
  if (list && from) throw ValidationError("--entities and --entities-from are mutually exclusive");
  if (list) {
    ids = split_list(*list);
  } else if (from) {
    std::ifstream in(*from);
    if (!in) throw ValidationError("cannot open " + *from);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto parsed = nlohmann::json::parse(text, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object() && parsed.contains("targets")) {
      ids = parsed["targets"].get<std::vector<std::string>>();
    } else {
      std::istringstream lines(text);
      std::string line;
      while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) ids.push_back(line);
      }
    }
  } else {
    for (const Entity& e : graph.entities().entities()) ids.push_back(e.id);
  }
  if (ids.empty()) throw ValidationError("no entities selected");
  for (const std::string& id : ids) {
    if (!graph.entities().index_of(id)) throw ValidationError("unknown entity id '" + id + "'");
  }
  return ids;
}

SlotRange require_test_slots(const RunConfig& config, const TimeIndex& time_index) {
  if (!config.test_slots) throw ValidationError("no test slots given (use --test-slots or test_slots in the config)");
  config.validate(time_index);
  return *config.test_slots;
}

std::vector<Prediction> predict_all(const TrainedModel& model, const std::vector<std::string>& ids, SlotRange slots,
                                    PredictionMethod method) {
  std::vector<Prediction> out;
  out.reserve(ids.size() * slots.size());
  for (const std::string& id : ids) {
    for (std::size_t t = slots.begin; t < slots.end; ++t) {
      out.push_back(method == PredictionMethod::influence_direct ? predict_influence_direct(model, id, t)
                                                                  : predict(model, id, t));
    }
  }
  return out;
}

PredictionMethod parse_method(const std::optional<std::string>& method) {
  if (method && *method == "influence_direct") return PredictionMethod::influence_direct;
  return PredictionMethod::embedding_decode;
}

TrainedModel load_model_stage(const RunConfig& config) {
  const std::string path = require_path(config.model, "--model");
  return stage("load", [&] { return load_model(path); });
}

// --- commands -------------------------------------------------------------

struct SynthArgs {
  std::optional<std::string> spec;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec = a.spec ? load_synthetic_spec(*a.spec) : SyntheticSpec{};
  if (auto s = env_seed()) spec.seed = *s;
  if (a.seed) spec.seed = *a.seed;
  spec.validate();
  const SyntheticWorld world = stage("synth", [&] { return generate_synthetic(spec); });
  stage("write", [&] {
    write_dataset_csv(world.entities, a.out);
    save_ground_truth(world.truth, std::filesystem::path(a.out) / "ground_truth.json");
    std::ofstream(std::filesystem::path(a.out) / "spec.json", std::ios::binary) << synthetic_spec_to_json(spec) << "\n";
  });
  out << "entities: " << world.entities.size() << "\n"
      << "targets: " << world.truth.targets.size() << "\n"
      << "ground_truth_edges: " << world.truth.edges.size() << "\n"
      << "written: " << a.out << "\n";
  return kExitOk;
}

struct BuildArgs {
  std::string out = "graph.json";
  std::optional<std::string> time_index;
};

int cmd_build(const Overrides& o, const BuildArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig config = resolve(o);
  const std::string data = require_path(config.data, "--data");
  std::optional<TimeIndex> ti;
  if (a.time_index) ti = load_time_index(*a.time_index);
  ParsedDataset parsed = stage("ingest", [&] { return read_dataset_dir(data, ti); });
  for (const std::string& w : parsed.warnings) err << "warning: " << w << "\n";
  config.validate(parsed.entities.time_index());

  const auto start = Clock::now();
  Sstkg graph = stage("build", [&] { return build_graph(std::move(parsed.entities), config.build); });
  const double elapsed = seconds_since(start);

  std::size_t isolated = 0;
  double sum_p = 0.0;
  for (std::size_t e = 0; e < graph.entities().size(); ++e) {
    isolated += graph.isolated(e) ? 1 : 0;
    sum_p += graph.self_weight(e);
  }
  if (graph.edges().empty()) {
    err << "warning: no entity pair lies within " << config.build.distance_threshold_km
        << " km; the graph has no edges and every entity is isolated\n";
  }
  stage("save", [&] { save_graph(graph, a.out, echo(config)); });
  char sum_text[64];
  std::snprintf(sum_text, sizeof sum_text, "%.12f", sum_p);
  out << "entities: " << graph.entities().size() << "\n"
      << "edges: " << graph.edges().size() << "\n"
      << "isolated: " << isolated << "\n"
      << "sum_p: " << sum_text << "\n"
      << "build_seconds: " << elapsed << "\n"
      << "written: " << a.out << "\n";
  return kExitOk;
}

int cmd_train(const Overrides& o, const std::string& out_path, std::ostream& out, std::ostream& err) {
  RunConfig config = resolve(o);
  const std::string graph_path = require_path(config.graph, "--graph");
  Sstkg graph = stage("load", [&] { return load_graph(graph_path); });
  if (graph.edges().size() < 2 && config.embedding.epochs_influence > 0) {
    err << "warning: fewer than two edges; the influence phase is skipped\n";
  }
  const auto start = Clock::now();
  TrainedModel model = stage("train", [&] { return train(std::move(graph), config.embedding); });
  const double elapsed = seconds_since(start);
  config.build = model.graph.config();
  stage("save", [&] { save_model(model, out_path, echo(config)); });
  auto last = [](const std::vector<double>& v) { return v.empty() ? std::string("-") : format_double(v.back()); };
  out << "epochs_embedding: " << model.trace.embedding.size() << "\n"
      << "epochs_influence: " << model.trace.influence.size() << "\n"
      << "final_embedding_loss: " << last(model.trace.embedding) << "\n"
      << "final_influence_loss: " << last(model.trace.influence) << "\n"
      << "train_seconds: " << elapsed << "\n"
      << "written: " << out_path << "\n";
  return kExitOk;
}

struct PredictArgs {
  std::string out = "predictions.csv";
  std::optional<std::string> entities;
  std::optional<std::string> entities_from;
  std::optional<std::string> method;
};

int cmd_predict(const Overrides& o, const PredictArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig config = resolve(o);
  const TrainedModel model = load_model_stage(config);
  const SlotRange slots = require_test_slots(config, model.graph.time_index());
  const std::vector<std::string> ids = select_entities(model.graph, a.entities, a.entities_from);
  const std::vector<Prediction> predictions =
      stage("predict", [&] { return predict_all(model, ids, slots, parse_method(a.method)); });
  std::size_t fallback = 0;
  for (const Prediction& p : predictions) {
    fallback += p.method == PredictionMethod::persistence_fallback ? 1 : 0;
    for (const std::string& w : p.warnings) err << "warning: " << p.entity << " slot " << p.slot << ": " << w << "\n";
  }
  stage("save", [&] { write_predictions_csv(predictions, a.out); });
  out << "predictions: " << predictions.size() << "\n"
      << "fallback: " << fallback << "\n"
      << "written: " << a.out << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string out = "metrics.json";
  std::optional<std::string> predictions;
  std::optional<std::string> entities;
  std::optional<std::string> entities_from;
  std::optional<std::string> method;
};

int cmd_eval(const Overrides& o, const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig config = resolve(o);
  const TrainedModel model = load_model_stage(config);
  const EntitySet& entities = model.graph.entities();

  std::vector<PredictionRow> rows;
  if (a.predictions) {
    if (a.entities || a.entities_from) throw ValidationError("--predictions cannot be combined with entity selection");
    rows = stage("load", [&] { return read_predictions_csv(*a.predictions); });
  } else {
    const SlotRange slots = require_test_slots(config, model.graph.time_index());
    const std::vector<std::string> ids = select_entities(model.graph, a.entities, a.entities_from);
    for (const Prediction& p :
         stage("predict", [&] { return predict_all(model, ids, slots, parse_method(a.method)); })) {
      rows.push_back({p.entity, p.slot, p.predicted_value, to_string(p.method)});
    }
  }

  std::vector<EvalPair> pairs;
  std::size_t missing = 0;
  for (const PredictionRow& r : rows) {
    auto idx = entities.index_of(r.id);
    if (!idx) throw ValidationError("prediction for unknown entity '" + r.id + "'");
    auto real = entities[*idx].series.at(r.slot);
    if (!real) {
      ++missing;
      continue;
    }
    pairs.push_back({*real, r.predicted});
  }
  if (missing > 0) err << "warning: " << missing << " predictions have no observed record and were skipped\n";
  const MetricsReport report = stage("eval", [&] { return evaluate(pairs, config.acc_levels, config.raw_metrics); });
  if (report.excluded_zero_real > 0) {
    err << "warning: " << report.excluded_zero_real << " pairs with a zero real value are left out of ACC@n\n";
  }
  stage("save", [&] { save_metrics(report, std::nullopt, a.out, echo(config)); });
  for (const auto& [n, v] : report.acc_at) out << "acc@" << n << ": " << format_double(v) << "\n";
  out << "rms: " << format_double(report.rms) << "\n"
      << "rsd: " << format_double(report.rsd) << "\n"
      << "pairs: " << report.pair_count << "\n"
      << "normalized: " << (report.normalized ? "true" : "false") << "\n"
      << "written: " << a.out << "\n";
  return kExitOk;
}

struct ExplainArgs {
  std::string target;
  std::string out = "explain.json";
  std::optional<std::string> scatter;
};

int cmd_explain(const Overrides& o, const ExplainArgs& a, std::ostream& out) {
  const RunConfig config = resolve(o);
  const TrainedModel model = load_model_stage(config);
  if (!model.graph.entities().index_of(a.target)) throw ValidationError("unknown entity id '" + a.target + "'");
  const ExplainReport report = stage("explain", [&] { return explain(model, a.target); });
  stage("save", [&] {
    save_explain(report, a.out, echo(config));
    if (a.scatter) write_influence_scatter_csv(report, *a.scatter);
  });
  out << "target: " << report.target << "\n"
      << "self_weight: " << format_double(report.self_weight) << "\n"
      << "source,distance_km,influence,mean_temporal_relation\n";
  for (const ExplainEntry& e : report.ranking) {
    out << e.source << "," << format_double(e.distance_km) << "," << format_double(e.influence) << ","
        << format_double(e.mean_temporal_relation) << "\n";
  }
  return kExitOk;
}

struct MaskArgs {
  std::string target;
  std::string mask;
  std::string direction = "auto";
  std::string out = "mask.csv";
  std::string report = "mask_report.json";
};

int cmd_mask(const Overrides& o, const MaskArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig config = resolve(o);
  const TrainedModel model = load_model_stage(config);
  const SlotRange slots = require_test_slots(config, model.graph.time_index());
  const EntitySet& entities = model.graph.entities();
  if (!entities.index_of(a.target)) throw ValidationError("unknown entity id '" + a.target + "'");
  std::set<std::string> mask;
  for (const std::string& id : split_list(a.mask)) {
    if (!entities.index_of(id)) throw ValidationError("unknown entity id '" + id + "' in --mask");
    mask.insert(id);
  }

  std::vector<double> r0;
  std::vector<double> masked;
  double masked_contribution = 0.0;
  std::string csv = "day,real,R0,R_masked\n";
  stage("mask", [&] {
    for (std::size_t t = slots.begin; t < slots.end; ++t) {
      const Prediction base = predict(model, a.target, t);
      const Prediction without = predict_masked(model, a.target, t, {}, mask);
      for (const std::string& w : without.warnings) err << "warning: slot " << t << ": " << w << "\n";
      for (const Contribution& c : base.contributions) {
        if (mask.count(c.source)) masked_contribution += c.value;
      }
      r0.push_back(base.predicted_value);
      masked.push_back(without.predicted_value);
      const auto real = entities.at(a.target).series.at(t);
      csv += std::to_string(t) + "," + (real ? format_double(*real) : std::string()) + "," +
             format_double(base.predicted_value) + "," + format_double(without.predicted_value) + "\n";
    }
  });
  stage("save", [&] {
    std::ofstream file(a.out, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot write " + a.out);
    file << csv;
  });
  out << "written: " << a.out << "\n";

  TestDirection direction = TestDirection::two_sided;
  std::string hypothesis = "R0 != R_masked";
  const bool greater = a.direction == "greater" || (a.direction == "auto" && masked_contribution > 0.0);
  const bool less = a.direction == "less" || (a.direction == "auto" && masked_contribution < 0.0);
  if (greater) {
    direction = TestDirection::a_greater;
    hypothesis = "R0 > R_masked";
  } else if (less) {
    direction = TestDirection::a_less;
    hypothesis = "R0 < R_masked";
  }
  if (r0.size() < 2) {
    err << "warning: fewer than two slots; no t-test\n";
    return kExitOk;
  }
  const TTestResult result = paired_ttest(r0, masked, direction);
  stage("save", [&] { save_ttest({hypothesis, direction, result}, a.report, echo(config)); });
  out << "hypothesis: " << hypothesis << "\n"
      << "t: " << format_double(result.t) << "\n"
      << "p_value: " << format_double(result.p_value) << "\n"
      << "reject_at_0.05: " << (result.reject(0.05) ? "true" : "false") << "\n"
      << "written: " << a.report << "\n";
  return kExitOk;
}

struct BenchArgs {
  std::optional<std::string> spec;
  std::size_t repeat = 3;
  std::size_t epochs = 1;
  std::optional<std::string> out;
};

int cmd_bench(const Overrides& o, const BenchArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig config = resolve(o);
  if (a.repeat < 1) throw ValidationError("--repeat must be at least 1");
  EntitySet entities;
  if (!config.data.empty()) {
    ParsedDataset parsed = stage("ingest", [&] { return read_dataset_dir(config.data); });
    for (const std::string& w : parsed.warnings) err << "warning: " << w << "\n";
    entities = std::move(parsed.entities);
  } else {
    const SyntheticSpec spec = a.spec ? load_synthetic_spec(*a.spec) : SyntheticSpec{};
    entities = stage("synth", [&] { return generate_synthetic(spec).entities; });
  }
  config.validate(entities.time_index());
  EmbeddingConfig emb = config.embedding;
  emb.epochs_embedding = a.epochs;
  emb.epochs_influence = a.epochs;

  nlohmann::json runs = nlohmann::json::array();
  out << "stage,run,entities,edges,seconds\n";
  for (std::size_t r = 0; r < a.repeat; ++r) {
    auto start = Clock::now();
    Sstkg graph = stage("build", [&] { return build_graph(entities, config.build); });
    const double build_s = seconds_since(start);
    start = Clock::now();
    TrainedModel model = stage("train", [&] { return train(graph, emb); });
    const double train_s = seconds_since(start);
    out << "build," << r << "," << entities.size() << "," << graph.edges().size() << "," << build_s << "\n"
        << "train," << r << "," << entities.size() << "," << graph.edges().size() << "," << train_s << "\n";
    runs.push_back({{"build_seconds", build_s}, {"train_seconds", train_s}, {"edges", graph.edges().size()}});
  }
  if (a.out) {
    std::ofstream file(*a.out, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot write " + *a.out);
    file << nlohmann::json{{"entities", entities.size()},
                           {"epochs", a.epochs},
                           {"workers", config.build.workers},
                           {"runs", runs}}
                .dump(2)
         << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatio-temporal knowledge graph forecasting", "sstkg"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  Overrides o;

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with known influences");
  add_optional(synth_cmd, "--spec", synth.spec, "Synthetic spec JSON (defaults when omitted)");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  add_optional(synth_cmd, "--seed", synth.seed, "Generator seed (overrides SSTKG_SEED and the spec)");

  BuildArgs build;
  CLI::App* build_cmd = app.add_subcommand("build", "Construct the graph from a dataset directory");
  add_config_flag(build_cmd, o);
  add_optional(build_cmd, "--data", o.data, "Directory with entities.csv, records.csv, time_index.json");
  add_optional(build_cmd, "--time-index", build.time_index, "Time index JSON (default: <data>/time_index.json)");
  build_cmd->add_option("--out", build.out, "Graph output path")->capture_default_str();
  add_build_flags(build_cmd, o);

  std::string train_out = "model.json";
  CLI::App* train_cmd = app.add_subcommand("train", "Train embeddings and influences");
  add_config_flag(train_cmd, o);
  add_optional(train_cmd, "--graph", o.graph, "Graph file written by build");
  train_cmd->add_option("--out", train_out, "Model output path")->capture_default_str();
  add_train_flags(train_cmd, o);

  PredictArgs predict_args;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Predict records for selected entities and slots");
  add_config_flag(predict_cmd, o);
  add_optional(predict_cmd, "--model", o.model, "Model file written by train");
  add_selection_flags(predict_cmd, o, predict_args.entities, predict_args.entities_from, predict_args.method);
  predict_cmd->add_option("--out", predict_args.out, "Predictions CSV (id,slot,predicted,method)")
      ->capture_default_str();

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score predictions against observed records");
  add_config_flag(eval_cmd, o);
  add_optional(eval_cmd, "--model", o.model, "Model file written by train");
  add_selection_flags(eval_cmd, o, eval_args.entities, eval_args.entities_from, eval_args.method);
  add_optional(eval_cmd, "--predictions", eval_args.predictions, "Score this predictions CSV instead of predicting");
  eval_cmd->add_flag("--raw-metrics", o.raw_metrics, "RMS/RSD on raw values instead of (0, 20)-normalised ones");
  add_optional(eval_cmd, "--acc-levels", o.acc_levels, "Comma-separated n for ACC@n (default 10,15)");
  eval_cmd->add_option("--out", eval_args.out, "Metrics report path")->capture_default_str();

  ExplainArgs explain_args;
  CLI::App* explain_cmd = app.add_subcommand("explain", "Rank the influences on one entity");
  add_config_flag(explain_cmd, o);
  add_optional(explain_cmd, "--model", o.model, "Model file written by train");
  explain_cmd->add_option("--target", explain_args.target, "Entity id")->required();
  explain_cmd->add_option("--out", explain_args.out, "Explain report path")->capture_default_str();
  add_optional(explain_cmd, "--scatter", explain_args.scatter, "Also write source,distance_km,influence CSV");

  MaskArgs mask_args;
  CLI::App* mask_cmd = app.add_subcommand("mask", "Compare predictions with and without selected sources");
  add_config_flag(mask_cmd, o);
  add_optional(mask_cmd, "--model", o.model, "Model file written by train");
  mask_cmd->add_option("--target", mask_args.target, "Entity id")->required();
  mask_cmd->add_option("--mask", mask_args.mask, "Comma-separated source ids to remove (may be empty)");
  add_optional(mask_cmd, "--test-slots,--slots", o.test_slots, "Slots to compare, 'A-B' inclusive");
  mask_cmd->add_option("--direction", mask_args.direction, "t-test alternative: auto, greater, less, two-sided")
      ->check(CLI::IsMember({"auto", "greater", "less", "two-sided"}))
      ->capture_default_str();
  mask_cmd->add_option("--out", mask_args.out, "CSV with day,real,R0,R_masked")->capture_default_str();
  mask_cmd->add_option("--report", mask_args.report, "t-test report path")->capture_default_str();

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Time graph construction and training");
  add_config_flag(bench_cmd, o);
  add_optional(bench_cmd, "--data", o.data, "Dataset directory (default: synthetic world)");
  add_optional(bench_cmd, "--spec", bench_args.spec, "Synthetic spec when no dataset is given");
  bench_cmd->add_option("--repeat", bench_args.repeat, "Timed runs")->capture_default_str();
  bench_cmd->add_option("--epochs", bench_args.epochs, "Epochs per training phase")->capture_default_str();
  add_optional(bench_cmd, "--out", bench_args.out, "Write timings as JSON");
  add_build_flags(bench_cmd, o);
  add_train_flags(bench_cmd, o);

  // CLI11 consumes a vector in reverse order.
  std::vector<std::string> reversed;
  if (args.size() > 1) reversed.assign(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "sstkg: " << e.what() << "\n";
    if (!app.get_subcommands().empty()) err << "run 'sstkg " << app.get_subcommands().front()->get_name() << " --help'\n";
    return kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    if (cmd == synth_cmd) return cmd_synth(synth, out);
    if (cmd == build_cmd) return cmd_build(o, build, out, err);
    if (cmd == train_cmd) return cmd_train(o, train_out, out, err);
    if (cmd == predict_cmd) return cmd_predict(o, predict_args, out, err);
    if (cmd == eval_cmd) return cmd_eval(o, eval_args, out, err);
    if (cmd == explain_cmd) return cmd_explain(o, explain_args, out);
    if (cmd == mask_cmd) return cmd_mask(o, mask_args, out, err);
    if (cmd == bench_cmd) return cmd_bench(o, bench_args, out, err);
  } catch (const StageError& e) {
    err << "sstkg " << name << ": " << e.what() << "\n";
    return kExitRuntime;
  } catch (const ValidationError& e) {
    err << "sstkg " << name << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "sstkg " << name << ": " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sstkg::cli
