#include "sstkg/persistence.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "sstkg/error.hpp"

namespace sstkg {

using nlohmann::json;

const char* to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::dataset:
      return "dataset";
    case ArtifactKind::graph:
      return "graph";
    case ArtifactKind::model:
      return "model";
    case ArtifactKind::report:
      return "report";
  }
  return "unknown";
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

// nlohmann's own dump prints the shortest round-trip form; artifacts use a
// fixed 17-digit form instead, so the emitter is done by hand. Object keys
// come out sorted because nlohmann::json stores objects in a std::map.
void emit(const json& value, std::string& out, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (value.type()) {
    case json::value_t::object: {
      if (value.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        emit(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (value.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const json& item : value) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        emit(item, out, indent, depth + 1);
      }
      newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double d = value.get<double>();
      if (!std::isfinite(d)) throw Error("cannot serialise non-finite number");
      out += format_double(d);
      return;
    }
    default:
      out += value.dump();
  }
}

std::string canonical_dump(const json& value, int indent = -1) {
  std::string out;
  emit(value, out, indent, 0);
  return out;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::int64_t created_timestamp() {
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && *end == '\0') return v;
  }
  return 0;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ArtifactManifest write_artifact(ArtifactKind kind, const json& payload, const std::filesystem::path& path,
                                const SaveOptions& options) {
  ArtifactManifest manifest;
  manifest.kind = kind;
  manifest.created = created_timestamp();
  manifest.config_hash = fnv1a64(canonical_dump(payload));

  json m = {{"artifact_kind", to_string(kind)},
            {"schema_version", manifest.schema_version},
            {"created", manifest.created},
            {"config_hash", hash_hex(manifest.config_hash)}};
  if (!options.run_config_json.empty()) {
    try {
      m["run_config"] = json::parse(options.run_config_json);
    } catch (const json::exception& e) {
      throw Error(std::string("run config is not valid JSON: ") + e.what());
    }
  }
  json doc = payload;
  doc["manifest"] = std::move(m);
  write_text(path, canonical_dump(doc, 2) + "\n");
  return manifest;
}

struct LoadedArtifact {
  ArtifactManifest manifest;
  json payload;
};

LoadedArtifact read_artifact(const std::filesystem::path& path, std::optional<ArtifactKind> expected) {
  const std::string text = read_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorruptionError(path.string() + ": malformed or truncated artifact (" + e.what() + ")");
  }
  if (!doc.is_object() || !doc.contains("manifest") || !doc["manifest"].is_object()) {
    throw CorruptionError(path.string() + ": missing manifest");
  }
  LoadedArtifact out;
  try {
    const json& m = doc["manifest"];
    const int version = m.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      throw VersionError(path.string() + ": artifact schema version " + std::to_string(version) +
                         ", reader supports version " + std::to_string(kSchemaVersion));
    }
    const std::string kind = m.at("artifact_kind").get<std::string>();
    bool matched = false;
    for (ArtifactKind k : {ArtifactKind::dataset, ArtifactKind::graph, ArtifactKind::model, ArtifactKind::report}) {
      if (kind == to_string(k)) {
        out.manifest.kind = k;
        matched = true;
      }
    }
    if (!matched) throw CorruptionError(path.string() + ": unknown artifact kind '" + kind + "'");
    out.manifest.schema_version = version;
    out.manifest.created = m.at("created").get<std::int64_t>();
    const std::string stored = m.at("config_hash").get<std::string>();
    doc.erase("manifest");
    out.manifest.config_hash = fnv1a64(canonical_dump(doc));
    if (stored != hash_hex(out.manifest.config_hash)) {
      throw CorruptionError(path.string() + ": content hash mismatch (stored " + stored + ", computed " +
                            hash_hex(out.manifest.config_hash) + ")");
    }
  } catch (const json::exception& e) {
    throw CorruptionError(path.string() + ": bad manifest (" + e.what() + ")");
  }
  if (expected && out.manifest.kind != *expected) {
    throw ValidationError(path.string() + ": expected a " + to_string(*expected) + " artifact, found " +
                          to_string(out.manifest.kind));
  }
  out.payload = std::move(doc);
  return out;
}

// Wraps payload decoding so that structural problems surface as corruption.
template <typename F>
auto decode(const std::filesystem::path& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw CorruptionError(path.string() + ": malformed artifact payload (" + e.what() + ")");
  } catch (const ValidationError& e) {
    throw CorruptionError(path.string() + ": invalid artifact payload (" + e.what() + ")");
  }
}

json time_index_to_json(const TimeIndex& t) {
  return {{"start", t.start}, {"slot_length", t.slot_length}, {"slot_count", t.slot_count}};
}

TimeIndex time_index_from_json(const json& j) {
  TimeIndex t;
  t.start = j.at("start").get<std::int64_t>();
  t.slot_length = j.at("slot_length").get<std::int64_t>();
  t.slot_count = j.at("slot_count").get<std::size_t>();
  t.validate();
  return t;
}

json range_to_json(const SlotRange& r) { return json::array({r.begin, r.end}); }

SlotRange range_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("slot range must be [begin, end]");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

json entities_to_json(const EntitySet& set) {
  json list = json::array();
  for (const Entity& e : set.entities()) {
    json records = json::array();
    for (std::size_t t = 0; t < e.series.size(); ++t) {
      auto v = e.series.at(t);
      records.push_back(v ? json(*v) : json(nullptr));
    }
    list.push_back({{"id", e.id},
                    {"lat", e.location.latitude},
                    {"lon", e.location.longitude},
                    {"category", e.category},
                    {"records", std::move(records)}});
  }
  return {{"time_index", time_index_to_json(set.time_index())},
          {"overall_window", range_to_json(set.overall_window())},
          {"entities", std::move(list)}};
}

EntitySet entities_from_json(const json& j) {
  const TimeIndex ti = time_index_from_json(j.at("time_index"));
  std::vector<Entity> entities;
  for (const json& item : j.at("entities")) {
    Entity e;
    e.id = item.at("id").get<std::string>();
    e.location = {item.at("lat").get<double>(), item.at("lon").get<double>()};
    e.category = item.at("category").get<std::string>();
    const json& records = item.at("records");
    if (records.size() != ti.slot_count) {
      throw ValidationError("entity '" + e.id + "' has " + std::to_string(records.size()) + " records for " +
                            std::to_string(ti.slot_count) + " slots");
    }
    e.series = TimeSeries(ti.slot_count);
    for (std::size_t t = 0; t < records.size(); ++t) {
      if (!records[t].is_null()) e.series.set(t, records[t].get<double>());
    }
    entities.push_back(std::move(e));
  }
  EntitySet set(ti, std::move(entities));
  set.recompute_overall(range_from_json(j.at("overall_window")));
  return set;
}

json build_config_to_json(const BuildConfig& c) {
  return {{"distance_threshold_km", c.distance_threshold_km},
          {"ridge_lambda", c.ridge_lambda},
          {"prune_epsilon", c.prune_epsilon},
          {"training_window", c.training_window ? range_to_json(*c.training_window) : json(nullptr)},
          {"workers", c.workers}};
}

BuildConfig build_config_from_json(const json& j) {
  BuildConfig c;
  c.distance_threshold_km = j.at("distance_threshold_km").get<double>();
  c.ridge_lambda = j.at("ridge_lambda").get<double>();
  c.prune_epsilon = j.at("prune_epsilon").get<double>();
  if (!j.at("training_window").is_null()) c.training_window = range_from_json(j.at("training_window"));
  c.workers = j.at("workers").get<std::size_t>();
  return c;
}

json graph_to_json(const Sstkg& g) {
  const EntitySet& set = g.entities();
  json edges = json::array();
  for (const InfluenceEdge& e : g.edges()) {
    edges.push_back({{"source", set[e.source].id},
                     {"target", set[e.target].id},
                     {"weight", e.weight},
                     {"influence", e.influence},
                     {"distance_km", e.distance_km}});
  }
  json p = json::array();
  for (double v : g.self_weights()) p.push_back(v);
  return {{"dataset", entities_to_json(set)},
          {"build_config", build_config_to_json(g.config())},
          {"edges", std::move(edges)},
          {"self_weight", std::move(p)}};
}

Sstkg graph_from_json(const json& j) {
  EntitySet set = entities_from_json(j.at("dataset"));
  BuildConfig config = build_config_from_json(j.at("build_config"));
  std::vector<InfluenceEdge> edges;
  for (const json& item : j.at("edges")) {
    const std::string src = item.at("source").get<std::string>();
    const std::string dst = item.at("target").get<std::string>();
    auto s = set.index_of(src);
    auto t = set.index_of(dst);
    if (!s || !t) throw ValidationError("edge " + src + " -> " + dst + " references an unknown entity");
    edges.push_back({*s, *t, item.at("weight").get<double>(), item.at("influence").get<double>(),
                     item.at("distance_km").get<double>()});
  }
  std::vector<double> p = j.at("self_weight").get<std::vector<double>>();
  if (p.size() != set.size()) throw ValidationError("self-weight count does not match entity count");
  return Sstkg(std::move(set), std::move(edges), std::move(p), std::move(config));
}

json embedding_config_to_json(const EmbeddingConfig& c) {
  return {{"static_dim", c.static_dim},
          {"record_window", c.record_window},
          {"learning_rate", c.learning_rate},
          {"epochs_influence", c.epochs_influence},
          {"epochs_embedding", c.epochs_embedding},
          {"batch_size", c.batch_size},
          {"negatives_per_sample", c.negatives_per_sample},
          {"similarity_band", c.similarity_band},
          {"seed", c.seed},
          {"scale_static_by_influence", c.scale_static_by_influence}};
}

EmbeddingConfig embedding_config_from_json(const json& j) {
  EmbeddingConfig c;
  c.static_dim = j.at("static_dim").get<std::size_t>();
  c.record_window = j.at("record_window").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs_influence = j.at("epochs_influence").get<std::size_t>();
  c.epochs_embedding = j.at("epochs_embedding").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.negatives_per_sample = j.at("negatives_per_sample").get<std::size_t>();
  c.similarity_band = j.at("similarity_band").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.scale_static_by_influence = j.at("scale_static_by_influence").get<bool>();
  c.validate();
  return c;
}

}  // namespace

ArtifactManifest save_dataset(const EntitySet& entities, const std::filesystem::path& path,
                              const SaveOptions& options) {
  return write_artifact(ArtifactKind::dataset, entities_to_json(entities), path, options);
}

EntitySet load_dataset(const std::filesystem::path& path) {
  LoadedArtifact a = read_artifact(path, ArtifactKind::dataset);
  return decode(path, [&] { return entities_from_json(a.payload); });
}

ArtifactManifest save_graph(const Sstkg& graph, const std::filesystem::path& path, const SaveOptions& options) {
  return write_artifact(ArtifactKind::graph, graph_to_json(graph), path, options);
}

Sstkg load_graph(const std::filesystem::path& path) {
  LoadedArtifact a = read_artifact(path, ArtifactKind::graph);
  return decode(path, [&] { return graph_from_json(a.payload); });
}

ArtifactManifest save_model(const TrainedModel& model, const std::filesystem::path& path,
                            const SaveOptions& options) {
  const EmbeddingSet& emb = model.embeddings;
  json statics = json::array();
  for (std::size_t e = 0; e < emb.entity_count(); ++e) {
    json row = json::array();
    for (double v : emb.static_slice(e)) row.push_back(v);
    statics.push_back(std::move(row));
  }
  json payload = {{"graph", graph_to_json(model.graph)},
                  {"embedding_config", embedding_config_to_json(model.config)},
                  {"embeddings",
                   {{"static_dim", emb.static_dim()},
                    {"record_window", emb.record_window()},
                    {"record_scale", emb.record_scale()},
                    {"record_encoding", "record / record_scale"},
                    {"record_padding", "earliest_present"},
                    {"statics", std::move(statics)}}},
                  {"loss_trace", {{"embedding", model.trace.embedding}, {"influence", model.trace.influence}}}};
  return write_artifact(ArtifactKind::model, payload, path, options);
}

TrainedModel load_model(const std::filesystem::path& path) {
  LoadedArtifact a = read_artifact(path, ArtifactKind::model);
  return decode(path, [&] {
    const json& j = a.payload;
    TrainedModel model;
    model.graph = graph_from_json(j.at("graph"));
    model.config = embedding_config_from_json(j.at("embedding_config"));
    const json& e = j.at("embeddings");
    if (e.value("record_padding", std::string("earliest_present")) != "earliest_present") {
      throw ValidationError("unsupported record padding '" + e.at("record_padding").get<std::string>() + "'");
    }
    const json& statics = e.at("statics");
    if (statics.size() != model.graph.entities().size()) {
      throw ValidationError("static embedding count does not match entity count");
    }
    model.embeddings = EmbeddingSet(statics.size(), e.at("static_dim").get<std::size_t>(),
                                    e.at("record_window").get<std::size_t>(), e.at("record_scale").get<double>());
    for (std::size_t i = 0; i < statics.size(); ++i) {
      std::vector<double> row = statics[i].get<std::vector<double>>();
      auto slice = model.embeddings.static_slice(i);
      if (row.size() != slice.size()) throw ValidationError("static embedding has the wrong dimension");
      std::copy(row.begin(), row.end(), slice.begin());
    }
    model.trace.embedding = j.at("loss_trace").at("embedding").get<std::vector<double>>();
    model.trace.influence = j.at("loss_trace").at("influence").get<std::vector<double>>();
    return model;
  });
}

ArtifactManifest read_manifest(const std::filesystem::path& path) {
  return read_artifact(path, std::nullopt).manifest;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void write_dataset_csv(const EntitySet& entities, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string ent = "id,lat,lon,category\n";
  std::string rec = "id,slot,value\n";
  for (const Entity& e : entities.entities()) {
    ent += csv_field(e.id) + "," + format_double(e.location.latitude) + "," +
           format_double(e.location.longitude) + "," + csv_field(e.category) + "\n";
    for (std::size_t t = 0; t < e.series.size(); ++t) {
      if (auto v = e.series.at(t)) rec += csv_field(e.id) + "," + std::to_string(t) + "," + format_double(*v) + "\n";
    }
  }
  write_text(dir / "entities.csv", ent);
  write_text(dir / "records.csv", rec);
  save_time_index(entities.time_index(), dir / "time_index.json");
}

ParsedDataset read_dataset_dir(const std::filesystem::path& dir, const std::optional<TimeIndex>& time_index) {
  const TimeIndex ti = time_index ? *time_index : load_time_index(dir / "time_index.json");
  return parse_dataset(dir / "entities.csv", dir / "records.csv", ti);
}

void save_time_index(const TimeIndex& time_index, const std::filesystem::path& path) {
  write_text(path, canonical_dump(time_index_to_json(time_index), 2) + "\n");
}

TimeIndex load_time_index(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return time_index_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": bad time index (" + e.what() + ")");
  }
}

SyntheticSpec parse_synthetic_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("synthetic spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("synthetic spec must be a JSON object");
  SyntheticSpec spec;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const json& v = it.value();
      if (key == "entity_count") {
        spec.entity_count = v.get<std::size_t>();
      } else if (key == "bounding_box") {
        for (auto b = v.begin(); b != v.end(); ++b) {
          if (b.key() != "min" && b.key() != "max") throw ValidationError("unknown bounding_box key '" + b.key() + "'");
          for (auto c = b.value().begin(); c != b.value().end(); ++c) {
            if (c.key() != "lat" && c.key() != "lon") throw ValidationError("unknown coordinate key '" + c.key() + "'");
          }
        }
        spec.bounding_box.min = {v.at("min").at("lat").get<double>(), v.at("min").at("lon").get<double>()};
        spec.bounding_box.max = {v.at("max").at("lat").get<double>(), v.at("max").at("lon").get<double>()};
      } else if (key == "category_pool") {
        spec.category_pool = v.get<std::vector<std::string>>();
      } else if (key == "slot_count") {
        spec.slot_count = v.get<std::size_t>();
      } else if (key == "influence_density") {
        spec.influence_density = v.get<double>();
      } else if (key == "noise_sigma") {
        spec.noise_sigma = v.get<double>();
      } else if (key == "seed") {
        spec.seed = v.get<std::uint64_t>();
      } else if (key == "distance_threshold_km") {
        spec.distance_threshold_km = v.get<double>();
      } else {
        throw ValidationError("unknown synthetic spec key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  return parse_synthetic_spec(read_text(path));
}

std::string synthetic_spec_to_json(const SyntheticSpec& spec) {
  const BoundingBox& b = spec.bounding_box;
  json j = {{"entity_count", spec.entity_count},
            {"bounding_box",
             {{"min", {{"lat", b.min.latitude}, {"lon", b.min.longitude}}},
              {"max", {{"lat", b.max.latitude}, {"lon", b.max.longitude}}}}},
            {"category_pool", spec.category_pool},
            {"slot_count", spec.slot_count},
            {"influence_density", spec.influence_density},
            {"noise_sigma", spec.noise_sigma},
            {"seed", spec.seed},
            {"distance_threshold_km", spec.distance_threshold_km}};
  return canonical_dump(j, 2);
}

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  json edges = json::array();
  for (const GroundTruthEdge& e : truth.edges) {
    edges.push_back({{"source", e.source}, {"target", e.target}, {"influence", e.influence}});
  }
  json p = json::object();
  for (const auto& [id, v] : truth.self_weight) p[id] = v;
  json j = {{"targets", truth.targets},
            {"edges", std::move(edges)},
            {"self_weight", std::move(p)},
            {"distance_threshold_km", truth.distance_threshold_km}};
  write_text(path, canonical_dump(j, 2) + "\n");
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    const json j = json::parse(text);
    GroundTruth truth;
    truth.targets = j.at("targets").get<std::vector<std::string>>();
    for (const json& e : j.at("edges")) {
      truth.edges.push_back(
          {e.at("source").get<std::string>(), e.at("target").get<std::string>(), e.at("influence").get<double>()});
    }
    for (auto it = j.at("self_weight").begin(); it != j.at("self_weight").end(); ++it) {
      truth.self_weight[it.key()] = it.value().get<double>();
    }
    truth.distance_threshold_km = j.at("distance_threshold_km").get<double>();
    return truth;
  } catch (const json::exception& e) {
    throw CorruptionError(path.string() + ": bad ground truth (" + e.what() + ")");
  }
}

namespace {

json ttest_to_json(const TTestReport& ttest) {
  const TTestResult& r = ttest.result;
  const char* dir = ttest.direction == TestDirection::a_greater ? "greater"
                    : ttest.direction == TestDirection::a_less  ? "less"
                                                                : "two_sided";
  return {{"hypothesis", ttest.hypothesis},
          {"direction", dir},
          {"t", std::isfinite(r.t) ? json(r.t) : json(r.t > 0 ? "inf" : "-inf")},
          {"p_value", r.p_value},
          {"df", r.df},
          {"mean_difference", r.mean_difference},
          {"zero_variance", r.zero_variance},
          {"reject_at_0.05", r.reject(0.05)}};
}

}  // namespace

ArtifactManifest save_ttest(const TTestReport& ttest, const std::filesystem::path& path,
                            const SaveOptions& options) {
  return write_artifact(ArtifactKind::report, json{{"ttest", ttest_to_json(ttest)}}, path, options);
}

ArtifactManifest save_metrics(const MetricsReport& metrics, const std::optional<TTestReport>& ttest,
                              const std::filesystem::path& path, const SaveOptions& options) {
  json acc = json::object();
  for (const auto& [n, v] : metrics.acc_at) acc[std::to_string(n)] = v;
  json payload = {{"metrics",
                   {{"acc_at", std::move(acc)},
                    {"rms", metrics.rms},
                    {"rsd", metrics.rsd},
                    {"pair_count", metrics.pair_count},
                    {"excluded_zero_real", metrics.excluded_zero_real},
                    {"normalized", metrics.normalized}}}};
  if (ttest) payload["ttest"] = ttest_to_json(*ttest);
  return write_artifact(ArtifactKind::report, payload, path, options);
}

ArtifactManifest save_explain(const ExplainReport& report, const std::filesystem::path& path,
                              const SaveOptions& options) {
  json ranking = json::array();
  for (const ExplainEntry& e : report.ranking) {
    ranking.push_back({{"source", e.source},
                       {"distance_km", e.distance_km},
                       {"weight", e.weight},
                       {"influence", e.influence},
                       {"mean_temporal_relation", e.mean_temporal_relation}});
  }
  json payload = {{"explain", {{"target", report.target}, {"self_weight", report.self_weight}, {"ranking", ranking}}}};
  return write_artifact(ArtifactKind::report, payload, path, options);
}

void write_predictions_csv(const std::vector<Prediction>& predictions, const std::filesystem::path& path) {
  std::string out = "id,slot,predicted,method\n";
  for (const Prediction& p : predictions) {
    out += csv_field(p.entity) + "," + std::to_string(p.slot) + "," + format_double(p.predicted_value) + "," +
           to_string(p.method) + "\n";
  }
  write_text(path, out);
}

std::vector<PredictionRow> read_predictions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<PredictionRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "id,slot,predicted,method") {
        throw ValidationError(path.string() + ":1: expected header 'id,slot,predicted,method'");
      }
      continue;
    }
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 4) throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
    PredictionRow row;
    row.id = f[0];
    try {
      std::size_t pos = 0;
      row.slot = std::stoul(f[1], &pos);
      if (pos != f[1].size()) throw std::invalid_argument("slot");
      row.predicted = std::stod(f[2], &pos);
      if (pos != f[2].size()) throw std::invalid_argument("predicted");
    } catch (const std::exception&) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": bad slot or predicted value");
    }
    row.method = f[3];
    rows.push_back(std::move(row));
  }
  if (line_no == 0) throw ValidationError(path.string() + ": empty predictions file");
  return rows;
}

void write_influence_scatter_csv(const ExplainReport& report, const std::filesystem::path& path) {
  std::string out = "source,distance_km,influence\n";
  for (const ExplainEntry& e : report.ranking) {
    out += csv_field(e.source) + "," + format_double(e.distance_km) + "," + format_double(e.influence) + "\n";
  }
  write_text(path, out);
}

}  // namespace sstkg
