#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sstkg/error.hpp"

namespace sstkg::cli {

using nlohmann::json;

namespace {

std::size_t parse_count(const std::string& text, const std::string& what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError("bad " + what + " '" + text + "'");
  }
  return v;
}

}  // namespace

SlotRange parse_slot_range(const std::string& text) {
  const auto dash = text.find('-');
  if (dash == std::string::npos) {
    const std::size_t a = parse_count(text, "slot range");
    return {a, a + 1};
  }
  const std::size_t a = parse_count(text.substr(0, dash), "slot range");
  const std::size_t b = parse_count(text.substr(dash + 1), "slot range");
  if (b < a) throw ValidationError("slot range '" + text + "' ends before it starts");
  return {a, b + 1};
}

std::string format_slot_range(SlotRange range) {
  if (range.empty()) return "";
  return std::to_string(range.begin) + "-" + std::to_string(range.end - 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void RunConfig::validate(const std::optional<TimeIndex>& time_index) const {
  embedding.validate();
  if (build.workers < 1) throw ValidationError("workers must be at least 1");
  if (!(build.distance_threshold_km > 0.0)) throw ValidationError("distance_threshold_km must be positive");
  if (!(build.ridge_lambda >= 0.0)) throw ValidationError("ridge_lambda must be >= 0");
  if (!(build.prune_epsilon >= 0.0)) throw ValidationError("prune_epsilon must be >= 0");
  if (acc_levels.empty()) throw ValidationError("acc_levels must not be empty");
  for (int n : acc_levels) {
    if (n <= 0) throw ValidationError("acc_levels entries must be positive");
  }
  if (time_index) {
    build.validate(*time_index);
    if (test_slots && (test_slots->empty() || test_slots->end > time_index->slot_count)) {
      throw ValidationError("test_slots outside the time index");
    }
  }
}

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(origin + ": not valid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw ValidationError(origin + ": expected a JSON object");
  RunConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    try {
      if (key == "distance_threshold_km") {
        c.build.distance_threshold_km = v.get<double>();
      } else if (key == "ridge_lambda") {
        c.build.ridge_lambda = v.get<double>();
      } else if (key == "prune_epsilon") {
        c.build.prune_epsilon = v.get<double>();
      } else if (key == "train_slots") {
        if (!v.is_null()) c.build.training_window = parse_slot_range(v.get<std::string>());
      } else if (key == "test_slots") {
        if (!v.is_null()) c.test_slots = parse_slot_range(v.get<std::string>());
      } else if (key == "workers") {
        c.build.workers = v.get<std::size_t>();
      } else if (key == "static_dim") {
        c.embedding.static_dim = v.get<std::size_t>();
      } else if (key == "record_window") {
        c.embedding.record_window = v.get<std::size_t>();
      } else if (key == "learning_rate") {
        c.embedding.learning_rate = v.get<double>();
      } else if (key == "epochs_influence") {
        c.embedding.epochs_influence = v.get<std::size_t>();
      } else if (key == "epochs_embedding") {
        c.embedding.epochs_embedding = v.get<std::size_t>();
      } else if (key == "batch_size") {
        c.embedding.batch_size = v.get<std::size_t>();
      } else if (key == "negatives_per_sample") {
        c.embedding.negatives_per_sample = v.get<std::size_t>();
      } else if (key == "similarity_band") {
        c.embedding.similarity_band = v.get<double>();
      } else if (key == "scale_static_by_influence") {
        c.embedding.scale_static_by_influence = v.get<bool>();
      } else if (key == "seed") {
        c.embedding.seed = v.get<std::uint64_t>();
      } else if (key == "raw_metrics") {
        c.raw_metrics = v.get<bool>();
      } else if (key == "acc_levels") {
        c.acc_levels = v.get<std::vector<int>>();
      } else if (key == "data") {
        c.data = v.get<std::string>();
      } else if (key == "graph") {
        c.graph = v.get<std::string>();
      } else if (key == "model") {
        c.model = v.get<std::string>();
      } else {
        throw ValidationError(origin + ": unknown key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw ValidationError(origin + ": key '" + key + "': " + e.what());
    } catch (const ValidationError& e) {
      if (std::string(e.what()).rfind(origin, 0) == 0) throw;
      throw ValidationError(origin + ": key '" + key + "': " + e.what());
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.string());
}

std::string run_config_to_json(const RunConfig& c) {
  const BuildConfig& b = c.build;
  const EmbeddingConfig& e = c.embedding;
  json j = {{"distance_threshold_km", b.distance_threshold_km},
            {"ridge_lambda", b.ridge_lambda},
            {"prune_epsilon", b.prune_epsilon},
            {"train_slots", b.training_window ? json(format_slot_range(*b.training_window)) : json(nullptr)},
            {"test_slots", c.test_slots ? json(format_slot_range(*c.test_slots)) : json(nullptr)},
            {"workers", b.workers},
            {"static_dim", e.static_dim},
            {"record_window", e.record_window},
            {"learning_rate", e.learning_rate},
            {"epochs_influence", e.epochs_influence},
            {"epochs_embedding", e.epochs_embedding},
            {"batch_size", e.batch_size},
            {"negatives_per_sample", e.negatives_per_sample},
            {"similarity_band", e.similarity_band},
            {"scale_static_by_influence", e.scale_static_by_influence},
            {"seed", e.seed},
            {"raw_metrics", c.raw_metrics},
            {"acc_levels", c.acc_levels},
            {"data", c.data},
            {"graph", c.graph},
            {"model", c.model}};
  return j.dump();
}

}  // namespace sstkg::cli
