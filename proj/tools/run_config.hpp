#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sstkg/dataset.hpp"
#include "sstkg/embedding.hpp"
#include "sstkg/graph.hpp"

namespace sstkg::cli {

/// Settings shared by every command, read from `sstkg.json` and overridden
/// by SSTKG_SEED and then by command-line flags.
struct RunConfig {
  BuildConfig build;
  EmbeddingConfig embedding;
  std::optional<SlotRange> test_slots;
  bool raw_metrics = false;
  std::vector<int> acc_levels{10, 15};

  std::string data;
  std::string graph;
  std::string model;

  void validate(const std::optional<TimeIndex>& time_index = std::nullopt) const;
};

/// Parses a RunConfig object. Unknown keys and wrong types raise ValidationError.
RunConfig parse_run_config(const std::string& json_text, const std::string& origin = "config");
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON with every field, for echoing into output manifests.
std::string run_config_to_json(const RunConfig& config);

/// "A-B" (inclusive) or "A" -> [A, B + 1).
SlotRange parse_slot_range(const std::string& text);
std::string format_slot_range(SlotRange range);

std::vector<std::string> split_list(const std::string& text);

}  // namespace sstkg::cli
