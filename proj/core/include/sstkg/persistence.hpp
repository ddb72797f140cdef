#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sstkg/dataset.hpp"
#include "sstkg/graph.hpp"
#include "sstkg/inference.hpp"
#include "sstkg/ingest.hpp"
#include "sstkg/metrics.hpp"
#include "sstkg/synthetic.hpp"
#include "sstkg/training.hpp"

namespace sstkg {

inline constexpr int kSchemaVersion = 1;

enum class ArtifactKind { dataset, graph, model, report };

const char* to_string(ArtifactKind kind);

/// Embedded in every JSON artifact under the top-level "manifest" key.
/// `config_hash` is FNV-1a over the canonical serialisation of everything
/// except the manifest. `created` comes from SOURCE_DATE_EPOCH (0 when unset)
/// so that saves stay byte-deterministic.
struct ArtifactManifest {
  ArtifactKind kind = ArtifactKind::report;
  int schema_version = kSchemaVersion;
  std::int64_t created = 0;
  std::uint64_t config_hash = 0;
};

/// Optional JSON object text echoed into the manifest as "run_config".
struct SaveOptions {
  std::string run_config_json;
};

std::uint64_t fnv1a64(const std::string& bytes);

ArtifactManifest save_dataset(const EntitySet& entities, const std::filesystem::path& path,
                              const SaveOptions& options = {});
EntitySet load_dataset(const std::filesystem::path& path);

ArtifactManifest save_graph(const Sstkg& graph, const std::filesystem::path& path,
                            const SaveOptions& options = {});
Sstkg load_graph(const std::filesystem::path& path);

ArtifactManifest save_model(const TrainedModel& model, const std::filesystem::path& path,
                            const SaveOptions& options = {});
TrainedModel load_model(const std::filesystem::path& path);

/// Reads only the manifest, validating version and hash.
ArtifactManifest read_manifest(const std::filesystem::path& path);

/// Writes entities.csv, records.csv and time_index.json into `dir`.
void write_dataset_csv(const EntitySet& entities, const std::filesystem::path& dir);
/// Reads a directory written by write_dataset_csv (or by hand). When
/// `time_index` is not given, `dir/time_index.json` must exist.
ParsedDataset read_dataset_dir(const std::filesystem::path& dir,
                               const std::optional<TimeIndex>& time_index = std::nullopt);

void save_time_index(const TimeIndex& time_index, const std::filesystem::path& path);
TimeIndex load_time_index(const std::filesystem::path& path);

SyntheticSpec parse_synthetic_spec(const std::string& json_text);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

struct TTestReport {
  std::string hypothesis;  // e.g. "R0 > R_masked"
  TestDirection direction = TestDirection::two_sided;
  TTestResult result;
};

ArtifactManifest save_metrics(const MetricsReport& metrics, const std::optional<TTestReport>& ttest,
                              const std::filesystem::path& path, const SaveOptions& options = {});

/// Report holding only a t-test result (used by masking runs).
ArtifactManifest save_ttest(const TTestReport& ttest, const std::filesystem::path& path,
                            const SaveOptions& options = {});

ArtifactManifest save_explain(const ExplainReport& report, const std::filesystem::path& path,
                              const SaveOptions& options = {});

struct PredictionRow {
  std::string id;
  std::size_t slot = 0;
  double predicted = 0.0;
  std::string method;
};

/// `id,slot,predicted,method`
void write_predictions_csv(const std::vector<Prediction>& predictions, const std::filesystem::path& path);
std::vector<PredictionRow> read_predictions_csv(const std::filesystem::path& path);

/// `source,distance_km,influence`
void write_influence_scatter_csv(const ExplainReport& report, const std::filesystem::path& path);

/// 17 significant digits (`%.17g`), enough to round-trip any double.
std::string format_double(double value);

}  // namespace sstkg
