#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sstkg/dataset.hpp"
#include "sstkg/graph.hpp"

namespace sstkg {

struct EmbeddingConfig {
  std::size_t static_dim = 16;
  std::size_t record_window = 7;
  double learning_rate = 0.01;
  std::size_t epochs_influence = 50;  // influence phase (loss on f_p2)
  std::size_t epochs_embedding = 50;  // embedding phase (loss on f_p1)
  std::size_t batch_size = 64;
  std::size_t negatives_per_sample = 4;
  double similarity_band = 0.2;
  std::uint64_t seed = 42;
  /// Multiply each neighbour's static slice by its influence inside the in embedding.
  bool scale_static_by_influence = false;

  void validate() const;
  friend bool operator==(const EmbeddingConfig&, const EmbeddingConfig&) = default;
};

/// ln(1 + x); regularises overall records into the static embedding.
double phi(double overall_record);

/// Deterministic unit-norm vector for a category token (seeded hash -> normal draws).
std::vector<double> category_vector(std::string_view category, std::size_t dim, std::uint64_t seed);

struct RecordSlice {
  std::vector<double> values;
  std::vector<bool> present;
};

/// Records of the w slots ending at t, divided by `scale`. Slots before 0 are
/// padded with the series' earliest present value; absent slots encode as 0
/// with present = false.
RecordSlice record_slice(const TimeSeries& series, std::size_t t, std::size_t window, double scale);

/// Inverse of the record-slice encoding for one entry.
inline double decode_record(double entry, double scale) { return entry * scale; }

/// Graph-wide record scale shared by every entity's record slice: the mean
/// present record per slot over `window`. Returns 1 when no record is positive.
double compute_record_scale(const EntitySet& entities, SlotRange window);

/// Per-entity trainable static slices plus the frozen record encoding parameters.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  EmbeddingSet(std::size_t entity_count, std::size_t static_dim, std::size_t record_window,
               double record_scale);

  /// static_e = category_vector(category_e) * phi(overall_record_e).
  static EmbeddingSet initialize(const Sstkg& graph, const EmbeddingConfig& config);

  std::size_t entity_count() const { return entity_count_; }
  std::size_t static_dim() const { return static_dim_; }
  std::size_t record_window() const { return record_window_; }
  std::size_t out_dim() const { return static_dim_ + record_window_; }
  double record_scale() const { return record_scale_; }

  std::span<const double> static_slice(std::size_t entity) const {
    return {statics_.data() + entity * static_dim_, static_dim_};
  }
  std::span<double> static_slice(std::size_t entity) {
    return {statics_.data() + entity * static_dim_, static_dim_};
  }

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

 private:
  std::size_t entity_count_ = 0;
  std::size_t static_dim_ = 0;
  std::size_t record_window_ = 0;
  double record_scale_ = 1.0;
  std::vector<double> statics_;
};

/// static slice (+) record slice of `entity` at slot t.
std::vector<double> out_embedding(const Sstkg& graph, const EmbeddingSet& embeddings, std::size_t entity,
                                  std::size_t t);

/// sum_j (I_j * record_j^t + static_j) over incoming edges (static term scaled by
/// I_j when scale_static_by_influence). Throws Error("no incoming influence") for
/// isolated targets.
std::vector<double> in_embedding(const Sstkg& graph, const EmbeddingSet& embeddings, std::size_t target,
                                 std::size_t t, bool scale_static_by_influence = false);

}  // namespace sstkg
