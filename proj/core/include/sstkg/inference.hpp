#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sstkg/training.hpp"

namespace sstkg {

enum class PredictionMethod { embedding_decode, influence_direct, persistence_fallback };

const char* to_string(PredictionMethod method);

struct Contribution {
  std::string source;
  double value = 0.0;  // I_i * Record_i(t)
};

struct Prediction {
  std::string entity;
  std::size_t slot = 0;
  double predicted_value = 0.0;
  /// Value before clipping negatives to zero.
  double unclipped_value = 0.0;
  bool clipped = false;
  PredictionMethod method = PredictionMethod::embedding_decode;
  std::vector<Contribution> contributions;
  std::vector<std::string> warnings;
};

/// Observed neighbour records at the prediction slot, keyed by entity id.
/// Neighbours missing from the map fall back to the dataset's record at t.
using NeighborRecords = std::map<std::string, double>;

/// Builds the target's in embedding from its sources' out embeddings at t,
/// divides the record slice by p, and decodes the final entry. Isolated
/// targets return their last observed value before t.
Prediction predict(const TrainedModel& model, const std::string& target, std::size_t slot,
                   const NeighborRecords& neighbor_records = {});

/// Record_0(t) = (1/p) sum_i I_i Record_i(t), evaluated directly.
Prediction predict_influence_direct(const TrainedModel& model, const std::string& target, std::size_t slot,
                                    const NeighborRecords& neighbor_records = {});

/// As predict, with the masked sources' terms dropped and p kept as is.
Prediction predict_masked(const TrainedModel& model, const std::string& target, std::size_t slot,
                          const NeighborRecords& neighbor_records, const std::set<std::string>& mask);

/// r = I_{j,i} * phi(Record_j(t)) / phi(overall_j). Throws when there is no edge
/// j -> i or the record at t is absent.
double temporal_relation(const TrainedModel& model, const std::string& source, const std::string& target,
                         std::size_t slot);

struct ExplainEntry {
  std::string source;
  double distance_km = 0.0;
  double weight = 0.0;
  double influence = 0.0;
  double mean_temporal_relation = 0.0;
};

struct ExplainReport {
  std::string target;
  double self_weight = 0.0;
  std::vector<ExplainEntry> ranking;  // |influence| descending, ties by source id
};

/// Ranks incoming edges; the mean temporal relation is taken over the present
/// slots of the build's training window.
ExplainReport explain(const TrainedModel& model, const std::string& target);

}  // namespace sstkg
