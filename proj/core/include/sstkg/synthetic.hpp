#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sstkg/dataset.hpp"

namespace sstkg {

struct BoundingBox {
  GeoPoint min;
  GeoPoint max;
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct SyntheticSpec {
  std::size_t entity_count = 200;
  BoundingBox bounding_box{{40.00, -83.00}, {40.25, -82.75}};
  std::vector<std::string> category_pool{"722511", "445110", "447110", "448140", "812112"};
  std::size_t slot_count = 60;
  double influence_density = 0.1;
  double noise_sigma = 0.0;
  std::uint64_t seed = 7;
  double distance_threshold_km = 2.0;

  void validate() const;
  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

struct GroundTruthEdge {
  std::string source;
  std::string target;
  double influence = 0.0;
  friend bool operator==(const GroundTruthEdge&, const GroundTruthEdge&) = default;
};

/// Influences I* and self-weights p* that generated the target series:
/// p*[t] * Record_t = sum_i I*[(i, t)] * Record_i (+ noise).
struct GroundTruth {
  std::vector<std::string> targets;     // sorted
  std::vector<GroundTruthEdge> edges;   // sorted by (source, target)
  std::map<std::string, double> self_weight;
  double distance_threshold_km = 0.0;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct SyntheticWorld {
  EntitySet entities;
  GroundTruth truth;
};

/// Draws a world of sinusoidal source entities and targets whose series are
/// exact linear combinations of nearby sources. Targets are pairwise farther
/// apart than the distance threshold, so every target neighbourhood contains
/// sources only. p* is evaluated with the weight/self-weight formulas over the
/// full slot range, so a full-window build recovers I* exactly when noise is 0.
SyntheticWorld generate_synthetic(const SyntheticSpec& spec);

}  // namespace sstkg
