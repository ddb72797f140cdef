#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sstkg/dataset.hpp"
#include "sstkg/geo.hpp"

namespace sstkg {

/// Distances below this floor (co-located entities) are raised to it before weighting.
inline constexpr double kMinDistanceKm = 0.001;

struct BuildConfig {
  double distance_threshold_km = 2.0;
  double ridge_lambda = 1e-3;
  double prune_epsilon = 1e-4;
  /// Slots used for overall records and regression; empty means the full range.
  std::optional<SlotRange> training_window;
  std::size_t workers = 1;

  void validate(const TimeIndex& time_index) const;
  SlotRange window(const TimeIndex& time_index) const {
    return training_window.value_or(time_index.full_range());
  }

  friend bool operator==(const BuildConfig&, const BuildConfig&) = default;
};

/// Directed relation: `source` influences `target`. Endpoints index the
/// graph's EntitySet.
struct InfluenceEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  double weight = 0.0;
  double influence = 0.0;
  double distance_km = 0.0;

  friend bool operator==(const InfluenceEdge&, const InfluenceEdge&) = default;
};

class Sstkg {
 public:
  Sstkg() = default;
  /// Edges are sorted by (source, target); duplicates and dangling endpoints throw.
  Sstkg(EntitySet entities, std::vector<InfluenceEdge> edges, std::vector<double> self_weight,
        BuildConfig config);

  const EntitySet& entities() const { return entities_; }
  const TimeIndex& time_index() const { return entities_.time_index(); }
  const BuildConfig& config() const { return config_; }

  std::span<const InfluenceEdge> edges() const { return edges_; }
  /// Indices into edges() of the edges pointing at `target`, ascending by source.
  std::span<const std::size_t> incoming(std::size_t target) const { return incoming_[target]; }
  std::optional<std::size_t> find_edge(std::size_t source, std::size_t target) const;
  bool connected(std::size_t a, std::size_t b) const {
    return find_edge(a, b).has_value() || find_edge(b, a).has_value();
  }

  double self_weight(std::size_t entity) const { return self_weight_[entity]; }
  std::span<const double> self_weights() const { return self_weight_; }
  bool isolated(std::size_t entity) const { return incoming_[entity].empty(); }

  void set_influence(std::size_t edge, double influence) { edges_[edge].influence = influence; }

  friend bool operator==(const Sstkg& a, const Sstkg& b) {
    return a.entities_ == b.entities_ && a.edges_ == b.edges_ && a.self_weight_ == b.self_weight_ &&
           a.config_ == b.config_;
  }

 private:
  EntitySet entities_;
  std::vector<InfluenceEdge> edges_;
  std::vector<double> self_weight_;
  BuildConfig config_;
  std::vector<std::vector<std::size_t>> incoming_;
};

/// Relation weight of a neighbour on a target:
///   W = overall_i / overall_0 * ln(1 + sum(neighbourhood distances) / (n * distance_i)).
/// Throws ValidationError("co-located entities") for a non-positive distance.
double compute_weight(double overall_source, double overall_target, double distance_km,
                      std::span<const double> neighborhood_distances_km);

struct SelfWeights {
  std::vector<double> p;
  std::vector<bool> isolated;
};

/// p_e = (weight into e) / (total weight). Throws "degenerate graph" when the
/// total is zero.
SelfWeights compute_self_weights(std::size_t entity_count, std::span<const InfluenceEdge> edges);

struct RegressionInput {
  const TimeSeries* target = nullptr;
  std::vector<const TimeSeries*> neighbors;
  std::vector<double> weights;  // W per neighbour
  double p = 0.0;
  SlotRange window;
  double ridge_lambda = 1e-3;
};

/// Fits p * Record_0(t) ~= sum_i alpha_i W_i Record_i(t) by ridge least squares
/// over slots where every series is present, and returns I_i = alpha_i W_i.
/// Columns are scaled to unit root-mean-square before solving; the ridge acts
/// on the scaled coefficients.
std::vector<double> fit_influences(const RegressionInput& input);

/// Neighbourhood filtering, weights, self-weights, regression, then pruning
/// of |I| < prune_epsilon. Self-weights are not recomputed after pruning.
Sstkg build_graph(EntitySet entities, const BuildConfig& config);

}  // namespace sstkg
