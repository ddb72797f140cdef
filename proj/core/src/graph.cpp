#include "sstkg/graph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "sstkg/error.hpp"

namespace sstkg {

void BuildConfig::validate(const TimeIndex& time_index) const {
  if (!(distance_threshold_km > 0.0) || !std::isfinite(distance_threshold_km)) {
    throw ValidationError("distance_threshold_km must be positive");
  }
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) throw ValidationError("ridge_lambda must be >= 0");
  if (!(prune_epsilon >= 0.0)) throw ValidationError("prune_epsilon must be >= 0");
  if (workers < 1) throw ValidationError("workers must be >= 1");
  const SlotRange w = window(time_index);
  if (w.empty() || w.end > time_index.slot_count) {
    throw ValidationError("training window [" + std::to_string(w.begin) + ", " + std::to_string(w.end) +
                          ") must be non-empty and inside " + std::to_string(time_index.slot_count) + " slots");
  }
}

Sstkg::Sstkg(EntitySet entities, std::vector<InfluenceEdge> edges, std::vector<double> self_weight,
             BuildConfig config)
    : entities_(std::move(entities)),
      edges_(std::move(edges)),
      self_weight_(std::move(self_weight)),
      config_(std::move(config)) {
  const std::size_t n = entities_.size();
  if (self_weight_.size() != n) throw ValidationError("self_weight size does not match entity count");
  std::sort(edges_.begin(), edges_.end(), [](const InfluenceEdge& a, const InfluenceEdge& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  incoming_.assign(n, {});
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const InfluenceEdge& e = edges_[k];
    if (e.source >= n || e.target >= n) throw ValidationError("edge endpoint outside entity set");
    if (e.source == e.target) throw ValidationError("self edge on '" + entities_[e.source].id + "'");
    if (k > 0 && edges_[k - 1].source == e.source && edges_[k - 1].target == e.target) {
      throw ValidationError("duplicate edge " + entities_[e.source].id + " -> " + entities_[e.target].id);
    }
    incoming_[e.target].push_back(k);
  }
  // Edges are sorted by source, so each incoming list is ascending by source.
}

std::optional<std::size_t> Sstkg::find_edge(std::size_t source, std::size_t target) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{source, target},
                             [](const InfluenceEdge& e, const std::pair<std::size_t, std::size_t>& key) {
                               return e.source != key.first ? e.source < key.first : e.target < key.second;
                             });
  if (it == edges_.end() || it->source != source || it->target != target) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

double compute_weight(double overall_source, double overall_target, double distance_km,
                      std::span<const double> neighborhood_distances_km) {
  if (!(distance_km > 0.0)) throw ValidationError("co-located entities");
  if (!(overall_target > 0.0)) throw ValidationError("target overall record must be positive");
  if (neighborhood_distances_km.empty()) throw ValidationError("empty neighbourhood");
  const double n = static_cast<double>(neighborhood_distances_km.size());
  const double total = std::accumulate(neighborhood_distances_km.begin(), neighborhood_distances_km.end(), 0.0);
  return overall_source / overall_target * std::log(1.0 + total / (n * distance_km));
}

SelfWeights compute_self_weights(std::size_t entity_count, std::span<const InfluenceEdge> edges) {
  double total = 0.0;
  for (const InfluenceEdge& e : edges) total += e.weight;
  if (!(total > 0.0)) throw ValidationError("degenerate graph: total relation weight is zero");
  SelfWeights out{std::vector<double>(entity_count, 0.0), std::vector<bool>(entity_count, true)};
  for (const InfluenceEdge& e : edges) {
    out.p.at(e.target) += e.weight / total;
    out.isolated[e.target] = false;
  }
  return out;
}

std::vector<double> fit_influences(const RegressionInput& input) {
  const std::size_t k = input.neighbors.size();
  if (input.target == nullptr) throw ValidationError("regression without target series");
  if (input.weights.size() != k) throw ValidationError("one weight per neighbour required");
  if (k == 0) throw ValidationError("regression needs at least one neighbour");
  if (!(input.p > 0.0)) throw ValidationError("regression needs p > 0");
  if (input.ridge_lambda < 0.0) throw ValidationError("ridge_lambda must be >= 0");

  std::vector<std::size_t> slots;
  for (std::size_t t = input.window.begin; t < input.window.end; ++t) {
    bool usable = input.target->present(t);
    for (std::size_t i = 0; usable && i < k; ++i) usable = input.neighbors[i]->present(t);
    if (usable) slots.push_back(t);
  }
  if (slots.empty()) throw ValidationError("no usable slots in the training window");
  const auto rows = static_cast<Eigen::Index>(slots.size());

  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) y(r) = input.p * input.target->value(slots[r]);
  const double y_scale = std::sqrt(y.squaredNorm() / static_cast<double>(rows));

  std::vector<double> influence(k, 0.0);
  if (y_scale == 0.0) return influence;

  std::vector<std::size_t> active;
  std::vector<double> col_scale;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(input.weights[i] > 0.0)) continue;
    double ss = 0.0;
    for (std::size_t t : slots) {
      const double v = input.weights[i] * input.neighbors[i]->value(t);
      ss += v * v;
    }
    const double s = std::sqrt(ss / static_cast<double>(rows));
    if (s > 0.0) {
      active.push_back(i);
      col_scale.push_back(s);
    }
  }
  if (active.empty()) return influence;

  const auto m = static_cast<Eigen::Index>(active.size());
  const bool ridge = input.ridge_lambda > 0.0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows + (ridge ? m : 0), m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(a.rows());
  for (Eigen::Index r = 0; r < rows; ++r) {
    b(r) = y(r) / y_scale;
    for (Eigen::Index c = 0; c < m; ++c) {
      const std::size_t i = active[c];
      a(r, c) = input.weights[i] * input.neighbors[i]->value(slots[r]) / col_scale[c];
    }
  }
  if (ridge) {
    const double root = std::sqrt(input.ridge_lambda);
    for (Eigen::Index c = 0; c < m; ++c) a(rows + c, c) = root;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (!ridge && qr.rank() < m) {
    throw ValidationError("singular regression system; use a positive ridge_lambda");
  }
  const Eigen::VectorXd beta = qr.solve(b);
  for (Eigen::Index c = 0; c < m; ++c) {
    const std::size_t i = active[c];
    const double alpha = beta(c) * y_scale / col_scale[c];
    influence[i] = alpha * input.weights[i];
  }
  return influence;
}

namespace {

// Runs fn(i) for i in [0, n) on `workers` threads. Rethrows the exception of
// the lowest failing index so that errors do not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min(workers, n);
  pool.reserve(count);
  for (std::size_t w = 0; w < count; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

Sstkg build_graph(EntitySet entities, const BuildConfig& config) {
  if (entities.empty()) throw ValidationError("degenerate graph: no entities");
  config.validate(entities.time_index());
  const SlotRange window = config.window(entities.time_index());
  entities.recompute_overall(window);
  const std::size_t n = entities.size();

  const NeighborIndex index(entities, config.distance_threshold_km);
  std::vector<std::vector<InfluenceEdge>> candidates(n);
  parallel_for(n, config.workers, [&](std::size_t target) {
    const double overall_target = entities[target].overall_record;
    if (!(overall_target > 0.0)) return;
    const std::vector<Neighbor> hood = index.within(target);
    if (hood.empty()) return;
    std::vector<double> distances;
    distances.reserve(hood.size());
    for (const Neighbor& nb : hood) distances.push_back(std::max(nb.distance_km, kMinDistanceKm));
    for (std::size_t j = 0; j < hood.size(); ++j) {
      const double overall_source = entities[hood[j].index].overall_record;
      const double w = compute_weight(overall_source, overall_target, distances[j], distances);
      if (w > 0.0) candidates[target].push_back({hood[j].index, target, w, 0.0, distances[j]});
    }
  });

  std::vector<InfluenceEdge> all;
  for (const auto& list : candidates) all.insert(all.end(), list.begin(), list.end());
  if (all.empty()) {
    return Sstkg(std::move(entities), {}, std::vector<double>(n, 0.0), config);
  }
  const SelfWeights weights = compute_self_weights(n, all);

  parallel_for(n, config.workers, [&](std::size_t target) {
    auto& list = candidates[target];
    if (list.empty()) return;
    RegressionInput input;
    input.target = &entities[target].series;
    input.p = weights.p[target];
    input.window = window;
    input.ridge_lambda = config.ridge_lambda;
    for (const InfluenceEdge& e : list) {
      input.neighbors.push_back(&entities[e.source].series);
      input.weights.push_back(e.weight);
    }
    std::vector<double> fitted;
    try {
      fitted = fit_influences(input);
    } catch (const Error& err) {
      throw ValidationError("entity '" + entities[target].id + "': " + err.what());
    }
    for (std::size_t i = 0; i < list.size(); ++i) list[i].influence = fitted[i];
  });

  std::vector<InfluenceEdge> kept;
  for (const auto& list : candidates) {
    for (const InfluenceEdge& e : list) {
      if (std::abs(e.influence) >= config.prune_epsilon) kept.push_back(e);
    }
  }
  return Sstkg(std::move(entities), std::move(kept), weights.p, config);
}

}  // namespace sstkg
