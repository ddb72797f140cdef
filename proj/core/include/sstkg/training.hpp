#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "sstkg/embedding.hpp"
#include "sstkg/graph.hpp"

namespace sstkg {

using Rng = std::mt19937_64;

/// One (target, slot) tuple with the target's incoming edges at that slot.
struct TrainingSample {
  std::size_t target = 0;
  std::size_t slot = 0;
  std::vector<std::size_t> edges;  // indices into graph.edges(), ascending by source

  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

/// Every non-isolated target at every slot of `window` where the target and
/// all its sources have present records.
std::vector<TrainingSample> make_training_samples(const Sstkg& graph, SlotRange window);

/// f_p1 = || p * out_0 - in_0 ||^2
double score_embedding(const TrainingSample& sample, const Sstkg& graph, const EmbeddingSet& embeddings,
                       bool scale_static_by_influence = false);

/// f_p2 = || p * out_0 - sum_i R_i * out_i ||^2 over full out embeddings.
double score_influence(const TrainingSample& sample, const Sstkg& graph, const EmbeddingSet& embeddings);

/// Draws negatives whose overall record lies within a relative band of the
/// replaced neighbour's and which share no edge with the target.
class NegativeSampler {
 public:
  NegativeSampler(const Sstkg& graph, double band);

  /// Throws Error("no negative candidates") when the band, once doubled, is still empty.
  std::size_t sample(std::size_t replaced_neighbor, std::size_t target, Rng& rng) const;
  std::vector<std::size_t> candidates(std::size_t replaced_neighbor, std::size_t target, double band) const;

 private:
  const Sstkg* graph_;
  double band_;
  std::vector<std::size_t> by_overall_;  // entity indices sorted by overall record
};

std::size_t sample_negative_entity(std::size_t replaced_neighbor, std::size_t target, const Sstkg& graph,
                                   double band, Rng& rng);

/// Replaces neighbour `position` (index into sample.edges) by `entity`.
struct Negative {
  std::size_t position = 0;
  std::size_t entity = 0;
  friend bool operator==(const Negative&, const Negative&) = default;
};

/// Sparse gradient keyed by parameter owner (entity for statics, edge for influences).
struct StaticGradient {
  double loss = 0.0;
  std::map<std::size_t, std::vector<double>> gradient;
};

struct InfluenceGradient {
  double loss = 0.0;
  std::map<std::size_t, double> gradient;
};

/// For every sample, k negatives each replacing one uniformly chosen neighbour.
std::vector<std::vector<Negative>> draw_negatives(std::span<const TrainingSample> batch, const Sstkg& graph,
                                                  const NegativeSampler& sampler, std::size_t k, Rng& rng);

/// l = -sum log sigma(f_p1(negative) - f_p1(x)) with analytic gradients with
/// respect to every static slice touched.
StaticGradient embedding_phase_loss(std::span<const TrainingSample> batch,
                                    std::span<const std::vector<Negative>> negatives, const Sstkg& graph,
                                    const EmbeddingSet& embeddings, bool scale_static_by_influence = false);

/// draw_negatives followed by embedding_phase_loss.
StaticGradient loss_embedding_phase(std::span<const TrainingSample> batch, const Sstkg& graph,
                                    const EmbeddingSet& embeddings, const NegativeSampler& sampler,
                                    std::size_t k_negatives, Rng& rng, bool scale_static_by_influence = false);

/// l = -sum_i log sigma(f_p2(R with R_i := mean) - f_p2(x)), one corruption per
/// neighbour. `mean_influence` is held constant for the gradient.
InfluenceGradient influence_phase_loss(std::span<const TrainingSample> batch, const Sstkg& graph,
                                       const EmbeddingSet& embeddings, double mean_influence);

double mean_influence(const Sstkg& graph);

/// Uses the current graph-wide mean influence. Requires at least two edges.
InfluenceGradient loss_influence_phase(std::span<const TrainingSample> batch, const Sstkg& graph,
                                       const EmbeddingSet& embeddings);

struct LossTrace {
  std::vector<double> embedding;  // epoch-mean loss per epoch
  std::vector<double> influence;
  friend bool operator==(const LossTrace&, const LossTrace&) = default;
};

struct TrainedModel {
  Sstkg graph;  // influences are the trained values
  EmbeddingSet embeddings;
  EmbeddingConfig config;
  LossTrace trace;

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

/// Embedding phase (SGD on static slices), then influence phase (SGD on
/// influences). Both iterate shuffled batches over the build's training window.
TrainedModel train(Sstkg graph, const EmbeddingConfig& config);

}  // namespace sstkg
