#include "sstkg/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sstkg/error.hpp"

namespace sstkg {
namespace {

// -log(sigmoid(x)) = softplus(-x)
double neg_log_sigmoid(double x) {
  const double z = -x;
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// d/dx of -log(sigmoid(x)) = -sigmoid(-x)
double neg_log_sigmoid_grad(double x) { return -1.0 / (1.0 + std::exp(x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

struct SampleView {
  double p = 0.0;
  std::vector<double> target_out;
  std::vector<std::vector<double>> neighbor_out;
  std::vector<double> influence;
  std::vector<std::size_t> sources;
};

SampleView view(const TrainingSample& sample, const Sstkg& graph, const EmbeddingSet& embeddings) {
  SampleView v;
  v.p = graph.self_weight(sample.target);
  v.target_out = out_embedding(graph, embeddings, sample.target, sample.slot);
  for (std::size_t k : sample.edges) {
    const InfluenceEdge& e = graph.edges()[k];
    v.sources.push_back(e.source);
    v.influence.push_back(e.influence);
    v.neighbor_out.push_back(out_embedding(graph, embeddings, e.source, sample.slot));
  }
  return v;
}

// p * out_0 - in_0, with the in embedding assembled from the sample's own neighbours.
std::vector<double> embedding_residual(const SampleView& v, std::size_t static_dim, bool scale_static) {
  std::vector<double> r(v.target_out.size());
  for (std::size_t d = 0; d < r.size(); ++d) r[d] = v.p * v.target_out[d];
  for (std::size_t k = 0; k < v.neighbor_out.size(); ++k) {
    const double cs = scale_static ? v.influence[k] : 1.0;
    for (std::size_t d = 0; d < r.size(); ++d) {
      r[d] -= (d < static_dim ? cs : v.influence[k]) * v.neighbor_out[k][d];
    }
  }
  return r;
}

std::vector<double> influence_residual(const SampleView& v) {
  std::vector<double> r(v.target_out.size());
  for (std::size_t d = 0; d < r.size(); ++d) r[d] = v.p * v.target_out[d];
  for (std::size_t k = 0; k < v.neighbor_out.size(); ++k) {
    for (std::size_t d = 0; d < r.size(); ++d) r[d] -= v.influence[k] * v.neighbor_out[k][d];
  }
  return r;
}

void add_scaled(std::map<std::size_t, std::vector<double>>& grad, std::size_t entity, double factor,
                std::span<const double> values, std::size_t dim) {
  auto& g = grad[entity];
  if (g.empty()) g.assign(dim, 0.0);
  for (std::size_t d = 0; d < dim; ++d) g[d] += factor * values[d];
}

}  // namespace

std::vector<TrainingSample> make_training_samples(const Sstkg& graph, SlotRange window) {
  std::vector<TrainingSample> samples;
  const EntitySet& entities = graph.entities();
  for (std::size_t target = 0; target < entities.size(); ++target) {
    const auto incoming = graph.incoming(target);
    if (incoming.empty()) continue;
    for (std::size_t t = window.begin; t < window.end; ++t) {
      bool usable = entities[target].series.present(t);
      for (std::size_t k : incoming) usable = usable && entities[graph.edges()[k].source].series.present(t);
      if (usable) samples.push_back({target, t, {incoming.begin(), incoming.end()}});
    }
  }
  return samples;
}

double score_embedding(const TrainingSample& sample, const Sstkg& graph, const EmbeddingSet& embeddings,
                       bool scale_static_by_influence) {
  const SampleView v = view(sample, graph, embeddings);
  return squared_norm(embedding_residual(v, embeddings.static_dim(), scale_static_by_influence));
}

double score_influence(const TrainingSample& sample, const Sstkg& graph, const EmbeddingSet& embeddings) {
  const SampleView v = view(sample, graph, embeddings);
  return squared_norm(influence_residual(v));
}

NegativeSampler::NegativeSampler(const Sstkg& graph, double band) : graph_(&graph), band_(band) {
  const EntitySet& entities = graph.entities();
  by_overall_.resize(entities.size());
  std::iota(by_overall_.begin(), by_overall_.end(), std::size_t{0});
  std::sort(by_overall_.begin(), by_overall_.end(), [&](std::size_t a, std::size_t b) {
    const double oa = entities[a].overall_record;
    const double ob = entities[b].overall_record;
    return oa != ob ? oa < ob : a < b;
  });
}

std::vector<std::size_t> NegativeSampler::candidates(std::size_t replaced_neighbor, std::size_t target,
                                                     double band) const {
  const EntitySet& entities = graph_->entities();
  const double center = entities[replaced_neighbor].overall_record;
  const double lo = center * (1.0 - band);
  const double hi = center * (1.0 + band);
  auto first = std::lower_bound(by_overall_.begin(), by_overall_.end(), lo,
                                [&](std::size_t e, double v) { return entities[e].overall_record < v; });
  std::vector<std::size_t> out;
  for (auto it = first; it != by_overall_.end() && entities[*it].overall_record <= hi; ++it) {
    const std::size_t c = *it;
    if (c == replaced_neighbor || c == target || graph_->connected(c, target)) continue;
    out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t NegativeSampler::sample(std::size_t replaced_neighbor, std::size_t target, Rng& rng) const {
  std::vector<std::size_t> pool = candidates(replaced_neighbor, target, band_);
  if (pool.empty()) pool = candidates(replaced_neighbor, target, 2.0 * band_);
  if (pool.empty()) {
    throw Error("no negative candidates for neighbour '" + graph_->entities()[replaced_neighbor].id +
                "' of '" + graph_->entities()[target].id + "'");
  }
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(rng)];
}

std::size_t sample_negative_entity(std::size_t replaced_neighbor, std::size_t target, const Sstkg& graph,
                                   double band, Rng& rng) {
  return NegativeSampler(graph, band).sample(replaced_neighbor, target, rng);
}

std::vector<std::vector<Negative>> draw_negatives(std::span<const TrainingSample> batch, const Sstkg& graph,
                                                  const NegativeSampler& sampler, std::size_t k, Rng& rng) {
  std::vector<std::vector<Negative>> out(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const TrainingSample& sample = batch[s];
    if (sample.edges.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, sample.edges.size() - 1);
    for (std::size_t q = 0; q < k; ++q) {
      const std::size_t position = pick(rng);
      const std::size_t source = graph.edges()[sample.edges[position]].source;
      out[s].push_back({position, sampler.sample(source, sample.target, rng)});
    }
  }
  return out;
}

StaticGradient embedding_phase_loss(std::span<const TrainingSample> batch,
                                    std::span<const std::vector<Negative>> negatives, const Sstkg& graph,
                                    const EmbeddingSet& embeddings, bool scale_static_by_influence) {
  if (negatives.size() != batch.size()) throw ValidationError("one negative list per sample required");
  const std::size_t sd = embeddings.static_dim();
  StaticGradient out;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    if (negatives[s].empty()) continue;
    const TrainingSample& sample = batch[s];
    const SampleView v = view(sample, graph, embeddings);
    const std::vector<double> r = embedding_residual(v, sd, scale_static_by_influence);
    const double f_pos = squared_norm(r);
    const std::span<const double> r_static(r.data(), sd);

    for (const Negative& neg : negatives[s]) {
      const std::size_t j = neg.position;
      const std::vector<double> neg_out = out_embedding(graph, embeddings, neg.entity, sample.slot);
      const double cs = scale_static_by_influence ? v.influence[j] : 1.0;
      std::vector<double> rn = r;
      for (std::size_t d = 0; d < rn.size(); ++d) {
        const double c = d < sd ? cs : v.influence[j];
        rn[d] += c * (v.neighbor_out[j][d] - neg_out[d]);
      }
      const double delta = squared_norm(rn) - f_pos;
      out.loss += neg_log_sigmoid(delta);
      const double g = neg_log_sigmoid_grad(delta);
      const std::span<const double> rn_static(rn.data(), sd);

      // d(f_neg - f_pos)/d static slices
      std::vector<double> diff(sd);
      for (std::size_t d = 0; d < sd; ++d) diff[d] = rn_static[d] - r_static[d];
      add_scaled(out.gradient, sample.target, g * 2.0 * v.p, diff, sd);
      for (std::size_t k = 0; k < v.sources.size(); ++k) {
        const double ck = scale_static_by_influence ? v.influence[k] : 1.0;
        if (k == j) {
          add_scaled(out.gradient, v.sources[k], g * 2.0 * ck, r_static, sd);
        } else {
          add_scaled(out.gradient, v.sources[k], -g * 2.0 * ck, diff, sd);
        }
      }
      add_scaled(out.gradient, neg.entity, -g * 2.0 * cs, rn_static, sd);
    }
  }
  return out;
}

StaticGradient loss_embedding_phase(std::span<const TrainingSample> batch, const Sstkg& graph,
                                    const EmbeddingSet& embeddings, const NegativeSampler& sampler,
                                    std::size_t k_negatives, Rng& rng, bool scale_static_by_influence) {
  if (batch.empty()) throw ValidationError("empty batch");
  const auto negatives = draw_negatives(batch, graph, sampler, k_negatives, rng);
  return embedding_phase_loss(batch, negatives, graph, embeddings, scale_static_by_influence);
}

InfluenceGradient influence_phase_loss(std::span<const TrainingSample> batch, const Sstkg& graph,
                                       const EmbeddingSet& embeddings, double mean) {
  InfluenceGradient out;
  for (const TrainingSample& sample : batch) {
    const SampleView v = view(sample, graph, embeddings);
    const std::vector<double> r = influence_residual(v);
    const std::size_t k = v.neighbor_out.size();
    std::vector<double> proj(k);  // out_k . r
    std::vector<double> gram(k * k);
    for (std::size_t a = 0; a < k; ++a) {
      proj[a] = dot(v.neighbor_out[a], r);
      for (std::size_t b = 0; b <= a; ++b) {
        gram[a * k + b] = gram[b * k + a] = dot(v.neighbor_out[a], v.neighbor_out[b]);
      }
    }
    for (std::size_t i = 0; i < k; ++i) {
      // Corrupting R_i to the mean adds (R_i - mean) * out_i to the residual.
      const double shift = v.influence[i] - mean;
      const double delta = 2.0 * shift * proj[i] + shift * shift * gram[i * k + i];
      out.loss += neg_log_sigmoid(delta);
      const double g = neg_log_sigmoid_grad(delta);
      for (std::size_t a = 0; a < k; ++a) {
        const double d_delta = a == i ? 2.0 * proj[i] : -2.0 * shift * gram[a * k + i];
        out.gradient[sample.edges[a]] += g * d_delta;
      }
    }
  }
  return out;
}

double mean_influence(const Sstkg& graph) {
  const auto edges = graph.edges();
  if (edges.empty()) return 0.0;
  double sum = 0.0;
  for (const InfluenceEdge& e : edges) sum += e.influence;
  return sum / static_cast<double>(edges.size());
}

InfluenceGradient loss_influence_phase(std::span<const TrainingSample> batch, const Sstkg& graph,
                                       const EmbeddingSet& embeddings) {
  if (batch.empty()) throw ValidationError("empty batch");
  if (graph.edges().size() < 2) throw ValidationError("influence phase needs at least two edges");
  return influence_phase_loss(batch, graph, embeddings, mean_influence(graph));
}

namespace {

[[noreturn]] void non_finite(const char* phase, std::size_t epoch, std::span<const TrainingSample> batch,
                             const Sstkg& graph) {
  std::ostringstream msg;
  msg << "non-finite " << phase << " loss in epoch " << epoch;
  if (!batch.empty()) {
    msg << " (batch starting at sample target='" << graph.entities()[batch.front().target].id
        << "' slot=" << batch.front().slot << ")";
  }
  throw Error(msg.str());
}

}  // namespace

TrainedModel train(Sstkg graph, const EmbeddingConfig& config) {
  config.validate();
  TrainedModel model;
  model.config = config;
  model.embeddings = EmbeddingSet::initialize(graph, config);
  const SlotRange window = graph.config().window(graph.time_index());
  const std::vector<TrainingSample> samples = make_training_samples(graph, window);

  Rng rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto batches = [&](auto&& body) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<TrainingSample> batch;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(samples[order[i]]);
      body(std::span<const TrainingSample>(batch));
    }
  };
  const double denom = samples.empty() ? 1.0 : static_cast<double>(samples.size());

  if (config.epochs_embedding > 0 && config.negatives_per_sample > 0 && !samples.empty()) {
    const NegativeSampler sampler(graph, config.similarity_band);
    for (std::size_t epoch = 0; epoch < config.epochs_embedding; ++epoch) {
      double epoch_loss = 0.0;
      batches([&](std::span<const TrainingSample> batch) {
        const StaticGradient step = loss_embedding_phase(batch, graph, model.embeddings, sampler,
                                                         config.negatives_per_sample, rng,
                                                         config.scale_static_by_influence);
        if (!std::isfinite(step.loss)) non_finite("embedding-phase", epoch, batch, graph);
        for (const auto& [entity, g] : step.gradient) {
          auto slice = model.embeddings.static_slice(entity);
          for (std::size_t d = 0; d < slice.size(); ++d) slice[d] -= config.learning_rate * g[d];
        }
        epoch_loss += step.loss;
      });
      model.trace.embedding.push_back(epoch_loss / denom);
    }
  } else {
    model.trace.embedding.assign(config.epochs_embedding, 0.0);
  }

  if (config.epochs_influence > 0 && graph.edges().size() >= 2 && !samples.empty()) {
    for (std::size_t epoch = 0; epoch < config.epochs_influence; ++epoch) {
      double epoch_loss = 0.0;
      batches([&](std::span<const TrainingSample> batch) {
        const InfluenceGradient step = loss_influence_phase(batch, graph, model.embeddings);
        if (!std::isfinite(step.loss)) non_finite("influence-phase", epoch, batch, graph);
        for (const auto& [edge, g] : step.gradient) {
          graph.set_influence(edge, graph.edges()[edge].influence - config.learning_rate * g);
        }
        epoch_loss += step.loss;
      });
      model.trace.influence.push_back(epoch_loss / denom);
    }
  } else {
    model.trace.influence.assign(config.epochs_influence, 0.0);
  }

  model.graph = std::move(graph);
  return model;
}

}  // namespace sstkg
