#include "sstkg/embedding.hpp"

#include <cmath>
#include <random>

#include "sstkg/error.hpp"

namespace sstkg {

void EmbeddingConfig::validate() const {
  if (static_dim < 1) throw ValidationError("static_dim must be positive");
  if (record_window < 1) throw ValidationError("record_window must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be positive");
  if (batch_size < 1) throw ValidationError("batch_size must be positive");
  if (!(similarity_band > 0.0 && similarity_band < 1.0)) throw ValidationError("similarity_band must lie in (0, 1)");
}

double phi(double overall_record) { return std::log1p(overall_record); }

std::vector<double> category_vector(std::string_view category, std::size_t dim, std::uint64_t seed) {
  // FNV-1a over the token, mixed with the seed.
  std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : category) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::mt19937_64 rng(h);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    norm = 0.0;
    for (double& x : v) {
      x = normal(rng);
      norm += x * x;
    }
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

RecordSlice record_slice(const TimeSeries& series, std::size_t t, std::size_t window, double scale) {
  RecordSlice out{std::vector<double>(window, 0.0), std::vector<bool>(window, false)};
  const std::optional<double> earliest = series.first_present();
  for (std::size_t k = 0; k < window; ++k) {
    // slot = t - window + 1 + k, possibly before slot 0
    const std::ptrdiff_t slot = static_cast<std::ptrdiff_t>(t + k + 1) - static_cast<std::ptrdiff_t>(window);
    std::optional<double> v = slot < 0 ? earliest : series.at(static_cast<std::size_t>(slot));
    if (v) {
      out.values[k] = *v / scale;
      out.present[k] = true;
    }
  }
  return out;
}

double compute_record_scale(const EntitySet& entities, SlotRange window) {
  double total = 0.0;
  std::size_t count = 0;
  for (const Entity& e : entities.entities()) {
    total += e.series.sum(window);
    count += e.series.present_count(window);
  }
  if (count == 0 || !(total > 0.0)) return 1.0;
  return total / static_cast<double>(count);
}

EmbeddingSet::EmbeddingSet(std::size_t entity_count, std::size_t static_dim, std::size_t record_window,
                           double record_scale)
    : entity_count_(entity_count),
      static_dim_(static_dim),
      record_window_(record_window),
      record_scale_(record_scale),
      statics_(entity_count * static_dim, 0.0) {
  if (!(record_scale > 0.0)) throw ValidationError("record scale must be positive");
}

EmbeddingSet EmbeddingSet::initialize(const Sstkg& graph, const EmbeddingConfig& config) {
  config.validate();
  const EntitySet& entities = graph.entities();
  const SlotRange window = graph.config().window(graph.time_index());
  EmbeddingSet set(entities.size(), config.static_dim, config.record_window,
                   compute_record_scale(entities, window));
  for (std::size_t e = 0; e < entities.size(); ++e) {
    const std::vector<double> cat = category_vector(entities[e].category, config.static_dim, config.seed);
    const double scale = phi(entities[e].overall_record);
    auto slice = set.static_slice(e);
    for (std::size_t d = 0; d < slice.size(); ++d) slice[d] = cat[d] * scale;
  }
  return set;
}

std::vector<double> out_embedding(const Sstkg& graph, const EmbeddingSet& embeddings, std::size_t entity,
                                  std::size_t t) {
  std::vector<double> out(embeddings.out_dim());
  const auto s = embeddings.static_slice(entity);
  std::copy(s.begin(), s.end(), out.begin());
  const RecordSlice r =
      record_slice(graph.entities()[entity].series, t, embeddings.record_window(), embeddings.record_scale());
  std::copy(r.values.begin(), r.values.end(), out.begin() + static_cast<std::ptrdiff_t>(s.size()));
  return out;
}

std::vector<double> in_embedding(const Sstkg& graph, const EmbeddingSet& embeddings, std::size_t target,
                                 std::size_t t, bool scale_static_by_influence) {
  const auto incoming = graph.incoming(target);
  if (incoming.empty()) {
    throw Error("no incoming influence for '" + graph.entities()[target].id + "'");
  }
  const std::size_t sd = embeddings.static_dim();
  std::vector<double> in(embeddings.out_dim(), 0.0);
  for (std::size_t k : incoming) {
    const InfluenceEdge& edge = graph.edges()[k];
    const auto s = embeddings.static_slice(edge.source);
    const double static_factor = scale_static_by_influence ? edge.influence : 1.0;
    for (std::size_t d = 0; d < sd; ++d) in[d] += static_factor * s[d];
    const RecordSlice r = record_slice(graph.entities()[edge.source].series, t, embeddings.record_window(),
                                       embeddings.record_scale());
    for (std::size_t d = 0; d < r.values.size(); ++d) in[sd + d] += edge.influence * r.values[d];
  }
  return in;
}

}  // namespace sstkg
