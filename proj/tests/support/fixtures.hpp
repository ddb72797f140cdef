#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "sstkg/dataset.hpp"
#include "sstkg/embedding.hpp"
#include "sstkg/graph.hpp"
#include "sstkg/synthetic.hpp"
#include "sstkg/training.hpp"

namespace fixture {

inline sstkg::Entity entity(std::string id, double lat, double lon, std::string category,
                            const std::vector<std::optional<double>>& values) {
  sstkg::Entity e;
  e.id = std::move(id);
  e.location = {lat, lon};
  e.category = std::move(category);
  e.series = sstkg::TimeSeries(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (values[t]) e.series.set(t, *values[t]);
  }
  return e;
}

inline sstkg::Entity entity(std::string id, double lat, double lon, const std::vector<double>& values) {
  std::vector<std::optional<double>> v(values.begin(), values.end());
  return entity(std::move(id), lat, lon, "722511", v);
}

inline sstkg::EntitySet set(std::vector<sstkg::Entity> entities) {
  const std::size_t slots = entities.empty() ? 1 : entities.front().series.size();
  return sstkg::EntitySet(sstkg::TimeIndex{0, 86400, slots}, std::move(entities));
}

// Degrees of longitude spanning `km` along the equator.
inline double equator_deg(double km) { return km / (6371.0 * 3.14159265358979323846 / 180.0); }

// 200 entities in a one-degree box: sparse enough that every generated |I*| is at least 0.01.
inline sstkg::SyntheticSpec sparse_world(std::uint64_t seed = 7) {
  sstkg::SyntheticSpec spec;
  spec.bounding_box = {{40.0, -83.0}, {41.0, -82.0}};
  spec.seed = seed;
  return spec;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sstkg-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Five entities: 0 is the target of 1 and 2, 3 and 4 are unconnected. Influences,
// records and static slices are random.
struct Toy {
  sstkg::Sstkg graph;
  sstkg::EmbeddingSet embeddings;
};

inline Toy random_toy(std::mt19937_64& rng, std::size_t static_dim = 4, std::size_t window = 3,
                      std::size_t slots = 6) {
  std::uniform_real_distribution<double> record(1.0, 10.0);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::vector<sstkg::Entity> entities;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> values(slots);
    for (double& v : values) v = record(rng);
    entities.push_back(entity("n" + std::to_string(i), 10.0, 10.0 + 0.001 * i, values));
  }
  sstkg::EntitySet es = set(std::move(entities));
  std::vector<sstkg::InfluenceEdge> edges{{1, 0, 1.0, coef(rng), 0.1}, {2, 0, 1.0, coef(rng), 0.2}};
  std::vector<double> p{0.5 + 0.5 * std::abs(coef(rng)), 0.0, 0.0, 0.0, 0.0};
  Toy toy;
  toy.graph = sstkg::Sstkg(std::move(es), std::move(edges), p, sstkg::BuildConfig{});
  toy.embeddings = sstkg::EmbeddingSet(5, static_dim, window, 5.0);
  for (std::size_t e = 0; e < 5; ++e) {
    for (double& v : toy.embeddings.static_slice(e)) v = coef(rng);
  }
  return toy;
}

// Three negatives per sample, each replacing neighbour 0 or 1 by entity 3 or 4.
inline std::vector<std::vector<sstkg::Negative>> toy_negatives(std::size_t samples, std::mt19937_64& rng) {
  std::vector<std::vector<sstkg::Negative>> out(samples);
  for (auto& list : out) {
    for (int q = 0; q < 3; ++q) list.push_back({rng() % 2, 3 + rng() % 2});
  }
  return out;
}

}  // namespace fixture

namespace oracle {

// || p * out_0 - sum_i (c_i * static_i (+) I_i * records_i) ||^2, assembled by hand.
inline double score(const sstkg::Sstkg& graph, const sstkg::EmbeddingSet& emb, std::size_t target,
                    std::size_t slot, bool influence_on_static) {
  const std::size_t sd = emb.static_dim();
  const std::size_t w = emb.record_window();
  auto records = [&](std::size_t e) {
    std::vector<double> r(w);
    const sstkg::TimeSeries& s = graph.entities()[e].series;
    for (std::size_t k = 0; k < w; ++k) {
      const long slot_k = static_cast<long>(slot) - static_cast<long>(w) + 1 + static_cast<long>(k);
      std::optional<double> v = slot_k >= 0 ? s.at(static_cast<std::size_t>(slot_k)) : s.first_present();
      r[k] = v ? *v / emb.record_scale() : 0.0;
    }
    return r;
  };
  const double p = graph.self_weight(target);
  std::vector<double> residual(sd + w);
  const auto ts = emb.static_slice(target);
  const auto tr = records(target);
  for (std::size_t d = 0; d < sd; ++d) residual[d] = p * ts[d];
  for (std::size_t k = 0; k < w; ++k) residual[sd + k] = p * tr[k];
  for (const sstkg::InfluenceEdge& e : graph.edges()) {
    if (e.target != target) continue;
    const auto ss = emb.static_slice(e.source);
    const auto sr = records(e.source);
    const double c = influence_on_static ? e.influence : 1.0;
    for (std::size_t d = 0; d < sd; ++d) residual[d] -= c * ss[d];
    for (std::size_t k = 0; k < w; ++k) residual[sd + k] -= e.influence * sr[k];
  }
  double s = 0.0;
  for (double v : residual) s += v * v;
  return s;
}

}  // namespace oracle
