#include "sstkg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "sstkg/error.hpp"
#include "sstkg/geo.hpp"

namespace sstkg {

void SyntheticSpec::validate() const {
  if (entity_count < 1) throw ValidationError("entity_count must be positive");
  if (slot_count < 1) throw ValidationError("slot_count must be positive");
  bounding_box.min.validate();
  bounding_box.max.validate();
  if (!(bounding_box.min.latitude < bounding_box.max.latitude) ||
      !(bounding_box.min.longitude < bounding_box.max.longitude)) {
    throw ValidationError("bounding_box is degenerate");
  }
  if (category_pool.empty()) throw ValidationError("category_pool must not be empty");
  for (const auto& c : category_pool) {
    if (c.empty()) throw ValidationError("category_pool contains an empty token");
  }
  if (!(influence_density > 0.0 && influence_density <= 1.0)) {
    throw ValidationError("influence_density must lie in (0, 1]");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise_sigma must be >= 0");
  if (!(distance_threshold_km > 0.0)) throw ValidationError("distance_threshold_km must be positive");
}

namespace {

struct Draft {
  GeoPoint location;
  std::string category;
  std::vector<double> series;
};

std::string make_id(std::size_t i, std::size_t count) {
  std::size_t width = 4;
  for (std::size_t c = count; c >= 10000; c /= 10) ++width;
  std::ostringstream out;
  out << 'e' << std::setw(static_cast<int>(width)) << std::setfill('0') << i;
  return out.str();
}

}  // namespace

SyntheticWorld generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = spec.entity_count;
  const std::size_t slots = spec.slot_count;
  const BoundingBox& box = spec.bounding_box;

  std::vector<Draft> drafts(n);
  for (Draft& d : drafts) {
    d.location.latitude = box.min.latitude + unit(rng) * (box.max.latitude - box.min.latitude);
    d.location.longitude = box.min.longitude + unit(rng) * (box.max.longitude - box.min.longitude);
    d.category = spec.category_pool[static_cast<std::size_t>(unit(rng) * spec.category_pool.size()) %
                                    spec.category_pool.size()];
  }
  // Base series: sinusoid with a weekly-like period plus uniform jitter.
  for (Draft& d : drafts) {
    const double level = 50.0 + 100.0 * unit(rng);
    const double amplitude = (0.1 + 0.3 * unit(rng)) * level;
    const double period = 5.0 + 4.0 * unit(rng);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    d.series.resize(slots);
    for (std::size_t t = 0; t < slots; ++t) {
      const double v = level + amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase) +
                       0.1 * level * unit(rng);
      d.series[t] = std::max(0.0, v);
    }
  }

  // All pairs within the threshold, floored like the graph builder does.
  std::vector<std::vector<std::pair<std::size_t, double>>> hood(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = haversine_km(drafts[i].location, drafts[j].location);
      if (d <= spec.distance_threshold_km) hood[i].push_back({j, std::max(d, 0.001)});
    }
  }

  // Targets: no two within the threshold of each other, so a target's
  // neighbourhood holds sources only.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_target(n, false);
  for (std::size_t e : order) {
    if (hood[e].empty()) continue;
    bool clear = true;
    for (const auto& [j, d] : hood[e]) clear = clear && !is_target[j];
    if (clear) is_target[e] = true;
  }

  // Mixing coefficients c: Record_target = sum c_j Record_j.
  std::vector<std::vector<std::pair<std::size_t, double>>> mix(n);
  for (std::size_t e = 0; e < n; ++e) {
    if (!is_target[e]) continue;
    auto& coef = mix[e];
    for (const auto& [j, d] : hood[e]) {
      if (unit(rng) >= spec.influence_density) continue;
      const bool negative = unit(rng) < 0.2;
      coef.push_back({j, negative ? -(0.1 + 0.2 * unit(rng)) : 0.6 + 0.8 * unit(rng)});
    }
    if (coef.empty()) {
      const std::size_t pick = static_cast<std::size_t>(unit(rng) * hood[e].size()) % hood[e].size();
      coef.push_back({hood[e][pick].first, 0.6 + 0.8 * unit(rng)});
    }
    std::sort(coef.begin(), coef.end());
    auto combined = [&] {
      std::vector<double> u(slots, 0.0);
      for (const auto& [j, c] : coef) {
        for (std::size_t t = 0; t < slots; ++t) u[t] += c * drafts[j].series[t];
      }
      return u;
    };
    std::vector<double> u = combined();
    double mean = 0.0;
    for (double v : u) mean += v / static_cast<double>(slots);
    if (*std::min_element(u.begin(), u.end()) <= 0.05 * std::abs(mean)) {
      for (auto& [j, c] : coef) c = std::abs(c) < 0.6 ? 0.6 + std::abs(c) : std::abs(c);
      u = combined();
    }
    drafts[e].series = std::move(u);
  }

  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 noise_rng(spec.seed ^ 0x9E3779B97F4A7C15ULL);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (std::size_t e = 0; e < n; ++e) {
      if (!is_target[e]) continue;
      for (double& v : drafts[e].series) v = std::max(0.0, v + noise(noise_rng));
    }
  }

  // p* from the relation weights over the full range.
  std::vector<double> overall(n, 0.0);
  for (std::size_t e = 0; e < n; ++e) {
    for (double v : drafts[e].series) overall[e] += v;
  }
  std::vector<double> incoming(n, 0.0);
  double total = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    if (hood[e].empty() || !(overall[e] > 0.0)) continue;
    double sum_d = 0.0;
    for (const auto& [j, d] : hood[e]) sum_d += d;
    const double count = static_cast<double>(hood[e].size());
    for (const auto& [j, d] : hood[e]) {
      const double w = overall[j] / overall[e] * std::log(1.0 + sum_d / (count * d));
      incoming[e] += w;
      total += w;
    }
  }

  SyntheticWorld world;
  std::vector<Entity> entities(n);
  for (std::size_t e = 0; e < n; ++e) {
    entities[e].id = make_id(e, n);
    entities[e].location = drafts[e].location;
    entities[e].category = drafts[e].category;
    entities[e].series = TimeSeries(slots);
    for (std::size_t t = 0; t < slots; ++t) entities[e].series.set(t, drafts[e].series[t]);
    const double p = total > 0.0 ? incoming[e] / total : 0.0;
    world.truth.self_weight[entities[e].id] = p;
  }
  for (std::size_t e = 0; e < n; ++e) {
    if (!is_target[e]) continue;
    world.truth.targets.push_back(entities[e].id);
    const double p = world.truth.self_weight[entities[e].id];
    for (const auto& [j, c] : mix[e]) world.truth.edges.push_back({entities[j].id, entities[e].id, p * c});
  }
  std::sort(world.truth.targets.begin(), world.truth.targets.end());
  std::sort(world.truth.edges.begin(), world.truth.edges.end(), [](const auto& a, const auto& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  world.truth.distance_threshold_km = spec.distance_threshold_km;
  world.entities = EntitySet(TimeIndex{0, 86400, slots}, std::move(entities));
  return world;
}

}  // namespace sstkg
