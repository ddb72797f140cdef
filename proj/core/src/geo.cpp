#include "sstkg/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sstkg {

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  constexpr double kRad = std::numbers::pi / 180.0;
  const double lat1 = a.latitude * kRad;
  const double lat2 = b.latitude * kRad;
  const double dlat = lat2 - lat1;
  const double dlon = (b.longitude - a.longitude) * kRad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

void sort_neighbors(std::vector<Neighbor>& out, const EntitySet& entities) {
  std::sort(out.begin(), out.end(), [&](const Neighbor& x, const Neighbor& y) {
    if (x.distance_km != y.distance_km) return x.distance_km < y.distance_km;
    return entities[x.index].id < entities[y.index].id;
  });
}

}  // namespace

NeighborIndex::NeighborIndex(const EntitySet& entities, double radius_km)
    : entities_(&entities), radius_km_(radius_km) {
  // One degree of latitude is at least this long along any meridian; a small
  // margin keeps the band conservative.
  constexpr double kKmPerDegree = kEarthRadiusKm * std::numbers::pi / 180.0;
  band_deg_ = radius_km / kKmPerDegree * 1.000001 + 1e-9;
  order_.resize(entities.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  std::sort(order_.begin(), order_.end(), [&](std::size_t x, std::size_t y) {
    const double lx = entities[x].location.latitude;
    const double ly = entities[y].location.latitude;
    return lx != ly ? lx < ly : x < y;
  });
}

std::vector<Neighbor> NeighborIndex::within(std::size_t entity) const {
  const EntitySet& set = *entities_;
  const GeoPoint& origin = set[entity].location;
  auto lat_less = [&](std::size_t idx, double lat) { return set[idx].location.latitude < lat; };
  auto first = std::lower_bound(order_.begin(), order_.end(), origin.latitude - band_deg_, lat_less);
  std::vector<Neighbor> out;
  for (auto it = first; it != order_.end() && set[*it].location.latitude <= origin.latitude + band_deg_; ++it) {
    if (*it == entity) continue;
    const double d = haversine_km(origin, set[*it].location);
    if (d <= radius_km_) out.push_back({*it, d});
  }
  sort_neighbors(out, set);
  return out;
}

std::vector<Neighbor> neighbors_within(std::size_t entity, const EntitySet& entities, double radius_km) {
  return NeighborIndex(entities, radius_km).within(entity);
}

}  // namespace sstkg
