#pragma once

#include <cstddef>
#include <vector>

#include "sstkg/dataset.hpp"

namespace sstkg {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

struct Neighbor {
  std::size_t index = 0;  // into the EntitySet
  double distance_km = 0.0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Latitude-band bucketing over an EntitySet. Queries return exactly the
/// brute-force result; the bands only prune candidates.
class NeighborIndex {
 public:
  NeighborIndex(const EntitySet& entities, double radius_km);

  /// Entities other than `entity` within radius_km, ascending by distance,
  /// ties broken by id.
  std::vector<Neighbor> within(std::size_t entity) const;

 private:
  const EntitySet* entities_;
  double radius_km_;
  double band_deg_;
  std::vector<std::size_t> order_;  // entity indices sorted by latitude
};

/// One-shot query; same contract as NeighborIndex::within.
std::vector<Neighbor> neighbors_within(std::size_t entity, const EntitySet& entities, double radius_km);

}  // namespace sstkg
