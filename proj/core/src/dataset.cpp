#include "sstkg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sstkg/error.hpp"

namespace sstkg {

void GeoPoint::validate() const {
  if (!std::isfinite(latitude) || latitude < -90.0 || latitude > 90.0) {
    std::ostringstream msg;
    msg << "latitude " << latitude << " outside [-90, 90]";
    throw ValidationError(msg.str());
  }
  if (!std::isfinite(longitude) || longitude < -180.0 || longitude > 180.0) {
    std::ostringstream msg;
    msg << "longitude " << longitude << " outside [-180, 180]";
    throw ValidationError(msg.str());
  }
}

void TimeIndex::validate() const {
  if (slot_count < 1) throw ValidationError("time index needs at least one slot");
  if (slot_length <= 0) throw ValidationError("time index slot_length must be positive");
}

double TimeSeries::value(std::size_t t) const {
  if (!present(t)) throw std::out_of_range("record absent at slot " + std::to_string(t));
  return *values_[t];
}

void TimeSeries::set(std::size_t t, double value) {
  if (!std::isfinite(value) || value < 0.0) {
    std::ostringstream msg;
    msg << "record value " << value << " must be finite and non-negative";
    throw ValidationError(msg.str());
  }
  values_.at(t) = value;
}

double TimeSeries::sum(SlotRange range) const {
  double total = 0.0;
  const std::size_t end = std::min(range.end, values_.size());
  for (std::size_t t = range.begin; t < end; ++t) {
    if (values_[t]) total += *values_[t];
  }
  return total;
}

std::size_t TimeSeries::present_count(SlotRange range) const {
  std::size_t count = 0;
  const std::size_t end = std::min(range.end, values_.size());
  for (std::size_t t = range.begin; t < end; ++t) count += values_[t].has_value() ? 1 : 0;
  return count;
}

std::optional<double> TimeSeries::first_present() const {
  for (const auto& v : values_) {
    if (v) return v;
  }
  return std::nullopt;
}

std::optional<double> TimeSeries::last_present_before(std::size_t t) const {
  for (std::size_t s = std::min(t, values_.size()); s-- > 0;) {
    if (values_[s]) return values_[s];
  }
  return std::nullopt;
}

EntitySet::EntitySet(TimeIndex time_index, std::vector<Entity> entities)
    : time_index_(time_index), entities_(std::move(entities)) {
  time_index_.validate();
  std::sort(entities_.begin(), entities_.end(),
            [](const Entity& a, const Entity& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    const Entity& e = entities_[i];
    if (e.id.empty()) throw ValidationError("entity with empty id");
    if (i > 0 && entities_[i - 1].id == e.id) throw ValidationError("duplicate entity id '" + e.id + "'");
    try {
      e.location.validate();
    } catch (const ValidationError& err) {
      throw ValidationError("entity '" + e.id + "': " + err.what());
    }
    if (e.series.size() != time_index_.slot_count) {
      throw ValidationError("entity '" + e.id + "': series length " + std::to_string(e.series.size()) +
                            " != slot_count " + std::to_string(time_index_.slot_count));
    }
  }
  recompute_overall(time_index_.full_range());
}

std::optional<std::size_t> EntitySet::index_of(std::string_view id) const {
  auto it = std::lower_bound(entities_.begin(), entities_.end(), id,
                             [](const Entity& e, std::string_view key) { return e.id < key; });
  if (it == entities_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - entities_.begin());
}

const Entity& EntitySet::at(std::string_view id) const {
  auto idx = index_of(id);
  if (!idx) throw ValidationError("unknown entity id '" + std::string(id) + "'");
  return entities_[*idx];
}

void EntitySet::recompute_overall(SlotRange window) {
  if (window.end > time_index_.slot_count || window.empty()) {
    throw ValidationError("overall-record window [" + std::to_string(window.begin) + ", " +
                          std::to_string(window.end) + ") invalid for " +
                          std::to_string(time_index_.slot_count) + " slots");
  }
  overall_window_ = window;
  for (Entity& e : entities_) e.overall_record = e.series.sum(window);
}

}  // namespace sstkg
