#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sstkg {

struct GeoPoint {
  double latitude = 0.0;   // degrees, [-90, 90]
  double longitude = 0.0;  // degrees, [-180, 180]

  /// Throws ValidationError when either coordinate is non-finite or out of range.
  void validate() const;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Half-open slot range [begin, end).
struct SlotRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return size() == 0; }
  bool contains(std::size_t t) const { return t >= begin && t < end; }

  friend bool operator==(const SlotRange&, const SlotRange&) = default;
};

struct TimeIndex {
  std::int64_t start = 0;         // UTC seconds
  std::int64_t slot_length = 86400;  // seconds
  std::size_t slot_count = 1;

  void validate() const;
  SlotRange full_range() const { return {0, slot_count}; }

  friend bool operator==(const TimeIndex&, const TimeIndex&) = default;
};

/// Per-slot records of one entity. Missing slots are explicit, never zero.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(std::size_t slot_count) : values_(slot_count) {}

  std::size_t size() const { return values_.size(); }
  bool present(std::size_t t) const { return t < values_.size() && values_[t].has_value(); }
  std::optional<double> at(std::size_t t) const { return t < values_.size() ? values_[t] : std::nullopt; }
  /// Value at a present slot. Throws std::out_of_range when absent.
  double value(std::size_t t) const;

  /// Throws ValidationError for negative or non-finite values.
  void set(std::size_t t, double value);
  void clear(std::size_t t) { values_.at(t).reset(); }

  double sum(SlotRange range) const;
  std::size_t present_count(SlotRange range) const;
  std::optional<double> first_present() const;
  /// Last present value strictly before slot t.
  std::optional<double> last_present_before(std::size_t t) const;

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  std::vector<std::optional<double>> values_;
};

struct Entity {
  std::string id;
  GeoPoint location;
  std::string category;
  TimeSeries series;
  double overall_record = 0.0;  // sum of present records over the active window

  friend bool operator==(const Entity&, const Entity&) = default;
};

/// Entities sharing one TimeIndex, kept sorted by id so that every consumer
/// sees a canonical order regardless of input ordering.
class EntitySet {
 public:
  EntitySet() = default;
  /// Validates ids (unique, non-empty), locations and series lengths, then sorts
  /// by id and recomputes overall records over the full range.
  EntitySet(TimeIndex time_index, std::vector<Entity> entities);

  const TimeIndex& time_index() const { return time_index_; }
  std::span<const Entity> entities() const { return entities_; }
  std::size_t size() const { return entities_.size(); }
  bool empty() const { return entities_.empty(); }
  const Entity& operator[](std::size_t i) const { return entities_[i]; }

  std::optional<std::size_t> index_of(std::string_view id) const;
  /// Throws ValidationError for unknown ids.
  const Entity& at(std::string_view id) const;

  /// Recomputes every overall_record as the sum of present values in window.
  void recompute_overall(SlotRange window);
  SlotRange overall_window() const { return overall_window_; }

  friend bool operator==(const EntitySet& a, const EntitySet& b) {
    return a.time_index_ == b.time_index_ && a.entities_ == b.entities_;
  }

 private:
  TimeIndex time_index_;
  std::vector<Entity> entities_;
  SlotRange overall_window_;
};

}  // namespace sstkg
