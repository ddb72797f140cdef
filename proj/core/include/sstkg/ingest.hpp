#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sstkg/dataset.hpp"

namespace sstkg {

struct ParsedDataset {
  EntitySet entities;
  /// Entities listed in the entities file that had no present record.
  std::vector<std::string> excluded_ids;
  std::vector<std::string> warnings;
};

/// Reads `entities.csv` (header `id,lat,lon,category`) and `records.csv`
/// (header `id,slot,value`). Malformed rows raise ValidationError naming the
/// file, line and field.
ParsedDataset parse_dataset(const std::filesystem::path& entities_file,
                            const std::filesystem::path& records_file,
                            const TimeIndex& time_index);

/// RFC-4180 field splitting for a single line. Exposed for tests.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace sstkg
