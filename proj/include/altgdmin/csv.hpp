#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace altgdmin::csv {

/// Shortest decimal form that round-trips; "nan" / "inf" / "-inf" for non-finite values.
std::string format_double(double v);

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;

  /// Column position by name; throws std::out_of_range if absent.
  std::size_t column(std::string_view name) const;
};

/// Plain comma-separated file, header row first, no quoting (none of our fields need it).
Table read(const std::filesystem::path &path);
void write(const std::filesystem::path &path, const Table &table);

} // namespace altgdmin::csv
