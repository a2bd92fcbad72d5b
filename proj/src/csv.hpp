#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dxt::detail {

// Minimal comma splitting for the flat, quote-free CSV files this library writes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      return fields;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(std::string_view text, std::string_view context);

// %.17g, which round-trips every finite double.
std::string format_double(double value);

}  // namespace dxt::detail
