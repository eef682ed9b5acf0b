#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"

namespace raf::lab {

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// A table of cells already formatted as text. Cells never contain commas,
/// quotes or newlines.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// First line is "# manifest <hash>", then the header, then one line per row.
std::string render_csv(const Table& t, const std::string& manifest_hash);

/// Inverse of render_csv; the manifest line is optional. Throws
/// ConfigError on malformed input.
Table parse_csv(const std::string& text);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  /// Polyline through the points with a circle marker per point; otherwise
  /// markers only.
  bool lines = true;
};

std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series,
                       const std::string& manifest_hash);

/// Writes `text` to dir/name, creating dir if needed.
void write_text(const std::filesystem::path& dir, const std::string& name,
                const std::string& text);

struct Formats {
  bool csv = true;
  bool json = true;
  bool svg = false;
};

/// Parses "csv,json,svg" (any subset, any order).
Formats parse_formats(const std::string& text);

}  // namespace raf::lab
