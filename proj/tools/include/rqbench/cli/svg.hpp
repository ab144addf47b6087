#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rqbench::cli {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y), drawn in order
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool log_x = false;
  /// Written as a comment; omit for byte-reproducible output.
  std::optional<std::string> timestamp;
};

/// Self-contained SVG line plot. Every series is also embedded as a CSV
/// block inside an XML comment.
std::string render_svg(const PlotSpec& spec);

/// UTC "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace rqbench::cli
