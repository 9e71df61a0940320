#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace eegdiff::experiment {

enum class SeriesStyle { Line, LineMarkers, Dotted, Points };

struct Series {
  std::string label;
  std::string color;  // any SVG color
  std::vector<double> x;
  std::vector<double> y;
  SeriesStyle style = SeriesStyle::Line;
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 720;
  int height = 440;
  std::vector<Series> series;
};

// Tick positions covering [lo, hi] at a 1/2/5 x 10^k step.
std::vector<double> nice_ticks(double lo, double hi, int target_count = 6);

std::string render_svg(const Figure& figure);
void write_svg(const Figure& figure, const std::filesystem::path& file);

}  // namespace eegdiff::experiment
