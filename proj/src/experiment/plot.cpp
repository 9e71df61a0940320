#include "eegdiff/experiment/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "eegdiff/core/errors.hpp"

namespace eegdiff::experiment {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

}  // namespace

std::vector<double> nice_ticks(double lo, double hi, int target_count) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / std::max(1, target_count - 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw * (1 - 1e-9)) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + step * 1e-9; t += step) {
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return ticks;
}

std::string render_svg(const Figure& fig) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : fig.series) {
    if (s.x.size() != s.y.size()) throw ArgumentError("series '" + s.label + "' has mismatched x and y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  if (!std::isfinite(xlo)) {
    xlo = ylo = 0;
    xhi = yhi = 1;
  }
  if (xhi == xlo) {
    xlo -= 1;
    xhi += 1;
  }
  if (yhi == ylo) {
    ylo -= 1;
    yhi += 1;
  }
  const double ypad = (yhi - ylo) * 0.05;
  ylo -= ypad;
  yhi += ypad;

  const double left = 70, right = 170, top = 40, bottom = 55;
  const double pw = fig.width - left - right, ph = fig.height - top - bottom;
  auto px = [&](double x) { return left + (x - xlo) / (xhi - xlo) * pw; };
  auto py = [&](double y) { return top + (1 - (y - ylo) / (yhi - ylo)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fig.width << "\" height=\"" << fig.height
    << "\" viewBox=\"0 0 " << fig.width << ' ' << fig.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << fig.width / 2.0 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(fig.title)
    << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : nice_ticks(xlo, xhi)) {
    o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << top + ph << "\" x2=\"" << num(px(t)) << "\" y2=\""
      << top + ph + 5 << "\" stroke=\"black\"/>";
    o << "<text x=\"" << num(px(t)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << num(t)
      << "</text>\n";
  }
  for (double t : nice_ticks(ylo, yhi)) {
    o << "<line x1=\"" << left - 5 << "\" y1=\"" << num(py(t)) << "\" x2=\"" << left << "\" y2=\"" << num(py(t))
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << left - 8 << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">" << num(t)
      << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << fig.height - 12 << "\" text-anchor=\"middle\">"
    << escape(fig.x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(fig.y_label) << "</text>\n";

  int legend_row = 0;
  for (const auto& s : fig.series) {
    o << "<g class=\"series\" data-label=\"" << escape(s.label) << "\">\n";
    if (s.style == SeriesStyle::Points) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"2.5\" fill=\""
          << s.color << "\" fill-opacity=\"0.6\"/>\n";
      }
    } else if (!s.x.empty()) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
      if (s.style == SeriesStyle::Dotted) o << " stroke-dasharray=\"2,4\"";
      o << " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
      o << "\"/>\n";
      if (s.style == SeriesStyle::LineMarkers) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3.5\" fill=\"" << s.color
            << "\"/>\n";
        }
      }
    }
    o << "</g>\n";
    const double ly = top + 10 + 18 * legend_row++;
    const double lx = left + pw + 12;
    if (s.style == SeriesStyle::Points) {
      o << "<circle cx=\"" << lx + 10 << "\" cy=\"" << ly << "\" r=\"4\" fill=\"" << s.color << "\"/>";
    } else {
      o << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 20 << "\" y2=\"" << ly << "\" stroke=\""
        << s.color << "\" stroke-width=\"2\"" << (s.style == SeriesStyle::Dotted ? " stroke-dasharray=\"2,4\"" : "")
        << "/>";
    }
    o << "<text x=\"" << lx + 26 << "\" y=\"" << ly + 4 << "\">" << escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_svg(const Figure& figure, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw RunError("cannot write " + file.string());
  out << render_svg(figure);
}

}  // namespace eegdiff::experiment
