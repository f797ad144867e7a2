#include "speckle/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "speckle/csv.hpp"

namespace speckle {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

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

// Tick spacing of 1, 2 or 5 times a power of ten giving about `target` ticks.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo <= 0.0) {
      const double d = std::max(std::abs(lo) * 0.1, 1e-12);
      lo -= d;
      hi += d;
    }
  }
};

}  // namespace

std::string render_svg(const Plot& plot) {
  const double left = 80, right = 20, top = 40, bottom = 60;
  const double pw = plot.width - left - right;
  const double ph = plot.height - top - bottom;

  const auto ty = [&](double y) { return plot.log_y ? (y > 0 ? std::log10(y) : NAN) : y; };
  Range xr, yr;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xr.add(s.x[i] * plot.x_scale);
      const double e = s.y_error.empty() ? 0.0 : s.y_error[i];
      yr.add(ty(s.y[i] - e));
      yr.add(ty(s.y[i] + e));
      yr.add(ty(s.y[i]));
    }
  }
  xr.pad();
  yr.pad();
  const double xstep = nice_step(xr.hi - xr.lo, 8);
  const double ystep = plot.log_y ? 1.0 : nice_step(yr.hi - yr.lo, 6);
  xr.lo = std::floor(xr.lo / xstep) * xstep;
  xr.hi = std::ceil(xr.hi / xstep) * xstep;
  yr.lo = std::floor(yr.lo / ystep) * ystep;
  yr.hi = std::ceil(yr.hi / ystep) * ystep;

  const auto px = [&](double x) { return left + (x * plot.x_scale - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto py = [&](double y) { return top + (1.0 - (ty(y) - yr.lo) / (yr.hi - yr.lo)) * ph; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(plot.width) +
         "\" height=\"" + std::to_string(plot.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(plot.title) + "</text>\n";

  svg += "<g stroke=\"#ddd\">\n";
  for (double x = xr.lo; x <= xr.hi + 0.5 * xstep; x += xstep) {
    const double X = left + (x - xr.lo) / (xr.hi - xr.lo) * pw;
    svg += "<line x1=\"" + num(X) + "\" y1=\"" + num(top) + "\" x2=\"" + num(X) + "\" y2=\"" + num(top + ph) + "\"/>\n";
  }
  for (double y = yr.lo; y <= yr.hi + 0.5 * ystep; y += ystep) {
    const double Y = top + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph;
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(Y) + "\" x2=\"" + num(left + pw) + "\" y2=\"" + num(Y) + "\"/>\n";
  }
  svg += "</g>\n<g text-anchor=\"middle\">\n";
  for (double x = xr.lo; x <= xr.hi + 0.5 * xstep; x += xstep) {
    const double X = left + (x - xr.lo) / (xr.hi - xr.lo) * pw;
    svg += "<text x=\"" + num(X) + "\" y=\"" + num(top + ph + 18) + "\">" + tick_label(x) + "</text>\n";
  }
  svg += "</g>\n<g text-anchor=\"end\">\n";
  for (double y = yr.lo; y <= yr.hi + 0.5 * ystep; y += ystep) {
    const double Y = top + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph;
    const std::string label = plot.log_y ? "1e" + tick_label(y) : tick_label(y);
    svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(Y + 4) + "\">" + label + "</text>\n";
  }
  svg += "</g>\n";
  svg += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" +
         num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(plot.height - 16.0) +
         "\" text-anchor=\"middle\">" + escape(plot.x_label) + "</text>\n";
  svg += "<text transform=\"translate(18," + num(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(plot.y_label) + "</text>\n";

  for (const auto& s : plot.series) {
    const std::string color = escape(s.color);
    if (!s.y_error.empty()) {
      svg += "<g stroke=\"" + color + "\" stroke-width=\"0.8\">\n";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double y0 = py(s.y[i] - s.y_error[i]), y1 = py(s.y[i] + s.y_error[i]);
        if (!std::isfinite(y0) || !std::isfinite(y1)) continue;
        svg += "<line x1=\"" + num(px(s.x[i])) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(px(s.x[i])) +
               "\" y2=\"" + num(y1) + "\"/>\n";
      }
      svg += "</g>\n";
    }
    if (s.style == SeriesStyle::Markers) {
      svg += "<g fill=\"" + color + "\">\n";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double Y = py(s.y[i]);
        if (!std::isfinite(Y)) continue;
        svg += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(Y) + "\" r=\"2\"/>\n";
      }
      svg += "</g>\n";
    } else {
      std::string d;
      bool pen_down = false;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double Y = py(s.y[i]);
        if (!std::isfinite(Y)) {
          pen_down = false;
          continue;
        }
        if (s.style == SeriesStyle::Steps && pen_down) d += "H" + num(px(s.x[i])) + " ";
        d += (pen_down ? "L" : "M") + num(px(s.x[i])) + " " + num(Y) + " ";
        pen_down = true;
      }
      svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    }
  }

  double ly = top + 14;
  for (const auto& s : plot.series) {
    if (s.label.empty()) continue;
    const double lx = left + pw - 170;
    svg += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly - 8) + "\" width=\"12\" height=\"8\" fill=\"" +
           escape(s.color) + "\"/>\n";
    svg += "<text x=\"" + num(lx + 18) + "\" y=\"" + num(ly) + "\">" + escape(s.label) + "</text>\n";
    ly += 16;
  }
  svg += "</svg>\n";
  return svg;
}

void write_svg(const Plot& plot, const std::filesystem::path& path) {
  write_text(path, render_svg(plot));
}

}  // namespace speckle
