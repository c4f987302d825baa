#pragma once

// Small self-contained SVG charts for the CLI diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "ratingxva/lie.hpp"

namespace ratingxva::app::svg {

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return palette[i % 8];
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '<') out += "&lt;";
    else if (ch == '>') out += "&gt;";
    else if (ch == '&') out += "&amp;";
    else out += ch;
  }
  return out;
}

class Canvas {
 public:
  Canvas(double width, double height) : w_(width), h_(height) {}

  void text(double x, double y, const std::string& s, int size = 11, const char* anchor = "middle") {
    body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"" + std::to_string(size) + "\" text-anchor=\"" + anchor +
             "\" font-family=\"sans-serif\">" + escape(s) + "</text>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "none") {
    body_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) + "\" fill=\"" + fill +
             "\" stroke=\"" + stroke + "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width = 1.0,
                double opacity = 1.0, bool dashed = false) {
    if (pts.empty()) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) + "\" stroke-opacity=\"" + fmt(opacity) +
             "\"" + (dashed ? " stroke-dasharray=\"4 3\"" : "") + " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) body_ += (i ? " " : "") + fmt(pts[i].first) + "," + fmt(pts[i].second);
    body_ += "\"/>\n";
  }

  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w_) + "\" height=\"" + fmt(h_) + "\" viewBox=\"0 0 " + fmt(w_) +
           " " + fmt(h_) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
  }

 private:
  double w_, h_;
  std::string body_;
};

/// Maps data coordinates into a framed panel.
struct Panel {
  double x, y, w, h;
  double x0, x1, y0, y1;

  double px(double v) const { return x + (x1 > x0 ? (v - x0) / (x1 - x0) : 0.5) * w; }
  double py(double v) const { return y + h - (y1 > y0 ? (v - y0) / (y1 - y0) : 0.5) * h; }

  void frame(Canvas& c, const std::string& title) const {
    c.rect(x, y, w, h, "none", "#444");
    c.text(x + w / 2, y - 4, title, 11);
    c.text(x - 3, y + h, fmt(y0), 8, "end");
    c.text(x - 3, y + 8, fmt(y1), 8, "end");
  }
};

inline std::pair<double, double> padded_range(double lo, double hi) {
  if (!(hi > lo)) return {lo - 0.5, hi + 0.5};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

/// One panel per matrix entry, each showing `series[p][t]` for every trajectory p.
/// values(p, t, i, j) supplies entry (i, j) of trajectory p at time index t.
template <class Values>
std::string entry_fan(const std::vector<std::string>& labels, const std::vector<double>& times, std::size_t paths, Values&& values,
                      const std::string& title) {
  const auto k = labels.size();
  const double cell = 170, margin = 40;
  Canvas c(margin + static_cast<double>(k) * cell, margin + static_cast<double>(k) * cell + 10);
  c.text((margin + static_cast<double>(k) * cell) / 2, 16, title, 13);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t p = 0; p < paths; ++p)
        for (std::size_t t = 0; t < times.size(); ++t) {
          lo = std::min(lo, values(p, t, i, j));
          hi = std::max(hi, values(p, t, i, j));
        }
      const auto [y0, y1] = padded_range(lo, hi);
      const Panel panel{margin + static_cast<double>(j) * cell, margin + static_cast<double>(i) * cell, cell - 30, cell - 30,
                        times.front(), times.back(), y0, y1};
      panel.frame(c, labels[i] + " -> " + labels[j]);
      for (std::size_t p = 0; p < paths; ++p) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t t = 0; t < times.size(); ++t) pts.emplace_back(panel.px(times[t]), panel.py(values(p, t, i, j)));
        c.polyline(pts, color(p), 0.6, 0.5);
      }
    }
  return c.str();
}

/// Histogram per matrix entry of samples(p, i, j), p < count.
template <class Sample>
std::string entry_histograms(const std::vector<std::string>& labels, std::size_t count, Sample&& sample, const std::string& title,
                             int bins = 30) {
  const auto k = labels.size();
  const double cell = 170, margin = 40;
  Canvas c(margin + static_cast<double>(k) * cell, margin + static_cast<double>(k) * cell + 10);
  c.text((margin + static_cast<double>(k) * cell) / 2, 16, title, 13);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t p = 0; p < count; ++p) {
        lo = std::min(lo, sample(p, i, j));
        hi = std::max(hi, sample(p, i, j));
      }
      const auto [x0, x1] = padded_range(lo, hi);
      std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
      for (std::size_t p = 0; p < count; ++p) {
        const int b = std::clamp(static_cast<int>((sample(p, i, j) - x0) / (x1 - x0) * bins), 0, bins - 1);
        h[static_cast<std::size_t>(b)] += 1.0;
      }
      const double top = *std::max_element(h.begin(), h.end());
      const Panel panel{margin + static_cast<double>(j) * cell, margin + static_cast<double>(i) * cell, cell - 30, cell - 30, x0, x1, 0.0, top};
      panel.frame(c, labels[i] + " -> " + labels[j]);
      const double bw = panel.w / bins;
      for (int b = 0; b < bins; ++b) {
        const double v = h[static_cast<std::size_t>(b)];
        if (v <= 0.0) continue;
        c.rect(panel.x + b * bw, panel.py(v), bw, panel.y + panel.h - panel.py(v), "#1f77b4");
      }
      c.text(panel.x, panel.y + panel.h + 10, fmt(lo), 8, "start");
      c.text(panel.x + panel.w, panel.y + panel.h + 10, fmt(hi), 8, "end");
    }
  return c.str();
}

/// Occupancy probability over time per initial rating: simulated (solid) and model mean (dashed).
inline std::string occupancy(const std::vector<std::string>& labels, const std::vector<int>& initial, const std::vector<double>& times,
                             const std::vector<Matrix>& simulated, const std::vector<Matrix>& model, const std::string& title) {
  const double cell = 220, margin = 40;
  Canvas c(margin + static_cast<double>(initial.size()) * cell, cell + 2 * margin + 20);
  c.text((margin + static_cast<double>(initial.size()) * cell) / 2, 16, title, 13);
  for (std::size_t g = 0; g < initial.size(); ++g) {
    const int i = initial[g];
    const Panel panel{margin + static_cast<double>(g) * cell, margin, cell - 40, cell - 40, times.front(), times.back(), 0.0, 1.0};
    panel.frame(c, "start " + labels[static_cast<std::size_t>(i)]);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      std::vector<std::pair<double, double>> sim, mod;
      for (std::size_t t = 0; t < times.size(); ++t) {
        sim.emplace_back(panel.px(times[t]), panel.py(simulated[t](i, static_cast<Eigen::Index>(j))));
        mod.emplace_back(panel.px(times[t]), panel.py(model[t](i, static_cast<Eigen::Index>(j))));
      }
      c.polyline(sim, color(j), 1.5);
      c.polyline(mod, color(j), 1.0, 0.8, true);
    }
  }
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const double x = margin + static_cast<double>(j) * 60;
    c.rect(x, cell + margin + 2, 10, 10, color(j));
    c.text(x + 14, cell + margin + 11, labels[j], 10, "start");
  }
  return c.str();
}

/// Stacked bars: one bar per pre-default rating, stacks by initial rating.
inline std::string predefault_bars(const std::vector<std::string>& labels, const Matrix& share, const std::string& title) {
  const auto k = static_cast<Eigen::Index>(labels.size());
  const double margin = 50, bar = 60, height = 240;
  Canvas c(margin * 2 + static_cast<double>(k) * bar * 1.5, height + 2 * margin + 20);
  c.text(margin + static_cast<double>(k) * bar * 0.75, 18, title, 13);
  const Panel panel{margin, margin, static_cast<double>(k) * bar * 1.5, height, 0.0, static_cast<double>(k), 0.0, 1.0};
  panel.frame(c, "");
  for (Eigen::Index r = 0; r + 1 < k; ++r) {
    double base = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double v = share(i, r);
      if (v <= 0.0) continue;
      c.rect(panel.x + (static_cast<double>(r) + 0.2) * bar * 1.5, panel.py(base + v), bar, panel.py(base) - panel.py(base + v),
             color(static_cast<std::size_t>(i)));
      base += v;
    }
    c.text(panel.x + (static_cast<double>(r) + 0.2) * bar * 1.5 + bar / 2, panel.y + panel.h + 14, labels[static_cast<std::size_t>(r)], 11);
  }
  for (Eigen::Index i = 0; i + 1 < k; ++i) {
    const double x = margin + static_cast<double>(i) * 70;
    c.rect(x, height + margin + 24, 10, 10, color(static_cast<std::size_t>(i)));
    c.text(x + 14, height + margin + 33, "start " + labels[static_cast<std::size_t>(i)], 10, "start");
  }
  return c.str();
}

}  // namespace ratingxva::app::svg
