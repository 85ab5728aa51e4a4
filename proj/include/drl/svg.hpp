#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace drl::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // optional half-width drawn as a shaded region around y
};

struct Bar {
  std::string label;
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

inline constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
inline constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

inline void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

inline std::string header(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" + num(kH) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<text x=\"" + num(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) + "</text>\n";
}

inline std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel, bool x_ticks = true) {
  std::string s;
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kH - kBottom) + "\" x2=\"" + num(kW - kRight) + "\" y2=\"" +
       num(kH - kBottom) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(kH - kBottom) +
       "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(f.py(yv) + 4) + "\" text-anchor=\"end\">" + tick(yv) + "</text>\n";
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(f.py(yv)) + "\" x2=\"" + num(kW - kRight) + "\" y2=\"" +
         num(f.py(yv)) + "\" stroke=\"#e0e0e0\"/>\n";
    if (x_ticks) {
      const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
      s += "<text x=\"" + num(f.px(xv)) + "\" y=\"" + num(kH - kBottom + 16) + "\" text-anchor=\"middle\">" + tick(xv) +
           "</text>\n";
    }
  }
  s += "<text x=\"" + num((kLeft + kW - kRight) / 2) + "\" y=\"" + num(kH - 12) + "\" text-anchor=\"middle\">" +
       escape(xlabel) + "</text>\n";
  s += "<text transform=\"translate(16," + num((kTop + kH - kBottom) / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + escape(ylabel) + "</text>\n";
  return s;
}

}  // namespace detail

inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<Series>& series) {
  using namespace detail;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double b = i < s.band.size() ? s.band[i] : 0.0;
      if (!any) {
        x0 = x1 = s.x[i];
        y0 = s.y[i] - b;
        y1 = s.y[i] + b;
        any = true;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i] - b);
      y1 = std::max(y1, s.y[i] + b);
    }
  widen(x0, x1);
  widen(y0, y1);
  const Frame f{x0, x1, y0, y1};
  std::string out = header(title) + axes(f, xlabel, ylabel);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kColours[k % std::size(kColours)];
    if (!s.band.empty() && s.band.size() == s.y.size() && !s.x.empty()) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i) pts += num(f.px(s.x[i])) + "," + num(f.py(s.y[i] + s.band[i])) + " ";
      for (std::size_t i = s.x.size(); i-- > 0;) pts += num(f.px(s.x[i])) + "," + num(f.py(s.y[i] - s.band[i])) + " ";
      out += "<polygon points=\"" + pts + "\" fill=\"" + colour + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    }
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) pts += num(f.px(s.x[i])) + "," + num(f.py(s.y[i])) + " ";
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\"/>\n";
    out += "<text x=\"" + num(kW - kRight - 4) + "\" y=\"" + num(kTop + 14 * (k + 1)) + "\" text-anchor=\"end\" fill=\"" +
           colour + "\">" + escape(s.label) + "</text>\n";
  }
  return out + "</svg>\n";
}

/// Bars are drawn in the given order (callers sort for rankings).
inline std::string bar_chart(const std::string& title, const std::string& ylabel, const std::vector<Bar>& bars) {
  using namespace detail;
  double y0 = 0, y1 = 0;
  for (const auto& b : bars) {
    y0 = std::min(y0, b.value - b.error);
    y1 = std::max(y1, b.value + b.error);
  }
  widen(y0, y1);
  const Frame f{0, double(std::max<std::size_t>(bars.size(), 1)), y0, y1};
  std::string out = header(title) + axes(f, "", ylabel, false);
  const double slot = (kW - kLeft - kRight) / std::max<std::size_t>(bars.size(), 1);
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const auto& b = bars[k];
    const double left = kLeft + slot * (k + 0.15), width = slot * 0.7;
    const double top = f.py(std::max(b.value, 0.0)), bottom = f.py(std::min(b.value, 0.0));
    out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(width) + "\" height=\"" +
           num(bottom - top) + "\" fill=\"" + kColours[k % std::size(kColours)] + "\"/>\n";
    if (b.error > 0) {
      const double cx = left + width / 2;
      out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(f.py(b.value - b.error)) + "\" x2=\"" + num(cx) + "\" y2=\"" +
             num(f.py(b.value + b.error)) + "\" stroke=\"black\"/>\n";
    }
    out += "<text x=\"" + num(left + width / 2) + "\" y=\"" + num(kH - kBottom + 16) + "\" text-anchor=\"middle\">" +
           escape(b.label) + "</text>\n";
    out += "<text x=\"" + num(left + width / 2) + "\" y=\"" + num(top - 4) + "\" text-anchor=\"middle\">" + tick(b.value) +
           "</text>\n";
  }
  return out + "</svg>\n";
}

}  // namespace drl::svg
