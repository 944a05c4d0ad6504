#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace mmm::cli {

namespace {

constexpr int kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;

std::string escape(const std::string &s) {
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

// Round tick step: 1, 2 or 5 times a power of ten.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

std::string tick_label(double v) { return fmt::format("{:.4g}", std::abs(v) < 1e-12 ? 0.0 : v); }

}  // namespace

std::string palette(std::size_t i) {
  static const char *colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

SvgChart::SvgChart(std::string title, std::string x_label, std::string y_label, int width, int height)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)),
      width_(width), height_(height) {}

void SvgChart::line(const std::vector<double> &x, const std::vector<double> &y,
                    const std::string &color, const std::string &label, bool dashed) {
  series_.push_back({Series::Kind::Line, x, y, {}, color, label, dashed});
}

void SvgChart::points(const std::vector<double> &x, const std::vector<double> &y,
                      const std::string &color, const std::string &label) {
  series_.push_back({Series::Kind::Points, x, y, {}, color, label, false});
}

void SvgChart::marker(double x, double y, const std::string &color, const std::string &text) {
  series_.push_back({Series::Kind::Marker, {x}, {y}, {}, color, text, false});
}

void SvgChart::band(const std::vector<double> &x, const std::vector<double> &lower,
                    const std::vector<double> &upper, const std::string &color) {
  series_.push_back({Series::Kind::Band, x, lower, upper, color, {}, false});
}

std::string SvgChart::render() const {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto &s : series_) {
    for (double v : s.x)
      if (std::isfinite(v)) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (const auto *ys : {&s.y, &s.y2})
      for (double v : *ys)
        if (std::isfinite(v)) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0;
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double pw = width_ - kLeft - kRight;
  const double ph = height_ - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
      width_, height_, kLeft + pw / 2, escape(title_));

  const double xs = nice_step(xmax - xmin, 8), ys = nice_step(ymax - ymin, 6);
  for (double t = std::ceil(xmin / xs) * xs; t <= xmax + 1e-9 * xs; t += xs)
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#eee\"/>"
        "<text x=\"{0:.2f}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
        px(t), kTop, kTop + ph, kTop + ph + 15, tick_label(t));
  for (double t = std::ceil(ymin / ys) * ys; t <= ymax + 1e-9 * ys; t += ys)
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#eee\"/>"
        "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5}</text>\n",
        kLeft, py(t), kLeft + pw, kLeft - 5, py(t) + 4, tick_label(t));
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
                     kLeft, kTop, pw, ph);
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
                     height_ - 10, escape(x_label_));
  out += fmt::format(
      "<text x=\"15\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {0})\">{1}</text>\n",
      kTop + ph / 2, escape(y_label_));

  int legend_row = 0;
  for (const auto &s : series_) {
    switch (s.kind) {
      case Series::Kind::Band: {
        std::string path;
        for (std::size_t i = 0; i < s.x.size(); ++i)
          path += fmt::format("{}{:.2f},{:.2f} ", i == 0 ? "M" : "L", px(s.x[i]), py(s.y2[i]));
        for (std::size_t i = s.x.size(); i-- > 0;)
          path += fmt::format("L{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
        out += fmt::format("<path d=\"{}Z\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n", path,
                           s.color);
        break;
      }
      case Series::Kind::Line: {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i)
          if (std::isfinite(s.y[i])) pts += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
        out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{}/>\n",
                           pts, s.color, s.dashed ? " stroke-dasharray=\"5,3\"" : "");
        break;
      }
      case Series::Kind::Points:
        for (std::size_t i = 0; i < s.x.size(); ++i)
          out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(s.x[i]),
                             py(s.y[i]), s.color);
        break;
      case Series::Kind::Marker:
        out += fmt::format(
            "<circle cx=\"{0:.2f}\" cy=\"{1:.2f}\" r=\"4\" fill=\"white\" stroke=\"{2}\" stroke-width=\"2\"/>"
            "<text x=\"{3:.2f}\" y=\"{4:.2f}\" fill=\"{2}\">{5}</text>\n",
            px(s.x[0]), py(s.y[0]), s.color, px(s.x[0]) + 6, py(s.y[0]) - 6, escape(s.label));
        continue;
    }
    if (!s.label.empty()) {
      const double ly = kTop + 12 + 16 * legend_row++;
      out += fmt::format(
          "<rect x=\"{}\" y=\"{:.2f}\" width=\"10\" height=\"10\" fill=\"{}\"/>"
          "<text x=\"{}\" y=\"{:.2f}\">{}</text>\n",
          kLeft + pw + 10, ly - 9, s.color, kLeft + pw + 24, ly, escape(s.label));
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace mmm::cli
