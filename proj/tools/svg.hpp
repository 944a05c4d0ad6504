#pragma once

#include <string>
#include <vector>

namespace mmm::cli {

/// Minimal static chart: linear axes, polylines, points and text labels.
class SvgChart {
 public:
  SvgChart(std::string title, std::string x_label, std::string y_label, int width = 720,
           int height = 420);

  void line(const std::vector<double> &x, const std::vector<double> &y, const std::string &color,
            const std::string &label = {}, bool dashed = false);
  void points(const std::vector<double> &x, const std::vector<double> &y, const std::string &color,
              const std::string &label = {});
  /// Marker at (x, y) with a text annotation.
  void marker(double x, double y, const std::string &color, const std::string &text);
  /// Shaded band between two curves.
  void band(const std::vector<double> &x, const std::vector<double> &lower,
            const std::vector<double> &upper, const std::string &color);

  std::string render() const;

 private:
  struct Series {
    enum class Kind { Line, Points, Marker, Band } kind;
    std::vector<double> x, y, y2;
    std::string color, label;
    bool dashed = false;
  };

  std::string title_, x_label_, y_label_;
  int width_, height_;
  std::vector<Series> series_;
};

/// Categorical color for series `i`.
std::string palette(std::size_t i);

}  // namespace mmm::cli
