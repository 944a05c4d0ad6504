#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mmm {

/// Prior families. Truncation to the parameter's bounds is part of the
/// density: log_density returns the normalized truncated log pdf.
struct Prior {
  enum class Family { Flat, Normal, HalfNormal, Beta, Uniform, Gamma };

  Family family = Family::Flat;
  double p1 = 0.0;  // Normal: mean; HalfNormal: scale; Beta: a; Uniform: lo; Gamma: shape
  double p2 = 0.0;  // Normal: sd; Beta: b; Uniform: hi; Gamma: rate

  static Prior flat() { return {}; }
  static Prior normal(double mean, double sd) { return {Family::Normal, mean, sd}; }
  static Prior half_normal(double scale) { return {Family::HalfNormal, scale, 0.0}; }
  static Prior beta(double a, double b) { return {Family::Beta, a, b}; }
  static Prior uniform(double lo, double hi) { return {Family::Uniform, lo, hi}; }
  static Prior gamma(double shape, double rate) { return {Family::Gamma, shape, rate}; }

  std::string describe() const;
};

struct Bounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x > lower && x < upper; }
  bool has_lower() const { return lower > -std::numeric_limits<double>::infinity(); }
  bool has_upper() const { return upper < std::numeric_limits<double>::infinity(); }
};

/// How a parameter's value converts back to original data units.
struct Unit {
  enum class Kind { None, Response, Spend, ResponsePerSpend, ResponsePerControl };
  Kind kind = Kind::None;
  int index = -1;  // channel for Spend / ResponsePerSpend, control otherwise
};

struct ParamInfo {
  std::string name;
  Bounds bounds;
  Prior prior;
  Unit unit;
};

/// Normalized log density of `p` truncated to `b`, and its derivative.
double log_prior(const Prior &p, const Bounds &b, double x, double *dlogp = nullptr);

/// Unconstrained <-> constrained maps: identity, lower + exp(u), or a scaled
/// logistic on (lower, upper).
double constrain(const Bounds &b, double u);
double unconstrain(const Bounds &b, double x);
/// log |dx/du| and, optionally, dx/du and d(log|dx/du|)/du.
double log_jacobian(const Bounds &b, double u, double *dx_du = nullptr,
                    double *dlogj_du = nullptr);

}  // namespace mmm
