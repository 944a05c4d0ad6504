#include "mmm/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace mmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double softplus(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

double logistic(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace

std::string Prior::describe() const {
  std::ostringstream s;
  switch (family) {
    case Family::Flat: s << "flat"; break;
    case Family::Normal: s << "normal(" << p1 << ", " << p2 << ")"; break;
    case Family::HalfNormal: s << "half_normal(" << p1 << ")"; break;
    case Family::Beta: s << "beta(" << p1 << ", " << p2 << ")"; break;
    case Family::Uniform: s << "uniform(" << p1 << ", " << p2 << ")"; break;
    case Family::Gamma: s << "gamma(" << p1 << ", " << p2 << ")"; break;
  }
  return s.str();
}

double log_prior(const Prior &p, const Bounds &b, double x, double *dlogp) {
  if (dlogp) *dlogp = 0.0;
  if (!(x >= b.lower && x <= b.upper) || std::isnan(x)) return kNegInf;
  switch (p.family) {
    case Prior::Family::Flat:
      return 0.0;
    case Prior::Family::Normal: {
      const double z = (x - p.p1) / p.p2;
      if (dlogp) *dlogp = -z / p.p2;
      const double mass = normal_cdf((b.upper - p.p1) / p.p2) - normal_cdf((b.lower - p.p1) / p.p2);
      return -0.5 * z * z - std::log(p.p2) - kLogSqrt2Pi - std::log(mass);
    }
    case Prior::Family::HalfNormal: {
      if (x < 0.0) return kNegInf;
      const double z = x / p.p1;
      if (dlogp) *dlogp = -z / p.p1;
      const double lo = std::max(b.lower, 0.0);
      const double mass = 2.0 * (normal_cdf(b.upper / p.p1) - normal_cdf(lo / p.p1));
      return std::log(2.0) - 0.5 * z * z - std::log(p.p1) - kLogSqrt2Pi - std::log(mass);
    }
    case Prior::Family::Beta: {
      if (x <= 0.0 || x >= 1.0) return kNegInf;
      if (dlogp) *dlogp = (p.p1 - 1.0) / x - (p.p2 - 1.0) / (1.0 - x);
      const double lo = std::max(b.lower, 0.0);
      const double hi = std::min(b.upper, 1.0);
      double mass = 1.0;
      if (lo > 0.0 || hi < 1.0)
        mass = boost::math::ibeta(p.p1, p.p2, hi) - boost::math::ibeta(p.p1, p.p2, lo);
      const double log_beta =
          std::lgamma(p.p1) + std::lgamma(p.p2) - std::lgamma(p.p1 + p.p2);
      return (p.p1 - 1.0) * std::log(x) + (p.p2 - 1.0) * std::log1p(-x) - log_beta -
             std::log(mass);
    }
    case Prior::Family::Uniform: {
      const double lo = std::max(b.lower, p.p1);
      const double hi = std::min(b.upper, p.p2);
      if (x < lo || x > hi) return kNegInf;
      return -std::log(hi - lo);
    }
    case Prior::Family::Gamma: {
      if (x <= 0.0) return kNegInf;
      const double shape = p.p1;
      const double rate = p.p2;
      if (dlogp) *dlogp = (shape - 1.0) / x - rate;
      const double lo = std::max(b.lower, 0.0);
      double mass = 1.0;
      if (lo > 0.0 || b.has_upper()) {
        const double upper_cdf =
            b.has_upper() ? boost::math::gamma_p(shape, rate * b.upper) : 1.0;
        mass = upper_cdf - boost::math::gamma_p(shape, rate * lo);
      }
      return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) -
             rate * x - std::log(mass);
    }
  }
  return kNegInf;
}

double constrain(const Bounds &b, double u) {
  if (b.has_lower() && b.has_upper()) return b.lower + (b.upper - b.lower) * logistic(u);
  if (b.has_lower()) return b.lower + std::exp(u);
  if (b.has_upper()) return b.upper - std::exp(u);
  return u;
}

double unconstrain(const Bounds &b, double x) {
  if (b.has_lower() && b.has_upper()) {
    const double s = (x - b.lower) / (b.upper - b.lower);
    return std::log(s) - std::log1p(-s);
  }
  if (b.has_lower()) return std::log(x - b.lower);
  if (b.has_upper()) return std::log(b.upper - x);
  return x;
}

double log_jacobian(const Bounds &b, double u, double *dx_du, double *dlogj_du) {
  if (b.has_lower() && b.has_upper()) {
    const double s = logistic(u);
    const double width = b.upper - b.lower;
    if (dx_du) *dx_du = width * s * (1.0 - s);
    if (dlogj_du) *dlogj_du = 1.0 - 2.0 * s;
    return std::log(width) - softplus(-u) - softplus(u);
  }
  if (b.has_lower() || b.has_upper()) {
    const double e = std::exp(u);
    if (dx_du) *dx_du = b.has_lower() ? e : -e;
    if (dlogj_du) *dlogj_du = 1.0;
    return u;
  }
  if (dx_du) *dx_du = 1.0;
  if (dlogj_du) *dlogj_du = 0.0;
  return 0.0;
}

}  // namespace mmm
