#include "mmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmm/error.hpp"

namespace mmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ChainSeries split_chains(const ChainSeries &chains) {
  ChainSeries out;
  for (const auto &c : chains) {
    const std::size_t half = c.size() / 2;
    if (half == 0) continue;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

double mean_of(const std::vector<double> &v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(const std::vector<double> &v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Biased autocovariance at `lag` (divides by n).
double autocovariance(const std::vector<double> &v, double mean, std::size_t lag) {
  const std::size_t n = v.size();
  double s = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i) s += (v[i] - mean) * (v[i + lag] - mean);
  return s / static_cast<double>(n);
}

}  // namespace

double split_rhat(const ChainSeries &chains) {
  const ChainSeries split = split_chains(chains);
  if (split.size() < 2) return kNaN;
  const std::size_t n = split.front().size();
  std::vector<double> means;
  double W = 0.0;
  for (const auto &c : split) {
    means.push_back(mean_of(c));
    W += variance_of(c);
  }
  W /= static_cast<double>(split.size());
  const double B_over_n = variance_of(means);
  if (W == 0.0) return B_over_n == 0.0 ? kNaN : std::numeric_limits<double>::infinity();
  const double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * W + B_over_n;
  return std::sqrt(var_plus / W);
}

double effective_sample_size(const ChainSeries &chains) {
  const ChainSeries split = split_chains(chains);
  const std::size_t m = split.size();
  if (m == 0) return kNaN;
  const std::size_t n = split.front().size();
  if (n < 4) return kNaN;

  std::vector<double> chain_mean(m);
  std::vector<double> chain_var(m);
  for (std::size_t i = 0; i < m; ++i) {
    chain_mean[i] = mean_of(split[i]);
    chain_var[i] = autocovariance(split[i], chain_mean[i], 0) * n / (n - 1.0);
  }
  const double mean_var = mean_of(chain_var);
  double var_plus = mean_var * (n - 1.0) / n;
  if (m > 1) var_plus += variance_of(chain_mean);
  if (!(var_plus > 0.0)) return kNaN;

  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t i = 0; i < m; ++i) acov += autocovariance(split[i], chain_mean[i], lag);
    acov /= static_cast<double>(m);
    return 1.0 - (mean_var - acov) / var_plus;
  };

  std::vector<double> rho_hat(n + 1, 0.0);
  double rho_even = 1.0;
  double rho_odd = rho(1);
  rho_hat[0] = rho_even;
  rho_hat[1] = rho_odd;
  std::size_t t = 1;
  while (t + 2 < n - 3 && rho_even + rho_odd > 0.0) {
    rho_even = rho(t + 1);
    rho_odd = rho(t + 2);
    if (rho_even + rho_odd >= 0.0) {
      rho_hat[t + 1] = rho_even;
      rho_hat[t + 2] = rho_odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  // Initial monotone sequence.
  for (std::size_t k = 1; k + 2 <= max_t; k += 2) {
    const double prev = rho_hat[k - 1] + rho_hat[k];
    if (rho_hat[k + 1] + rho_hat[k + 2] > prev) {
      rho_hat[k + 1] = prev / 2.0;
      rho_hat[k + 2] = prev / 2.0;
    }
  }
  const double total = static_cast<double>(m * n);
  double tau = -1.0;
  for (std::size_t k = 0; k <= max_t; ++k) tau += 2.0 * rho_hat[k];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double to_original_units(const ParamInfo &info, const ScaleInfo &scale, double value) {
  switch (info.unit.kind) {
    case Unit::Kind::None: return value;
    case Unit::Kind::Response: return value * scale.response_scale;
    case Unit::Kind::Spend: return value * scale.media_scale[info.unit.index];
    case Unit::Kind::ResponsePerSpend:
      return value * scale.response_scale / scale.media_scale[info.unit.index];
    case Unit::Kind::ResponsePerControl:
      return value * scale.response_scale / scale.control_scale[info.unit.index];
  }
  return value;
}

std::vector<ParameterSummary> posterior_summary(const PosteriorDraws &draws) {
  if (draws.chains < 2)
    throw Error(ErrorCode::InvalidArgument, "posterior_summary needs at least 2 chains");
  std::vector<ParameterSummary> out;
  for (std::size_t p = 0; p < draws.dimension(); ++p) {
    std::vector<double> v = draws.parameter(p);
    if (draws.scale)
      for (double &x : v) x = to_original_units(draws.params[p], *draws.scale, x);
    ParameterSummary s;
    s.name = draws.params[p].name;
    s.mean = mean_of(v);
    s.sd = std::sqrt(variance_of(v));
    s.q05 = quantile(v, 0.05);
    s.q50 = quantile(v, 0.50);
    s.q95 = quantile(v, 0.95);
    s.rhat = p < draws.rhat.size() ? draws.rhat[p] : kNaN;
    s.ess = p < draws.ess.size() ? draws.ess[p] : kNaN;
    s.degenerate = std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    if (s.degenerate) {
      s.sd = 0.0;
      s.rhat = kNaN;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace mmm
