#include "mmm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mmm/error.hpp"

namespace mmm {

FitMetrics fit_metrics(const Eigen::Ref<const Eigen::VectorXd> &y,
                       const Eigen::Ref<const Eigen::VectorXd> &y_hat) {
  if (y.size() != y_hat.size())
    throw Error(ErrorCode::DimensionMismatch, "observed and predicted lengths differ");
  if (y.size() < 2) throw Error(ErrorCode::InvalidArgument, "fit metrics need at least 2 points");
  if ((y.array() == 0.0).all()) throw Error(ErrorCode::AllZeroResponse, "every observed value is zero");

  const auto n = static_cast<double>(y.size());
  const Eigen::VectorXd resid = y - y_hat;
  const double y_mean = y.mean();
  const double sst = (y.array() - y_mean).square().sum();
  const double sse = resid.squaredNorm();
  const double resid_var = (resid.array() - resid.mean()).square().sum() / n;
  const double y_var = sst / n;

  FitMetrics m;
  m.r2 = 1.0 - sse / sst;
  m.explained_variance = 1.0 - resid_var / y_var;
  double ape = 0.0;
  std::size_t used = 0;
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    if (y[t] == 0.0) {
      ++m.excluded_zero_weeks;
      continue;
    }
    ape += std::abs(resid[t]) / std::abs(y[t]);
    ++used;
  }
  m.mape = ape / static_cast<double>(used);
  m.accuracy_pct = 100.0 - 100.0 * m.mape;
  return m;
}

int classify_region(double median_spend, double km, const RegionThresholds &t) {
  if (!(km > 0.0)) throw Error(ErrorCode::InvalidArgument, "K_M must be positive");
  if (median_spend < t.lower * km) return 1;
  if (median_spend <= t.upper * km) return 2;
  return 3;
}

double median(const Eigen::Ref<const Eigen::VectorXd> &x) {
  if (x.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> v(x.data(), x.data() + x.size());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

ChannelEconomics channel_economics(const Eigen::Ref<const Eigen::VectorXd> &spend,
                                   const Eigen::Ref<const Eigen::VectorXd> &contribution,
                                   double conversions, double km, double response_total,
                                   const RegionThresholds &thresholds) {
  if (spend.size() != contribution.size())
    throw Error(ErrorCode::DimensionMismatch, "spend and contribution lengths differ");
  ChannelEconomics e;
  e.total_spend = spend.sum();
  if (!(e.total_spend > 0.0)) throw Error(ErrorCode::InvalidArgument, "total spend must be positive");
  e.media_outcome = contribution.sum();
  e.roas = e.media_outcome / e.total_spend;
  if (conversions != 0.0 && std::isfinite(conversions)) e.cpa = e.total_spend / conversions;
  if (std::isfinite(response_total) && response_total != 0.0)
    e.contribution_pct = 100.0 * e.media_outcome / response_total;
  e.km = km;
  if (std::isnan(km)) {
    e.km_normalized = km;
    return e;
  }
  e.km_normalized = km / e.total_spend;
  e.region = classify_region(median(spend), km, thresholds);
  return e;
}

ChannelEconomics channel_economics(const Eigen::Ref<const Eigen::VectorXd> &spend,
                                   const Eigen::Ref<const Eigen::VectorXd> &contribution,
                                   const Eigen::Ref<const Eigen::VectorXd> &conversions, double km,
                                   double response_total, const RegionThresholds &thresholds) {
  return channel_economics(spend, contribution, conversions.sum(), km, response_total, thresholds);
}

}  // namespace mmm
