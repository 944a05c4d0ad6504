#pragma once

#include <cstddef>
#include <limits>
#include <optional>

#include <Eigen/Core>

namespace mmm {

struct FitMetrics {
  double r2 = 0.0;
  double explained_variance = 0.0;
  double mape = 0.0;          // over weeks with y != 0
  double accuracy_pct = 0.0;  // 100 (1 - mape)
  std::size_t excluded_zero_weeks = 0;
};

/// Throws AllZeroResponse when no week has y != 0.
FitMetrics fit_metrics(const Eigen::Ref<const Eigen::VectorXd> &y,
                       const Eigen::Ref<const Eigen::VectorXd> &y_hat);

/// Saturation regions: 1 linear (x << K), 2 near half saturation, 3 saturated.
struct RegionThresholds {
  double lower = 0.5;
  double upper = 2.0;
};

int classify_region(double median_spend, double km, const RegionThresholds &t = {});

struct ChannelEconomics {
  double total_spend = 0.0;
  double contribution_pct = std::numeric_limits<double>::quiet_NaN();
  double media_outcome = 0.0;  // sum of attributed contribution
  double roas = 0.0;
  std::optional<double> cpa;   // absent when there are no conversions
  double km = 0.0;
  double km_normalized = 0.0;  // km / total_spend
  int region = 0;              // from the median weekly spend; 0 when km is NaN
};

/// `response_total` (sum of y) is only used for contribution_pct; pass NaN
/// to leave it unset. A NaN `km` (no saturation stage) leaves km_normalized
/// NaN and region 0.
ChannelEconomics channel_economics(const Eigen::Ref<const Eigen::VectorXd> &spend,
                                   const Eigen::Ref<const Eigen::VectorXd> &contribution,
                                   double conversions, double km,
                                   double response_total = std::numeric_limits<double>::quiet_NaN(),
                                   const RegionThresholds &thresholds = {});
ChannelEconomics channel_economics(const Eigen::Ref<const Eigen::VectorXd> &spend,
                                   const Eigen::Ref<const Eigen::VectorXd> &contribution,
                                   const Eigen::Ref<const Eigen::VectorXd> &conversions, double km,
                                   double response_total = std::numeric_limits<double>::quiet_NaN(),
                                   const RegionThresholds &thresholds = {});

double median(const Eigen::Ref<const Eigen::VectorXd> &x);

}  // namespace mmm
