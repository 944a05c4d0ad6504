#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmm/dataset.hpp"
#include "mmm/model.hpp"
#include "mmm/sampler.hpp"

namespace mmm {

/// Everything needed to evaluate a fitted model against its dataset again.
struct FitResult {
  ModelSpec spec;
  SamplerConfig sampler;
  PosteriorDraws draws;  // draws.scale is always set
  std::string fingerprint;
  ColumnMapping mapping;
  std::vector<std::string> channel_names;
  std::vector<std::string> control_names;
};

/// Mean-scales `raw`, builds the model, samples it and attaches ScaleInfo and
/// the dataset fingerprint.
FitResult fit_model(const TimeSeriesDataset &raw, const ModelSpec &spec,
                    const SamplerConfig &sampler, const ColumnMapping &mapping = {});

/// Rebuilds the model on `raw` scaled with the fit's stored ScaleInfo.
/// Throws ChannelMismatch when the columns differ from the fitted ones.
Model rebuild_model(const FitResult &fit, const TimeSeriesDataset &raw);

struct Prediction {
  Eigen::VectorXd mean;   // posterior mean of the mean function
  Eigen::VectorXd lower;  // 5% posterior predictive quantile
  Eigen::VectorXd upper;  // 95% posterior predictive quantile
};

/// Pointwise posterior prediction in original response units. The interval
/// includes observation noise, drawn from a stream seeded by `seed`.
Prediction predict(const FitResult &fit, const TimeSeriesDataset &raw, std::uint64_t seed = 0);

/// Per-week, per-channel attributed response (posterior mean of per-draw
/// contributions) plus the non-media columns, in response units.
struct ContributionMatrix {
  Eigen::MatrixXd values;  // T x M
  std::vector<std::string> channel_names;
  Eigen::VectorXd baseline;
  Eigen::VectorXd trend;
  Eigen::VectorXd seasonality;
  Eigen::MatrixXd controls;  // T x C
  std::vector<std::string> control_names;

  /// Sum of every column; equals the posterior-mean prediction.
  Eigen::VectorXd total() const;
  /// Everything except the media columns.
  Eigen::VectorXd non_media() const;
};

ContributionMatrix decompose(const FitResult &fit, const TimeSeriesDataset &raw);

/// Posterior mean of the per-channel contributions with the collision mix
/// switched off (mm_boltzmann); identical to decompose().values otherwise.
Eigen::MatrixXd isolated_contributions(const FitResult &fit, const TimeSeriesDataset &raw);

struct ContributionShare {
  std::vector<double> channel;  // percent of total response
  double total = 0.0;
};

ContributionShare contribution_percent(const ContributionMatrix &cm,
                                       const Eigen::Ref<const Eigen::VectorXd> &y);

}  // namespace mmm
