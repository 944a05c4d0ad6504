#include "mmm/posterior.hpp"

#include <algorithm>
#include <random>

#include "mmm/diagnostics.hpp"
#include "mmm/error.hpp"

namespace mmm {

namespace {

void check_compatible(const FitResult &fit, const TimeSeriesDataset &raw) {
  if (raw.channel_names != fit.channel_names)
    throw Error(ErrorCode::ChannelMismatch, "dataset media columns differ from the fitted channels");
  if (raw.control_names != fit.control_names)
    throw Error(ErrorCode::ChannelMismatch, "dataset control columns differ from the fitted controls");
  if (!fit.draws.scale) throw Error(ErrorCode::InvalidArgument, "fit has no scale information");
}

}  // namespace

FitResult fit_model(const TimeSeriesDataset &raw, const ModelSpec &spec,
                    const SamplerConfig &sampler, const ColumnMapping &mapping) {
  sampler.validate();
  auto [scaled, scale] = scale_dataset(raw);
  const Model model(std::move(scaled), spec);
  FitResult fit;
  fit.spec = spec;
  fit.sampler = sampler;
  fit.draws = sample(model, sampler);
  fit.draws.scale = scale;
  fit.fingerprint = fingerprint(raw);
  fit.mapping = mapping;
  fit.channel_names = raw.channel_names;
  fit.control_names = raw.control_names;
  return fit;
}

Model rebuild_model(const FitResult &fit, const TimeSeriesDataset &raw) {
  check_compatible(fit, raw);
  Model model(apply_scale(raw, *fit.draws.scale), fit.spec);
  if (model.dimension() != fit.draws.dimension())
    throw Error(ErrorCode::ChannelMismatch, "fit parameters do not match the rebuilt model");
  return model;
}

Prediction predict(const FitResult &fit, const TimeSeriesDataset &raw, std::uint64_t seed) {
  const Model model = rebuild_model(fit, raw);
  const auto T = static_cast<Eigen::Index>(raw.weeks());
  const auto &draws = fit.draws;
  const std::size_t n = static_cast<std::size_t>(draws.chains) * draws.draws;
  const auto sigma_slot = static_cast<std::size_t>(model.noise_slot());
  const double scale = draws.scale->response_scale;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd replicated(T, static_cast<Eigen::Index>(n));
  Eigen::VectorXd mean_sum = Eigen::VectorXd::Zero(T);
  std::size_t k = 0;
  for (int c = 0; c < draws.chains; ++c) {
    for (int d = 0; d < draws.draws; ++d, ++k) {
      const auto theta = draws.draw(c, d);
      const Eigen::VectorXd mu = model.mean(theta);
      mean_sum += mu;
      for (Eigen::Index t = 0; t < T; ++t)
        replicated(t, static_cast<Eigen::Index>(k)) = mu[t] + theta[sigma_slot] * normal(rng);
    }
  }
  Prediction out;
  out.mean = mean_sum / static_cast<double>(n) * scale;
  out.lower.resize(T);
  out.upper.resize(T);
  std::vector<double> row(n);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < n; ++j) row[j] = replicated(t, static_cast<Eigen::Index>(j));
    out.lower[t] = quantile(row, 0.05) * scale;
    out.upper[t] = quantile(row, 0.95) * scale;
  }
  return out;
}

Eigen::VectorXd ContributionMatrix::non_media() const {
  Eigen::VectorXd out = baseline + trend + seasonality;
  for (Eigen::Index c = 0; c < controls.cols(); ++c) out += controls.col(c);
  return out;
}

Eigen::VectorXd ContributionMatrix::total() const {
  Eigen::VectorXd out = non_media();
  for (Eigen::Index m = 0; m < values.cols(); ++m) out += values.col(m);
  return out;
}

ContributionMatrix decompose(const FitResult &fit, const TimeSeriesDataset &raw) {
  const Model model = rebuild_model(fit, raw);
  const auto T = static_cast<Eigen::Index>(raw.weeks());
  const auto M = static_cast<Eigen::Index>(raw.channels());
  const auto C = static_cast<Eigen::Index>(raw.num_controls());
  ContributionMatrix cm;
  cm.channel_names = raw.channel_names;
  cm.control_names = raw.control_names;
  cm.values = Eigen::MatrixXd::Zero(T, M);
  cm.baseline = Eigen::VectorXd::Zero(T);
  cm.trend = Eigen::VectorXd::Zero(T);
  cm.seasonality = Eigen::VectorXd::Zero(T);
  cm.controls = Eigen::MatrixXd::Zero(T, C);
  const auto &draws = fit.draws;
  for (int c = 0; c < draws.chains; ++c) {
    for (int d = 0; d < draws.draws; ++d) {
      const Components parts = model.components(draws.draw(c, d));
      cm.values += parts.media;
      cm.baseline += parts.baseline;
      cm.trend += parts.trend;
      cm.seasonality += parts.seasonality;
      cm.controls += parts.controls;
    }
  }
  const double factor =
      draws.scale->response_scale / (static_cast<double>(draws.chains) * draws.draws);
  cm.values *= factor;
  cm.baseline *= factor;
  cm.trend *= factor;
  cm.seasonality *= factor;
  cm.controls *= factor;
  return cm;
}

Eigen::MatrixXd isolated_contributions(const FitResult &fit, const TimeSeriesDataset &raw) {
  const Model model = rebuild_model(fit, raw);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(raw.weeks()),
                                               static_cast<Eigen::Index>(raw.channels()));
  const auto &draws = fit.draws;
  for (int c = 0; c < draws.chains; ++c)
    for (int d = 0; d < draws.draws; ++d) sum += model.isolated_media(draws.draw(c, d));
  return sum * (draws.scale->response_scale / (static_cast<double>(draws.chains) * draws.draws));
}

ContributionShare contribution_percent(const ContributionMatrix &cm,
                                       const Eigen::Ref<const Eigen::VectorXd> &y) {
  if (y.size() != cm.values.rows())
    throw Error(ErrorCode::DimensionMismatch, "response length does not match contribution rows");
  const double total = y.sum();
  if (total == 0.0) throw Error(ErrorCode::ZeroResponseTotal, "sum of response is zero");
  ContributionShare out;
  for (Eigen::Index m = 0; m < cm.values.cols(); ++m) {
    const double pct = 100.0 * cm.values.col(m).sum() / total;
    out.channel.push_back(pct);
    out.total += pct;
  }
  return out;
}

}  // namespace mmm
