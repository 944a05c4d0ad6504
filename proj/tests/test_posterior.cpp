#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mmm/diagnostics.hpp"
#include "mmm/error.hpp"
#include "mmm/fit_io.hpp"
#include "mmm/posterior.hpp"

using namespace mmm;

namespace {

GeneratorSpec small_spec(double noise_sd) {
  GeneratorSpec g;
  g.weeks = 60;
  g.channels = 3;
  g.controls = 1;
  g.max_delay = 6;
  g.noise_sd = noise_sd;
  g.seed = 31;
  return g;
}

ModelSpec mm_spec() {
  ModelSpec s;
  s.variant = Variant::MMCarryover;
  s.max_delay = 6;
  return s;
}

// A fit whose every draw sits at the raw-unit ground truth.
FitResult concentrated_fit(const SyntheticData &syn, double sigma_raw) {
  const auto [scaled, scale] = scale_dataset(syn.dataset);
  const Model model(scaled, mm_spec());
  std::vector<double> raw(model.dimension(), 0.0);
  raw[model.baseline_slot()] = syn.spec.baseline;
  raw[model.noise_slot()] = sigma_raw;
  raw[model.index_of("gamma[" + syn.dataset.control_names[0] + "]")] = syn.spec.control_coefficients[0];
  for (std::size_t m = 0; m < syn.dataset.channels(); ++m) {
    const auto &s = model.slots(m);
    raw[s.window] = syn.spec.truth[m].retention;
    raw[s.delay] = syn.spec.truth[m].delay;
    raw[s.vmax] = syn.spec.truth[m].V;
    raw[s.km] = syn.spec.truth[m].K;
  }
  FitResult fit;
  fit.spec = mm_spec();
  fit.draws.params = model.parameters();
  fit.draws.chains = 2;
  fit.draws.draws = 200;
  for (int k = 0; k < 400; ++k)
    for (std::size_t i = 0; i < raw.size(); ++i)
      fit.draws.values.push_back(raw[i] / to_original_units(model.parameters()[i], scale, 1.0));
  fit.draws.compute_diagnostics();
  fit.draws.scale = scale;
  fit.fingerprint = fingerprint(syn.dataset);
  fit.channel_names = syn.dataset.channel_names;
  fit.control_names = syn.dataset.control_names;
  return fit;
}

SamplerConfig short_run() {
  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup = 150;
  cfg.draws = 100;
  cfg.seed = 4;
  return cfg;
}

}  // namespace

TEST_CASE("ground-truth draws reproduce noiseless data") {
  const SyntheticData syn = generate_synthetic(small_spec(0.0));
  const FitResult fit = concentrated_fit(syn, 1e-6);
  const Prediction p = predict(fit, syn.dataset, 1);
  const Eigen::VectorXd rel = (p.mean - syn.dataset.response).cwiseQuotient(syn.dataset.response).cwiseAbs();
  CHECK(rel.maxCoeff() <= 1e-9);

  const ContributionMatrix cm = decompose(fit, syn.dataset);
  CHECK((cm.values - syn.contributions).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((cm.baseline.array() - syn.spec.baseline).abs().maxCoeff() <= 1e-8);
  CHECK((isolated_contributions(fit, syn.dataset) - cm.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("predictive interval widens with the noise scale") {
  const SyntheticData syn = generate_synthetic(small_spec(2.0));
  const FitResult narrow = concentrated_fit(syn, 2.0);
  const FitResult wide = concentrated_fit(syn, 20.0);
  const Prediction a = predict(narrow, syn.dataset, 7);
  const Prediction b = predict(wide, syn.dataset, 7);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() <= 1e-9);
  const Eigen::VectorXd wa = a.upper - a.lower, wb = b.upper - b.lower;
  CHECK((wb.array() > wa.array()).all());
  // Same noise stream, so the width scales exactly with sigma.
  CHECK((wb - 10.0 * wa).cwiseAbs().maxCoeff() <= 1e-8 * wb.maxCoeff());
  // A 90% interval of N(mu, 2) is mu +- 1.645 * 2.
  CHECK(wa.mean() == doctest::Approx(2 * 1.6449 * 2.0).epsilon(0.1));
}

TEST_CASE("zero-spend channel decomposes to an all-zero column") {
  const SyntheticData syn = generate_synthetic(small_spec(2.0));
  TimeSeriesDataset idle = syn.dataset;
  idle.media.col(1).setZero();
  SyntheticData copy = syn;
  copy.dataset = idle;
  const FitResult fit = concentrated_fit(copy, 2.0);
  const ContributionMatrix cm = decompose(fit, idle);
  CHECK(cm.values.col(1).isZero(0.0));
  CHECK(cm.values.col(0).sum() > 0.0);
  const ContributionShare share = contribution_percent(cm, idle.response);
  CHECK(share.channel[1] == 0.0);
}

TEST_CASE("contribution_percent") {
  ContributionMatrix cm;
  cm.values = Eigen::MatrixXd::Zero(4, 2);
  const Eigen::Vector4d y(10, 20, 30, 40);
  const ContributionShare none = contribution_percent(cm, y);
  CHECK(none.channel == std::vector<double>{0.0, 0.0});
  CHECK(none.total == 0.0);

  cm.values.col(0) = 0.5 * y;
  cm.values(0, 1) = 3.0;
  cm.values(3, 1) = 7.0;
  const ContributionShare s = contribution_percent(cm, y);
  CHECK(s.channel[0] == 50.0);
  CHECK(s.channel[1] == doctest::Approx(100.0 * 10.0 / 100.0).epsilon(1e-12));
  CHECK(s.total == doctest::Approx(60.0).epsilon(1e-12));

  try {
    contribution_percent(cm, Eigen::Vector4d::Zero());
    FAIL("expected ZeroResponseTotal");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::ZeroResponseTotal);
  }
  CHECK_THROWS_AS(contribution_percent(cm, Eigen::Vector3d::Ones()), Error);
}

TEST_CASE("sampled fit: additivity, diagnostics, persistence") {
  const SyntheticData syn = generate_synthetic(small_spec(2.0));
  const FitResult fit = fit_model(syn.dataset, mm_spec(), short_run());
  CHECK(fit.fingerprint == fingerprint(syn.dataset));
  REQUIRE(fit.draws.scale.has_value());
  CHECK(fit.draws.chains == 2);
  CHECK(fit.draws.draws == 100);

  const ContributionMatrix cm = decompose(fit, syn.dataset);
  const Prediction p = predict(fit, syn.dataset, 3);
  CHECK((cm.total() - p.mean).cwiseAbs().maxCoeff() <= 1e-9 * p.mean.cwiseAbs().maxCoeff());
  CHECK((p.lower.array() <= p.mean.array()).all());
  CHECK((p.upper.array() >= p.mean.array()).all());

  const auto summary = posterior_summary(fit.draws);
  CHECK(summary.size() == fit.draws.dimension());
  for (const auto &s : summary) {
    CHECK(s.q05 <= s.q50);
    CHECK(s.q50 <= s.q95);
  }

  SUBCASE("json round trip is lossless") {
    const std::string text = fit_to_json(fit);
    const FitResult back = fit_from_json(text);
    CHECK(back.draws.values == fit.draws.values);
    CHECK(back.draws.rhat.size() == fit.draws.rhat.size());
    CHECK(back.fingerprint == fit.fingerprint);
    CHECK(back.draws.scale->response_scale == fit.draws.scale->response_scale);
    CHECK(fit_to_json(back) == text);

    const auto path = std::filesystem::temp_directory_path() / "mmm_test_fit.json";
    save_fit(fit, path);
    CHECK(read_file(path) == text);
    CHECK(fit_to_json(load_fit(path)) == text);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(fit_from_json("{\"format_version\": 1"), Error);
  }
  SUBCASE("renamed channels are rejected") {
    TimeSeriesDataset renamed = syn.dataset;
    renamed.channel_names[0] = "media_other";
    try {
      decompose(fit, renamed);
      FAIL("expected ChannelMismatch");
    } catch (const Error &e) {
      CHECK(e.code() == ErrorCode::ChannelMismatch);
    }
  }
  SUBCASE("predictions are reproducible for a seed") {
    const Prediction q = predict(fit, syn.dataset, 3);
    CHECK(q.lower == p.lower);
    CHECK(q.upper == p.upper);
  }
}
