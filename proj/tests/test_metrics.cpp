#include <doctest.h>

#include <cmath>
#include <random>

#include "mmm/error.hpp"
#include "mmm/metrics.hpp"

using namespace mmm;

TEST_CASE("fit_metrics on a perfect fit") {
  const Eigen::Vector4d y(3.0, 1.0, 4.0, 1.5);
  const FitMetrics m = fit_metrics(y, y);
  CHECK(m.r2 == 1.0);
  CHECK(m.explained_variance == 1.0);
  CHECK(m.mape == 0.0);
  CHECK(m.accuracy_pct == 100.0);
}

TEST_CASE("fit_metrics hand example") {
  const FitMetrics m = fit_metrics(Eigen::Vector3d(1, 2, 4), Eigen::Vector3d(1, 2, 3));
  CHECK(m.mape == doctest::Approx(0.25 / 3.0).epsilon(1e-15));
  CHECK(m.accuracy_pct + 100.0 * m.mape == 100.0);
  // SST = sum (y - 7/3)^2 = 14/3, SSE = 1.
  CHECK(m.r2 == doctest::Approx(1.0 - 1.0 / (14.0 / 3.0)));
}

TEST_CASE("fit_metrics with a constant mean prediction has zero r2") {
  const Eigen::Vector4d y(2.0, 5.0, 1.0, 8.0);
  const FitMetrics m = fit_metrics(y, Eigen::Vector4d::Constant(y.mean()));
  CHECK(std::abs(m.r2) <= 1e-15);
}

TEST_CASE("r2 and explained variance agree for zero-mean residuals") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  Eigen::VectorXd y(50), e(50);
  for (int t = 0; t < 50; ++t) {
    y[t] = 10.0 + n01(rng);
    e[t] = 0.3 * n01(rng);
  }
  e.array() -= e.mean();
  const FitMetrics m = fit_metrics(y, y - e);
  CHECK(m.r2 == doctest::Approx(m.explained_variance).epsilon(1e-12));

  const FitMetrics biased = fit_metrics(y, y - e + Eigen::VectorXd::Constant(50, 0.5));
  CHECK(biased.r2 < biased.explained_variance);
}

TEST_CASE("fit_metrics excludes zero weeks from the MAPE") {
  const FitMetrics m = fit_metrics(Eigen::Vector3d(0, 2, 4), Eigen::Vector3d(1, 1, 4));
  CHECK(m.excluded_zero_weeks == 1);
  CHECK(m.mape == doctest::Approx(0.25));
  try {
    fit_metrics(Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones());
    FAIL("expected AllZeroResponse");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::AllZeroResponse);
  }
  CHECK_THROWS_AS(fit_metrics(Eigen::Vector3d::Ones(), Eigen::Vector2d::Ones()), Error);
  CHECK_THROWS_AS(fit_metrics(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)), Error);
}

TEST_CASE("classify_region") {
  CHECK(classify_region(406.0, 406.0) == 2);
  CHECK(classify_region(4.06, 406.0) == 1);
  CHECK(classify_region(40600.0, 406.0) == 3);
  CHECK(classify_region(0.5 * 406.0, 406.0) == 2);
  CHECK(classify_region(2.0 * 406.0, 406.0) == 2);
  CHECK(classify_region(2.0, 1.0, {0.1, 5.0}) == 2);
  CHECK_THROWS_AS(classify_region(1.0, 0.0), Error);

  int prev = 1;
  for (int i = 0; i <= 2000; ++i) {
    const int r = classify_region(0.005 * i, 1.0);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("channel_economics reproduces the published online channel row") {
  // 58921 total spend, 13531 media outcome, K_M 406.
  Eigen::VectorXd spend = Eigen::VectorXd::Constant(4, 58921.0 / 4.0);
  Eigen::VectorXd contribution = Eigen::VectorXd::Constant(4, 13531.0 / 4.0);
  const ChannelEconomics e = channel_economics(spend, contribution, 13531.0, 406.0);
  REQUIRE(e.cpa.has_value());
  CHECK(*e.cpa == doctest::Approx(4.355).epsilon(1e-3));
  CHECK(std::round(*e.cpa * 10.0) / 10.0 == 4.4);
  CHECK(e.km_normalized == doctest::Approx(0.006890).epsilon(1e-4));
  CHECK(e.km_normalized == 406.0 / 58921.0);
  CHECK(*e.cpa * e.media_outcome == doctest::Approx(e.total_spend));
  CHECK(e.roas == doctest::Approx(13531.0 / 58921.0));
}

TEST_CASE("channel_economics edge cases") {
  const Eigen::Vector3d spend(10.0, 20.0, 30.0);
  const ChannelEconomics zero = channel_economics(spend, Eigen::Vector3d::Zero(), 0.0, 15.0, 100.0);
  CHECK(zero.roas == 0.0);
  CHECK_FALSE(zero.cpa.has_value());
  CHECK(zero.contribution_pct == 0.0);
  CHECK(zero.region == 2);

  const ChannelEconomics pct = channel_economics(spend, Eigen::Vector3d(5, 5, 5), Eigen::Vector3d(1, 2, 3), 1.0, 60.0);
  CHECK(pct.contribution_pct == doctest::Approx(25.0));
  CHECK(*pct.cpa == doctest::Approx(10.0));
  CHECK(pct.region == 3);

  const ChannelEconomics linear = channel_economics(spend, Eigen::Vector3d(1, 1, 1), 3.0, std::nan(""));
  CHECK(std::isnan(linear.km_normalized));
  CHECK(linear.region == 0);

  CHECK_THROWS_AS(channel_economics(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), 1.0, 1.0), Error);
}

TEST_CASE("normalized K is invariant to a common spend rescaling") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  Eigen::VectorXd spend(52), contribution(52);
  for (int t = 0; t < 52; ++t) {
    spend[t] = u(rng);
    contribution[t] = 0.1 * u(rng);
  }
  const ChannelEconomics base = channel_economics(spend, contribution, 100.0, 406.0);
  for (double c : {0.5, 2.0, 5.0, 1e3}) {
    const ChannelEconomics scaled = channel_economics(c * spend, contribution, 100.0, c * 406.0);
    CHECK(scaled.km_normalized == doctest::Approx(base.km_normalized).epsilon(1e-15));
    CHECK(scaled.region == base.region);
  }
}

TEST_CASE("median") {
  CHECK(median(Eigen::Vector3d(3, 1, 2)) == 2.0);
  CHECK(median(Eigen::Vector4d(4, 1, 3, 2)) == 2.5);
}
