#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <functional>
#include <random>

#include "mmm/dataset.hpp"
#include "mmm/error.hpp"
#include "mmm/transforms.hpp"

using namespace mmm;

namespace {

ErrorCode code_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("no mmm::Error thrown");
  return ErrorCode::IoError;
}

double oracle_pearson(const Eigen::VectorXd &x, const Eigen::VectorXd &y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

GeneratorSpec small_spec() {
  GeneratorSpec g;
  g.weeks = 60;
  g.channels = 3;
  g.controls = 1;
  g.max_delay = 6;
  g.seed = 5;
  return g;
}

}  // namespace

TEST_CASE("parse_csv minimal input") {
  const auto ds = parse_csv("date,media_tv,y\n2024-01-01,1,10\n2024-01-08,2,11\n2024-01-15,0,9\n");
  CHECK(ds.weeks() == 3);
  CHECK(ds.channels() == 1);
  CHECK(ds.num_controls() == 0);
  CHECK(ds.channel_names == std::vector<std::string>{"media_tv"});
  CHECK(ds.media(1, 0) == 2.0);
  CHECK(ds.response[2] == 9.0);
  CHECK(format_date(ds.time[2]) == "2024-01-15");
}

TEST_CASE("parse_csv validation errors") {
  const std::string header = "date,media_tv,control_price,y\n";
  CHECK(code_of([&] { parse_csv(header + "2024-01-01,NaN,1,10\n2024-01-08,1,1,11\n"); }) == ErrorCode::MissingValue);
  CHECK(code_of([&] { parse_csv(header + "2024-01-01,,1,10\n2024-01-08,1,1,11\n"); }) == ErrorCode::MissingValue);
  CHECK(code_of([&] { parse_csv(header + "2024-01-01,1,1,10\n2024-01-15,1,1,11\n"); }) == ErrorCode::NonUniformTimeStep);
  CHECK(code_of([&] { parse_csv(header + "2024-01-01,-1,1,10\n2024-01-08,1,1,11\n"); }) == ErrorCode::NegativeSpend);
  CHECK(code_of([&] { parse_csv(header + "2024-01-01,abc,1,10\n2024-01-08,1,1,11\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([&] { parse_csv(header + "2024-13-01,1,1,10\n2024-01-08,1,1,11\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([&] { parse_csv("date,media_tv\n2024-01-01,1\n"); }) == ErrorCode::MissingColumn);

  try {
    parse_csv(header + "2024-01-01,1,1,10\n2024-01-08,1,nan,11\n");
    FAIL("expected MissingValue");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("control_price") != std::string::npos);
  }
}

TEST_CASE("explicit column mapping") {
  ColumnMapping map;
  map.time = "week";
  map.response = "sales";
  map.media = {"b", "a"};
  map.controls = {"z"};
  const auto ds = parse_csv("week,a,b,z,sales\n2024-01-01,1,2,3,4\n2024-01-08,5,6,7,8\n", map);
  CHECK(ds.channel_names == std::vector<std::string>{"b", "a"});
  CHECK(ds.media(1, 0) == 6.0);
  CHECK(ds.controls(0, 0) == 3.0);
  CHECK(ds.response[1] == 8.0);
}

TEST_CASE("CSV round trip and fingerprint") {
  const SyntheticData syn = generate_synthetic(small_spec());
  const std::string text = to_csv(syn.dataset);
  const TimeSeriesDataset back = parse_csv(text);
  CHECK(back == syn.dataset);
  CHECK(fingerprint(back) == fingerprint(syn.dataset));
  CHECK(fingerprint(syn.dataset).size() == 64);

  const auto path = std::filesystem::temp_directory_path() / "mmm_test_roundtrip.csv";
  write_csv(syn.dataset, path);
  CHECK(load_csv(path) == syn.dataset);
  std::filesystem::remove(path);

  TimeSeriesDataset tweaked = syn.dataset;
  tweaked.response[7] += 1e-9;
  CHECK(fingerprint(tweaked) != fingerprint(syn.dataset));
  CHECK(code_of([] { load_csv("/nonexistent/dir/file.csv"); }) == ErrorCode::IoError);
}

TEST_CASE("validate_correlations") {
  TimeSeriesDataset ds;
  const int T = 40;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < T; ++t) ds.time.push_back(*parse_date("2024-01-01") + std::chrono::days(7 * t));
  ds.media.resize(T, 3);
  for (int t = 0; t < T; ++t) {
    ds.media(t, 0) = u(rng);
    ds.media(t, 1) = ds.media(t, 0);
    ds.media(t, 2) = (t % 2 == 0) ? 1.0 : 3.0;
  }
  ds.controls.resize(T, 0);
  ds.response = Eigen::VectorXd::Ones(T);
  ds.channel_names = {"media_a", "media_dup", "media_alt"};

  const auto found = validate_correlations(ds, 0.4);
  REQUIRE(found.size() >= 1);
  CHECK(found[0].first == "media_a");
  CHECK(found[0].second == "media_dup");
  CHECK(found[0].r2 == doctest::Approx(1.0));
  const double r = oracle_pearson(ds.media.col(0), ds.media.col(2));
  CHECK(pearson_r(ds.media.col(0), ds.media.col(2)) == doctest::Approx(r).epsilon(1e-12));
  const bool alt_reported = std::any_of(found.begin(), found.end(),
                                        [](const auto &f) { return f.second == "media_alt"; });
  CHECK(alt_reported == (r * r > 0.4));
  CHECK(validate_correlations(ds, 1.1).empty());
}

TEST_CASE("scale_dataset") {
  TimeSeriesDataset ds;
  ds.time = {*parse_date("2024-01-01"), *parse_date("2024-01-08")};
  ds.media.resize(2, 2);
  ds.media << 4.0, 2.0, 4.0, 4.0;
  ds.controls.resize(2, 1);
  ds.controls << -1.0, -3.0;
  ds.response = Eigen::Vector2d(10.0, 30.0);
  ds.channel_names = {"media_const", "media_pair"};
  ds.control_names = {"control_x"};

  const auto [scaled, info] = scale_dataset(ds);
  CHECK(info.media_scale[0] == 4.0);
  CHECK(scaled.media(0, 0) == 1.0);
  CHECK(scaled.media(1, 0) == 1.0);
  CHECK(scaled.media(0, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(scaled.media(1, 1) == doctest::Approx(4.0 / 3.0));
  CHECK(info.control_scale[0] == 2.0);
  CHECK(scaled.controls(0, 0) == -0.5);
  CHECK(info.response_scale == 20.0);

  const SyntheticData syn = generate_synthetic(small_spec());
  const auto [s2, i2] = scale_dataset(syn.dataset);
  const TimeSeriesDataset back = unscale_dataset(s2, i2);
  CHECK(((back.media - syn.dataset.media).array().abs() <= 1e-12 * syn.dataset.media.array().abs()).all());
  CHECK(((back.response - syn.dataset.response).array().abs() <= 1e-12 * syn.dataset.response.array().abs()).all());

  TimeSeriesDataset idle = ds;
  idle.media.col(0).setZero();
  const auto [s3, i3] = scale_dataset(idle);
  CHECK(i3.media_scale[0] == 1.0);
  CHECK(s3.media.col(0).isZero());
}

TEST_CASE("generate_synthetic") {
  SUBCASE("default dimensions") {
    const SyntheticData syn = generate_synthetic(GeneratorSpec{});
    CHECK(syn.dataset.weeks() == 144);
    CHECK(syn.dataset.channels() == 10);
    CHECK(syn.dataset.num_controls() == 2);
    CHECK(syn.spec.truth.size() == 10);
    for (const auto &f : validate_correlations(syn.dataset, 0.4)) CHECK(f.r2 <= 0.4);
  }
  SUBCASE("same seed gives the same dataset") {
    const SyntheticData a = generate_synthetic(small_spec());
    const SyntheticData b = generate_synthetic(small_spec());
    CHECK(a.dataset == b.dataset);
    CHECK(to_csv(a.dataset) == to_csv(b.dataset));
    GeneratorSpec other = small_spec();
    other.seed = 6;
    CHECK_FALSE(generate_synthetic(other).dataset == a.dataset);
  }
  SUBCASE("noiseless response equals its ground-truth decomposition") {
    GeneratorSpec g = small_spec();
    g.noise_sd = 0.0;
    const SyntheticData syn = generate_synthetic(g);
    const TimeSeriesDataset &ds = syn.dataset;
    for (Eigen::Index m = 0; m < 3; ++m) {
      const ChannelTruth &tr = syn.spec.truth[m];
      const Eigen::VectorXd carried =
          carryover(ds.media.col(m), {tr.retention, tr.delay, g.max_delay});
      const Eigen::VectorXd expect = michaelis_menten(carried, {tr.V, tr.K});
      CHECK((expect - syn.contributions.col(m)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    Eigen::VectorXd y = Eigen::VectorXd::Constant(60, g.baseline) + syn.contributions.rowwise().sum();
    y += syn.spec.control_coefficients[0] * ds.controls.col(0);
    CHECK((y - ds.response).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("uniform mixing goes between carryover and saturation") {
    GeneratorSpec g = small_spec();
    g.noise_sd = 0.0;
    g.mix_self = {0.94};
    g.mix_cross = {0.0489};
    const SyntheticData syn = generate_synthetic(g);
    Eigen::MatrixXd carried(60, 3);
    for (Eigen::Index m = 0; m < 3; ++m) {
      const ChannelTruth &tr = syn.spec.truth[m];
      carried.col(m) = carryover(syn.dataset.media.col(m), {tr.retention, tr.delay, g.max_delay});
    }
    const Eigen::MatrixXd mixed = boltzmann_mix(carried, BoltzmannParams::uniform(3, 0.94, 0.0489));
    for (Eigen::Index m = 0; m < 3; ++m) {
      const Eigen::VectorXd expect = michaelis_menten(mixed.col(m), {syn.spec.truth[m].V, syn.spec.truth[m].K});
      CHECK((expect - syn.contributions.col(m)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("invalid specs are rejected") {
    GeneratorSpec g = small_spec();
    g.weeks = 5;
    CHECK_THROWS_AS(generate_synthetic(g), Error);
    g = small_spec();
    g.noise_sd = -1.0;
    CHECK_THROWS_AS(generate_synthetic(g), Error);
  }
}
