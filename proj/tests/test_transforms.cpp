#include <doctest.h>

#include <cmath>
#include <random>

#include "mmm/error.hpp"
#include "mmm/transforms.hpp"

using namespace mmm;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Eigen::VectorXd random_spend(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = u(rng);
  return x;
}

}  // namespace

TEST_CASE("delay weights follow base^((l - delta)^2)") {
  const Eigen::VectorXd w = delay_weights({0.5, 0.0, 3});
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 0.5);
  CHECK(w[2] == 0.0625);

  const Eigen::VectorXd shifted = carryover_weights({0.3, 1.5, 5});
  for (int l = 0; l < 5; ++l) CHECK(shifted[l] == doctest::Approx(std::pow(0.3, (l - 1.5) * (l - 1.5))));

  const Eigen::VectorXd flat = delay_weights({1.0 - 1e-12, 0.0, 13});
  for (Eigen::Index l = 0; l < flat.size(); ++l) CHECK(flat[l] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("window parameters are validated") {
  CHECK_THROWS_AS(delay_weights({0.0, 0.0, 3}), Error);
  CHECK_THROWS_AS(delay_weights({1.0, 0.0, 3}), Error);
  CHECK_THROWS_AS(delay_weights({0.5, 2.5, 3}), Error);
  CHECK_THROWS_AS(carryover_weights({0.5, -0.1, 3}), Error);
  CHECK_THROWS_AS(carryover_weights({0.5, 0.0, 0}), Error);
}

TEST_CASE("adstock uses the truncated normalizer at the series start") {
  const Eigen::VectorXd out = adstock(vec({1, 0, 0}), {0.5, 0.0, 3});
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == doctest::Approx(0.5 / 1.5));
  CHECK(out[2] == doctest::Approx(0.0625 / 1.5625));
  CHECK(out[2] == doctest::Approx(0.04));

  const Eigen::VectorXd c = carryover(vec({1, 0}), {0.5, 0.0, 2});
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(c[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("adstock and carryover of a constant series are that constant") {
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(60, 7.25);
  for (double delta : {0.0, 0.7, 2.0}) {
    const Eigen::VectorXd a = adstock(x, {0.6, delta, 13});
    const Eigen::VectorXd c = carryover(x, {0.2, delta, 13});
    CHECK((a.array() - 7.25).abs().maxCoeff() <= 1e-12);
    CHECK((c.array() - 7.25).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("single-lag window and vanishing retention are the identity") {
  const Eigen::VectorXd x = random_spend(40, 3);
  CHECK((adstock(x, {0.5, 0.0, 1}) - x).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd c = carryover(x, {1e-12, 0.0, 13});
  CHECK((c - x).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("window outputs stay inside the convex hull of their inputs") {
  const Eigen::VectorXd x = random_spend(80, 9);
  const Eigen::VectorXd out = carryover(x, {0.7, 1.2, 13});
  for (Eigen::Index t = 0; t < x.size(); ++t) {
    const Eigen::Index first = std::max<Eigen::Index>(0, t - 12);
    const auto window = x.segment(first, t - first + 1);
    CHECK(out[t] >= window.minCoeff() - 1e-12);
    CHECK(out[t] <= window.maxCoeff() + 1e-12);
  }
}

TEST_CASE("windowed_mean matches a direct double loop") {
  const Eigen::VectorXd x = random_spend(30, 5);
  const Eigen::VectorXd w = vec({1.0, 0.8, 0.3, 0.05});
  const Eigen::VectorXd out = windowed_mean(x, w);
  for (Eigen::Index t = 0; t < x.size(); ++t) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index l = 0; l < 4 && l <= t; ++l) {
      num += w[l] * x[t - l];
      den += w[l];
    }
    CHECK(out[t] == doctest::Approx(num / den).epsilon(1e-14));
  }
}

TEST_CASE("michaelis_menten") {
  const MMParams p{3.7, 12.5};
  CHECK(michaelis_menten(12.5, p) == 3.7 / 2.0);
  CHECK(michaelis_menten(0.0, p) == 0.0);
  CHECK(michaelis_menten(3.0, {2.0, 1.0}) == doctest::Approx(1.5));

  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = 0.1 * i;
    const double y = michaelis_menten(x, p);
    CHECK(y > prev);
    CHECK(y < p.vmax);
    prev = y;
  }
  // Scale equivariance: out(c x; V, c K) = out(x; V, K).
  for (double c : {0.5, 2.0, 5.0})
    for (double x : {0.3, 4.0, 12.5, 90.0})
      CHECK(michaelis_menten(c * x, {p.vmax, c * p.km}) == doctest::Approx(michaelis_menten(x, p)).epsilon(1e-14));

  CHECK_THROWS_AS(michaelis_menten(random_spend(3, 1), {0.0, 1.0}), Error);
}

TEST_CASE("hill") {
  CHECK(hill(2.0, {2.0, 1.0, 1.0}) == doctest::Approx(0.5));
  CHECK(hill(6.0, {2.0, 1.0, 1.0}) == doctest::Approx(0.75));
  CHECK(hill(0.0, {2.0, 2.5, 3.0}) == 0.0);
  for (double n : {0.5, 1.0, 2.0, 3.0}) CHECK(hill(4.0, {4.0, n, 6.0}) == doctest::Approx(3.0));

  // n = 1 reduces to Michaelis-Menten.
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = 0.05 * i;
    worst = std::max(worst, std::abs(hill(x, {1.7, 1.0, 2.3}) - michaelis_menten(x, {2.3, 1.7})));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("boltzmann_mix") {
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 10);
  const Eigen::MatrixXd mixed = boltzmann_mix(ones, BoltzmannParams::uniform(10, 0.94, 0.0489));
  CHECK((mixed.array() - 1.3801).abs().maxCoeff() <= 1e-12);

  Eigen::MatrixXd X(2, 3);
  X << 1, 2, 3, 4, 5, 6;
  CHECK(boltzmann_mix(X, BoltzmannParams::uniform(3, 1.0, 0.0)) == X);

  BoltzmannParams p{vec({0.9, 1.1, 0.5}), vec({0.1, 0.0, 0.3})};
  const Eigen::MatrixXd out = boltzmann_mix(X, p);
  CHECK(out(0, 0) == doctest::Approx(0.9 * 1 + 0.1 * 5));
  CHECK(out(0, 1) == doctest::Approx(1.1 * 2));
  CHECK(out(1, 2) == doctest::Approx(0.5 * 6 + 0.3 * 9));

  std::mt19937_64 rng(17);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd A(20, 4), B(20, 4);
  for (Eigen::Index i = 0; i < A.size(); ++i) {
    A.data()[i] = n01(rng);
    B.data()[i] = n01(rng);
  }
  BoltzmannParams q{vec({0.8, 0.95, 1.2, 0.4}), vec({0.05, 0.2, 0.0, 0.7})};
  const Eigen::MatrixXd lhs = boltzmann_mix(2.5 * A - 0.75 * B, q);
  const Eigen::MatrixXd rhs = 2.5 * boltzmann_mix(A, q) - 0.75 * boltzmann_mix(B, q);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);

  // Uniform coefficients scale the row total by a + b (M - 1).
  const Eigen::MatrixXd u = boltzmann_mix(A, BoltzmannParams::uniform(4, 0.9, 0.05));
  CHECK((u.rowwise().sum() - (0.9 + 0.05 * 3) * A.rowwise().sum()).cwiseAbs().maxCoeff() <= 1e-12);

  try {
    boltzmann_mix(X, BoltzmannParams::uniform(2, 1.0, 0.0));
    FAIL("expected DimensionMismatch");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("n_particle_transform sums over every particle") {
  const Eigen::VectorXd v = vec({1.0, 2.0, 3.0});
  const Eigen::VectorXd out = n_particle_transform(v, 0.5, 0.1);
  CHECK(out[0] == doctest::Approx(0.5 + 0.6));
  CHECK(out[1] == doctest::Approx(1.0 + 0.6));
  CHECK(out[2] == doctest::Approx(1.5 + 0.6));
}
