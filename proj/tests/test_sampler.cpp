#include <doctest.h>

#include <cmath>
#include <random>

#include "mmm/diagnostics.hpp"
#include "mmm/error.hpp"
#include "mmm/sampler.hpp"

using namespace mmm;

namespace {

// y_t ~ Normal(mu, sigma) with sigma known and mu ~ Normal(m0, s0).
class ConjugateNormal final : public Density {
 public:
  ConjugateNormal(std::vector<double> y, double sigma, double m0, double s0)
      : y_(std::move(y)), sigma_(sigma), params_{{"mu", {}, Prior::normal(m0, s0), {}}} {}

  const std::vector<ParamInfo> &parameters() const override { return params_; }

  double log_density(std::span<const double> theta, std::span<double> grad) const override {
    double d = 0.0;
    double lp = log_prior(params_[0].prior, params_[0].bounds, theta[0], &d);
    for (double y : y_) {
      const double r = y - theta[0];
      lp -= 0.5 * r * r / (sigma_ * sigma_);
      d += r / (sigma_ * sigma_);
    }
    if (!grad.empty()) grad[0] = d;
    return lp;
  }

  double posterior_mean() const {
    const double prec = posterior_precision();
    double sum = 0.0;
    for (double y : y_) sum += y;
    return (params_[0].prior.p1 / std::pow(params_[0].prior.p2, 2) + sum / (sigma_ * sigma_)) / prec;
  }
  double posterior_sd() const { return 1.0 / std::sqrt(posterior_precision()); }

 private:
  double posterior_precision() const {
    return 1.0 / std::pow(params_[0].prior.p2, 2) + static_cast<double>(y_.size()) / (sigma_ * sigma_);
  }

  std::vector<double> y_;
  double sigma_;
  std::vector<ParamInfo> params_;
};

// Independent bounded parameters; exercises the constraining transforms.
class BoundedProduct final : public Density {
 public:
  BoundedProduct()
      : params_{{"p", {0.0, 1.0}, Prior::beta(3.0, 5.0), {}},
                {"s", {0.0, std::numeric_limits<double>::infinity()}, Prior::half_normal(2.0), {}}} {}

  const std::vector<ParamInfo> &parameters() const override { return params_; }

  double log_density(std::span<const double> theta, std::span<double> grad) const override {
    double lp = 0.0;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      double d = 0.0;
      lp += log_prior(params_[i].prior, params_[i].bounds, theta[i], &d);
      if (!grad.empty()) grad[i] = d;
    }
    return lp;
  }

 private:
  std::vector<ParamInfo> params_;
};

ConjugateNormal toy() {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n(3.0, 2.0);
  std::vector<double> y(25);
  for (double &v : y) v = n(rng);
  return ConjugateNormal(y, 2.0, 0.0, 5.0);
}

SamplerConfig quick(std::uint64_t seed = 1) {
  SamplerConfig cfg;
  cfg.chains = 4;
  cfg.warmup = 500;
  cfg.draws = 1000;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("conjugate normal posterior") {
  const ConjugateNormal model = toy();
  const PosteriorDraws draws = sample(model, quick());
  const std::vector<double> mu = draws.parameter(0);
  double mean = 0.0;
  for (double x : mu) mean += x;
  mean /= static_cast<double>(mu.size());
  double var = 0.0;
  for (double x : mu) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(mu.size() - 1));

  const double ess = draws.ess[0];
  CHECK(ess > 400.0);
  CHECK(draws.rhat[0] < 1.01);
  const double mcse_mean = model.posterior_sd() / std::sqrt(ess);
  CHECK(std::abs(mean - model.posterior_mean()) <= 3.0 * mcse_mean);
  // Standard error of a standard deviation estimate is about sd / sqrt(2 ess).
  CHECK(std::abs(sd - model.posterior_sd()) <= 3.0 * model.posterior_sd() / std::sqrt(2.0 * ess));
  for (const auto &s : draws.chain_stats) CHECK(s.divergences == 0);
}

TEST_CASE("bounded parameters stay in bounds and match their marginals") {
  const BoundedProduct model;
  const PosteriorDraws draws = sample(model, quick(3));
  const auto p = draws.parameter(0);
  const auto s = draws.parameter(1);
  double mp = 0.0, ms = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i] > 0.0);
    CHECK(p[i] < 1.0);
    CHECK(s[i] > 0.0);
    mp += p[i];
    ms += s[i];
  }
  mp /= static_cast<double>(p.size());
  ms /= static_cast<double>(s.size());
  // Beta(3,5) mean 0.375, sd 0.161; half-normal(2) mean 2 sqrt(2/pi), sd 1.206.
  CHECK(std::abs(mp - 0.375) <= 3.0 * 0.161 / std::sqrt(draws.ess[0]));
  CHECK(std::abs(ms - 2.0 * std::sqrt(2.0 / M_PI)) <= 3.0 * 1.206 / std::sqrt(draws.ess[1]));
}

TEST_CASE("sampling is deterministic for a fixed seed") {
  const ConjugateNormal model = toy();
  SamplerConfig cfg = quick(99);
  cfg.warmup = 200;
  cfg.draws = 200;
  const PosteriorDraws a = sample(model, cfg);
  const PosteriorDraws b = sample(model, cfg);
  CHECK(a.values == b.values);
  cfg.parallel = false;
  const PosteriorDraws serial = sample(model, cfg);
  CHECK(serial.values == a.values);
  cfg.seed = 100;
  CHECK(sample(model, cfg).values != a.values);
}

TEST_CASE("a stuck chain is flagged by R-hat") {
  const ConjugateNormal model = toy();
  SamplerConfig cfg = quick(5);
  cfg.warmup = 100;
  cfg.draws = 100;
  cfg.fixed_step_size = 0.0;
  const PosteriorDraws draws = sample(model, cfg);
  CHECK(draws.rhat[0] > 1.1);
  CHECK_FALSE(draws.converged());
}

TEST_CASE("sampler config validation") {
  const ConjugateNormal model = toy();
  SamplerConfig cfg = quick();
  cfg.chains = 1;
  CHECK_THROWS_AS(sample(model, cfg), Error);
  cfg = quick();
  cfg.target_accept = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = quick();
  cfg.draws = 10;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("UnconstrainedDensity gradient matches finite differences") {
  const BoundedProduct model;
  const UnconstrainedDensity ud(model);
  Eigen::VectorXd u(2);
  u << -0.4, 0.8;
  Eigen::VectorXd g(2), scratch(2);
  const double f = ud(u, g);
  CHECK(std::isfinite(f));
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd up = u, dn = u;
    up[i] += 1e-6;
    dn[i] -= 1e-6;
    CHECK(g[i] == doctest::Approx((ud(up, scratch) - ud(dn, scratch)) / 2e-6).epsilon(1e-6));
  }
  CHECK((ud.unconstrain(ud.constrain(u)) - u).cwiseAbs().maxCoeff() <= 1e-12);
}
