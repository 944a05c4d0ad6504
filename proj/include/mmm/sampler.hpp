#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmm/dataset.hpp"
#include "mmm/priors.hpp"

namespace mmm {

/// A log density over constrained parameters. Implementations must be
/// reentrant: the sampler may evaluate one instance from several threads.
class Density {
 public:
  virtual ~Density() = default;

  virtual const std::vector<ParamInfo> &parameters() const = 0;

  /// Log density (up to a constant) at `theta`. When `grad` is non-empty it
  /// receives d/dtheta. Out-of-domain points return -infinity.
  virtual double log_density(std::span<const double> theta,
                             std::span<double> grad) const = 0;

  std::size_t dimension() const { return parameters().size(); }
};

/// Density in the unconstrained space the sampler moves in, with the
/// change-of-variables term included.
class UnconstrainedDensity {
 public:
  explicit UnconstrainedDensity(const Density &density) : density_(&density) {}

  std::size_t dimension() const { return density_->dimension(); }
  double operator()(const Eigen::VectorXd &u, Eigen::VectorXd &grad) const;
  Eigen::VectorXd constrain(const Eigen::VectorXd &u) const;
  Eigen::VectorXd unconstrain(const Eigen::VectorXd &theta) const;

 private:
  const Density *density_;
};

struct SamplerConfig {
  int chains = 4;
  int warmup = 1000;
  int draws = 1000;  // kept draws per chain
  std::uint64_t seed = 1;
  double target_accept = 0.8;
  int max_treedepth = 10;
  double init_radius = 2.0;
  int max_init_attempts = 100;
  bool parallel = true;
  /// Test harness hook: a fixed leapfrog step size, no step adaptation.
  std::optional<double> fixed_step_size;

  void validate() const;
};

struct ChainStats {
  double step_size = 0.0;
  int divergences = 0;
  double mean_accept = 0.0;
  double mean_treedepth = 0.0;
  long long leapfrog_steps = 0;
};

/// Kept draws in constrained space, indexed (chain, draw, parameter).
struct PosteriorDraws {
  std::vector<ParamInfo> params;
  int chains = 0;
  int draws = 0;
  std::vector<double> values;
  std::vector<double> rhat;  // split-chain, per parameter; NaN when degenerate
  std::vector<double> ess;
  std::vector<ChainStats> chain_stats;
  std::optional<ScaleInfo> scale;

  std::size_t dimension() const { return params.size(); }
  double at(int chain, int draw, std::size_t param) const {
    return values[(static_cast<std::size_t>(chain) * draws + draw) * params.size() + param];
  }
  std::span<const double> draw(int chain, int d) const {
    return {values.data() + (static_cast<std::size_t>(chain) * draws + d) * params.size(),
            params.size()};
  }
  /// Draws of one parameter, chain-major.
  std::vector<double> parameter(std::size_t param) const;
  std::optional<std::size_t> index_of(const std::string &name) const;
  /// Recomputes rhat/ess from `values`.
  void compute_diagnostics();
  /// True when every non-degenerate R-hat is at most `threshold`.
  bool converged(double threshold = 1.1) const;
};

/// No-U-turn Hamiltonian Monte Carlo with a diagonal metric and windowed
/// warmup adaptation. Chains are seeded from (seed, chain index), so the
/// result does not depend on thread scheduling.
PosteriorDraws sample(const Density &density, const SamplerConfig &cfg);

}  // namespace mmm
