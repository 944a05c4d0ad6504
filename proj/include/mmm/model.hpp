#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mmm/dataset.hpp"
#include "mmm/sampler.hpp"
#include "mmm/transforms.hpp"

namespace mmm {

/// The six media transform chains.
enum class Variant {
  Adstock,      // coefficient * adstock
  Carryover,    // coefficient * carryover
  HillAdstock,  // hill(adstock)
  MMAdstock,    // michaelis_menten(adstock)
  MMCarryover,  // michaelis_menten(carryover)
  MMBoltzmann,  // michaelis_menten(boltzmann_mix(carryover))
};

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
const std::vector<std::string> &variant_names();

bool uses_carryover(Variant v);
bool uses_michaelis_menten(Variant v);

/// Prior hyperparameters. Scales for V/S and K/K_A are multiples of the
/// (scaled) response mean and channel mean respectively.
struct PriorSpec {
  double baseline_scale = 2.0;     // half-normal
  double control_sd = 1.0;         // normal(0, sd)
  double noise_scale = 1.0;        // half-normal
  double retention_a = 2.0;        // beta(a, b) for alpha / retention
  double retention_b = 2.0;
  double delay_max = 3.0;          // delta ~ uniform(0, min(delay_max, L - 1))
  double saturation_factor = 2.0;  // V, S ~ half-normal(factor * mean(y))
  double half_saturation_factor = 2.0;  // K, K_A ~ half-normal(factor * mean(x_m))
  double coefficient_scale = 2.0;  // linear variants: beta_m ~ half-normal
  double hill_shape = 2.0;         // n ~ gamma(shape, rate) on (hill_lower, hill_upper]
  double hill_rate = 1.0;
  double hill_lower = 0.5;
  double hill_upper = 3.0;
  double self_lower = 0.8;         // a_m ~ uniform(self_lower, self_upper)
  double self_upper = 1.0;
  double cross_scale = 0.1;        // b_m ~ half-normal, truncated to [0, 1]
  double trend_sd = 1.0;
  double seasonality_sd = 1.0;

  void validate() const;
};

struct ModelSpec {
  Variant variant = Variant::MMCarryover;
  int max_delay = kDefaultMaxDelay;
  bool include_trend = false;
  int seasonality_terms = 0;  // Fourier pairs, 52-week period
  PriorSpec priors;

  void validate() const;
};

inline constexpr double kSeasonPeriodWeeks = 52.0;

/// Additive pieces of the mean function, in the units of the dataset the
/// model was built on.
struct Components {
  Eigen::VectorXd baseline;
  Eigen::VectorXd trend;
  Eigen::VectorXd seasonality;
  Eigen::MatrixXd controls;  // T x C, gamma_c * z_c
  Eigen::MatrixXd media;     // T x M, per-channel contribution

  Eigen::VectorXd total() const;
};

/// Hierarchical regression joint density for one dataset and one variant:
/// y_t ~ Normal(baseline + trend + seasonality + sum_m chain_m(x_m) +
/// sum_c gamma_c z_c, sigma), with shared prior families across channels.
class Model final : public Density {
 public:
  Model(TimeSeriesDataset ds, ModelSpec spec);

  const std::vector<ParamInfo> &parameters() const override { return params_; }
  double log_density(std::span<const double> theta, std::span<double> grad) const override;

  double log_prior(std::span<const double> theta) const;
  double log_likelihood(std::span<const double> theta) const;

  Components components(std::span<const double> theta) const;
  Eigen::VectorXd mean(std::span<const double> theta) const;
  /// Per-channel contributions with the collision mix removed (mm_boltzmann);
  /// equal to components().media for the other variants.
  Eigen::MatrixXd isolated_media(std::span<const double> theta) const;
  /// Saturation-stage input per channel (after carryover/adstock and mixing).
  Eigen::MatrixXd saturation_input(std::span<const double> theta) const;

  /// Disables the likelihood term (prior-only sampling harness).
  void set_likelihood_enabled(bool enabled) { likelihood_enabled_ = enabled; }

  const TimeSeriesDataset &dataset() const { return ds_; }
  const ModelSpec &spec() const { return spec_; }
  std::size_t index_of(const std::string &name) const;

  /// Layout of one channel's parameters inside theta; -1 when absent.
  struct ChannelSlots {
    int window = -1;  // alpha or retention
    int delay = -1;
    int coefficient = -1;  // linear variants
    int vmax = -1;         // V or S
    int km = -1;           // K or K_A
    int slope = -1;        // Hill n
    int self = -1;         // a
    int cross = -1;        // b
  };
  const ChannelSlots &slots(std::size_t channel) const { return channel_slots_[channel]; }
  int baseline_slot() const { return baseline_; }
  int noise_slot() const { return sigma_; }

 private:
  struct Workspace;

  void add_param(std::string name, Bounds bounds, Prior prior, Unit unit, int &slot);
  double evaluate(std::span<const double> theta, std::span<double> grad, bool with_prior,
                  bool with_likelihood) const;
  void forward(std::span<const double> theta, Workspace &ws, bool with_derivatives) const;

  TimeSeriesDataset ds_;
  ModelSpec spec_;
  std::vector<ParamInfo> params_;
  int baseline_ = -1;
  int trend_ = -1;
  int season_ = -1;  // first of 2 * seasonality_terms
  int controls_ = -1;
  int sigma_ = -1;
  std::vector<ChannelSlots> channel_slots_;
  Eigen::VectorXd trend_basis_;
  Eigen::MatrixXd season_basis_;
  double delay_upper_ = 0.0;
  bool likelihood_enabled_ = true;
};

}  // namespace mmm
