#pragma once

#include <Eigen/Core>

// Media response transforms. All functions are pure.

namespace mmm {

inline constexpr int kDefaultMaxDelay = 13;

/// Geometric-in-squared-lag delay weights, alpha^((l - delta)^2).
struct AdstockParams {
  double alpha = 0.5;
  double delta = 0.0;
  int max_delay = kDefaultMaxDelay;

  void validate() const;
};

/// Same window shape as adstock; `retention` is the ad effect retention rate.
struct CarryoverParams {
  double retention = 0.5;
  double delta = 0.0;
  int max_delay = kDefaultMaxDelay;

  void validate() const;
};

struct HillParams {
  double half_saturation = 1.0;  // K_A
  double slope = 1.0;            // Hill coefficient n
  double scale = 1.0;            // output scale S

  void validate() const;
};

struct MMParams {
  double vmax = 1.0;  // V
  double km = 1.0;    // K

  void validate() const;
};

/// Per-channel collision coefficients: out_i = a_i x_i + b_i sum_{j != i} x_j.
struct BoltzmannParams {
  Eigen::VectorXd self;   // a
  Eigen::VectorXd cross;  // b

  static BoltzmannParams uniform(Eigen::Index channels, double a, double b);
};

Eigen::VectorXd delay_weights(const AdstockParams &p);
Eigen::VectorXd carryover_weights(const CarryoverParams &p);

/// out[t] = sum_l w[l] x[t-l] / sum_l w[l] over the lags available at t.
Eigen::VectorXd windowed_mean(const Eigen::Ref<const Eigen::VectorXd> &x,
                              const Eigen::Ref<const Eigen::VectorXd> &weights);

Eigen::VectorXd adstock(const Eigen::Ref<const Eigen::VectorXd> &x,
                        const AdstockParams &p);
Eigen::VectorXd carryover(const Eigen::Ref<const Eigen::VectorXd> &x,
                          const CarryoverParams &p);

double hill(double x, const HillParams &p);
Eigen::VectorXd hill(const Eigen::Ref<const Eigen::VectorXd> &x,
                     const HillParams &p);

double michaelis_menten(double x, const MMParams &p);
Eigen::VectorXd michaelis_menten(const Eigen::Ref<const Eigen::VectorXd> &x,
                                 const MMParams &p);

/// Funnel mix over the remaining channels (j != i), row-wise. X is T x M.
Eigen::MatrixXd boltzmann_mix(const Eigen::Ref<const Eigen::MatrixXd> &X,
                              const BoltzmannParams &p);

/// N-particle linear transform with the sum over all particles (j = 1..N,
/// including i): v*_i = a v_i + b sum_j v_j. Used by the verification
/// utilities only.
Eigen::VectorXd n_particle_transform(const Eigen::Ref<const Eigen::VectorXd> &v,
                                     double a, double b);

}  // namespace mmm
