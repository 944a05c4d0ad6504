#include "mmm/transforms.hpp"

#include <cmath>
#include <string>

#include "mmm/error.hpp"

namespace mmm {

namespace {

void check_window(double base, double delta, int max_delay, const char *what) {
  if (max_delay < 1)
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + ": max_delay must be >= 1");
  if (!(base > 0.0 && base < 1.0))
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + ": base must lie in (0, 1)");
  if (!(delta >= 0.0 && delta <= max_delay - 1))
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + ": delta must lie in [0, max_delay - 1]");
}

Eigen::VectorXd squared_lag_weights(double base, double delta, int max_delay) {
  Eigen::VectorXd w(max_delay);
  for (int l = 0; l < max_delay; ++l) {
    const double d = l - delta;
    w[l] = std::pow(base, d * d);
  }
  return w;
}

}  // namespace

void AdstockParams::validate() const {
  check_window(alpha, delta, max_delay, "adstock");
}

void CarryoverParams::validate() const {
  check_window(retention, delta, max_delay, "carryover");
}

void HillParams::validate() const {
  if (!(half_saturation > 0.0 && slope > 0.0 && scale > 0.0))
    throw Error(ErrorCode::InvalidArgument,
                "hill: K_A, n and S must be positive");
}

void MMParams::validate() const {
  if (!(vmax > 0.0 && km > 0.0))
    throw Error(ErrorCode::InvalidArgument,
                "michaelis_menten: V and K must be positive");
}

BoltzmannParams BoltzmannParams::uniform(Eigen::Index channels, double a,
                                         double b) {
  return {Eigen::VectorXd::Constant(channels, a),
          Eigen::VectorXd::Constant(channels, b)};
}

Eigen::VectorXd delay_weights(const AdstockParams &p) {
  p.validate();
  return squared_lag_weights(p.alpha, p.delta, p.max_delay);
}

Eigen::VectorXd carryover_weights(const CarryoverParams &p) {
  p.validate();
  return squared_lag_weights(p.retention, p.delta, p.max_delay);
}

Eigen::VectorXd windowed_mean(const Eigen::Ref<const Eigen::VectorXd> &x,
                              const Eigen::Ref<const Eigen::VectorXd> &weights) {
  const Eigen::Index n = x.size();
  const Eigen::Index lags = weights.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index last = std::min(t, lags - 1);
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index l = 0; l <= last; ++l) {
      num += weights[l] * x[t - l];
      den += weights[l];
    }
    out[t] = num / den;
  }
  return out;
}

Eigen::VectorXd adstock(const Eigen::Ref<const Eigen::VectorXd> &x,
                        const AdstockParams &p) {
  return windowed_mean(x, delay_weights(p));
}

Eigen::VectorXd carryover(const Eigen::Ref<const Eigen::VectorXd> &x,
                          const CarryoverParams &p) {
  return windowed_mean(x, carryover_weights(p));
}

double hill(double x, const HillParams &p) {
  if (x <= 0.0) return 0.0;
  const double r = std::pow(x / p.half_saturation, p.slope);
  return p.scale * r / (1.0 + r);
}

Eigen::VectorXd hill(const Eigen::Ref<const Eigen::VectorXd> &x,
                     const HillParams &p) {
  p.validate();
  return x.unaryExpr([&](double v) { return hill(v, p); });
}

double michaelis_menten(double x, const MMParams &p) {
  // x / (x + K) first, so x = K gives exactly V / 2.
  return p.vmax * (x / (x + p.km));
}

Eigen::VectorXd michaelis_menten(const Eigen::Ref<const Eigen::VectorXd> &x,
                                 const MMParams &p) {
  p.validate();
  return x.unaryExpr([&](double v) { return michaelis_menten(v, p); });
}

Eigen::MatrixXd boltzmann_mix(const Eigen::Ref<const Eigen::MatrixXd> &X,
                              const BoltzmannParams &p) {
  if (p.self.size() != X.cols() || p.cross.size() != X.cols())
    throw Error(ErrorCode::DimensionMismatch,
                "boltzmann_mix: coefficient vectors must have one entry per "
                "channel (" + std::to_string(X.cols()) + ")");
  const Eigen::VectorXd row_total = X.rowwise().sum();
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i)
    out.col(i) = p.self[i] * X.col(i) + p.cross[i] * (row_total - X.col(i));
  return out;
}

Eigen::VectorXd n_particle_transform(const Eigen::Ref<const Eigen::VectorXd> &v,
                                     double a, double b) {
  return (a * v.array() + b * v.sum()).matrix();
}

}  // namespace mmm
