#include "mmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmm/error.hpp"

namespace mmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct VariantName {
  Variant variant;
  const char *name;
};

constexpr VariantName kVariantNames[] = {
    {Variant::Adstock, "adstock"},          {Variant::Carryover, "carryover"},
    {Variant::HillAdstock, "hill_adstock"}, {Variant::MMAdstock, "mm_adstock"},
    {Variant::MMCarryover, "mm_carryover"}, {Variant::MMBoltzmann, "mm_boltzmann"},
};

bool is_linear(Variant v) { return v == Variant::Adstock || v == Variant::Carryover; }

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto &entry : kVariantNames)
    if (entry.variant == v) return entry.name;
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (const auto &entry : kVariantNames)
    if (name == entry.name) return entry.variant;
  return std::nullopt;
}

const std::vector<std::string> &variant_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto &entry : kVariantNames) out.emplace_back(entry.name);
    return out;
  }();
  return names;
}

bool uses_carryover(Variant v) {
  return v == Variant::Carryover || v == Variant::MMCarryover || v == Variant::MMBoltzmann;
}

bool uses_michaelis_menten(Variant v) {
  return v == Variant::MMAdstock || v == Variant::MMCarryover || v == Variant::MMBoltzmann;
}

void PriorSpec::validate() const {
  const double scales[] = {baseline_scale,  control_sd,        noise_scale,   retention_a,
                           retention_b,     saturation_factor, half_saturation_factor,
                           coefficient_scale, hill_shape,      hill_rate,     cross_scale,
                           trend_sd,        seasonality_sd};
  for (double s : scales)
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "prior scale hyperparameters must be > 0");
  if (!(delay_max >= 0.0)) throw Error(ErrorCode::InvalidArgument, "delay_max must be >= 0");
  if (!(hill_lower >= 0.0 && hill_upper > hill_lower))
    throw Error(ErrorCode::InvalidArgument, "hill slope bounds must satisfy 0 <= lower < upper");
  if (!(self_upper > self_lower))
    throw Error(ErrorCode::InvalidArgument, "self-retention bounds must satisfy lower < upper");
}

void ModelSpec::validate() const {
  if (max_delay < 1) throw Error(ErrorCode::InvalidArgument, "max_delay must be >= 1");
  if (seasonality_terms < 0)
    throw Error(ErrorCode::InvalidArgument, "seasonality_terms must be >= 0");
  priors.validate();
}

Eigen::VectorXd Components::total() const {
  Eigen::VectorXd out = baseline;
  if (trend.size()) out += trend;
  if (seasonality.size()) out += seasonality;
  for (Eigen::Index m = 0; m < media.cols(); ++m) out += media.col(m);
  for (Eigen::Index c = 0; c < controls.cols(); ++c) out += controls.col(c);
  return out;
}

struct Model::Workspace {
  Eigen::MatrixXd window;      // carryover / adstock output c
  Eigen::MatrixXd d_window;    // dc / d(alpha or retention)
  Eigen::MatrixXd d_delay;     // dc / d(delta)
  Eigen::MatrixXd input;       // saturation input u
  Eigen::MatrixXd media;       // contribution f
  Eigen::MatrixXd df_du;       // partial of f wrt u
  Eigen::VectorXd mean;
};

Model::Model(TimeSeriesDataset ds, ModelSpec spec) : ds_(std::move(ds)), spec_(std::move(spec)) {
  spec_.validate();
  ds_.validate(spec_.max_delay);
  const auto T = static_cast<Eigen::Index>(ds_.weeks());
  const std::size_t M = ds_.channels();
  const std::size_t C = ds_.num_controls();
  const Variant v = spec_.variant;
  if (v == Variant::MMBoltzmann && M < 2)
    throw Error(ErrorCode::SpecMismatch,
                "mm_boltzmann needs at least two channels (no cross channel with M = " +
                    std::to_string(M) + ")");
  if (T < 2) throw Error(ErrorCode::InvalidArgument, "model needs at least two weeks");

  const PriorSpec &pr = spec_.priors;
  const double y_mean = ds_.response.mean();
  const Bounds positive{0.0, kInf};
  const Bounds real{};

  add_param("baseline", positive, Prior::half_normal(pr.baseline_scale), {Unit::Kind::Response}, baseline_);
  if (spec_.include_trend) {
    add_param("trend", real, Prior::normal(0.0, pr.trend_sd), {Unit::Kind::Response}, trend_);
    trend_basis_ = Eigen::VectorXd::LinSpaced(T, 0.0, 1.0);
  }
  if (spec_.seasonality_terms > 0) {
    season_basis_.resize(T, 2 * spec_.seasonality_terms);
    for (int k = 0; k < spec_.seasonality_terms; ++k) {
      int slot = -1;
      add_param("season_sin_" + std::to_string(k + 1), real, Prior::normal(0.0, pr.seasonality_sd),
                {Unit::Kind::Response}, slot);
      if (k == 0) season_ = slot;
      add_param("season_cos_" + std::to_string(k + 1), real, Prior::normal(0.0, pr.seasonality_sd),
                {Unit::Kind::Response}, slot);
      for (Eigen::Index t = 0; t < T; ++t) {
        const double angle = 2.0 * std::numbers::pi * (k + 1) * static_cast<double>(t) / kSeasonPeriodWeeks;
        season_basis_(t, 2 * k) = std::sin(angle);
        season_basis_(t, 2 * k + 1) = std::cos(angle);
      }
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    int slot = -1;
    add_param("gamma[" + ds_.control_names[c] + "]", real, Prior::normal(0.0, pr.control_sd),
              {Unit::Kind::ResponsePerControl, static_cast<int>(c)}, slot);
    if (c == 0) controls_ = slot;
  }
  add_param("sigma", positive, Prior::half_normal(pr.noise_scale), {Unit::Kind::Response}, sigma_);

  delay_upper_ = std::min(pr.delay_max, static_cast<double>(spec_.max_delay - 1));
  channel_slots_.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    const std::string tag = "[" + ds_.channel_names[m] + "]";
    const int idx = static_cast<int>(m);
    ChannelSlots &s = channel_slots_[m];
    add_param((uses_carryover(v) ? "retention" : "alpha") + tag, Bounds{0.0, 1.0},
              Prior::beta(pr.retention_a, pr.retention_b), {}, s.window);
    if (delay_upper_ > 0.0)
      add_param("delta" + tag, Bounds{0.0, delay_upper_}, Prior::uniform(0.0, delay_upper_), {},
                s.delay);
    const double x_mean = ds_.media.col(static_cast<Eigen::Index>(m)).mean();
    const double k_scale = pr.half_saturation_factor * (x_mean > 0.0 ? x_mean : 1.0);
    const double v_scale = pr.saturation_factor * (y_mean > 0.0 ? y_mean : 1.0);
    if (is_linear(v)) {
      add_param("coef" + tag, positive, Prior::half_normal(pr.coefficient_scale),
                {Unit::Kind::ResponsePerSpend, idx}, s.coefficient);
    } else if (v == Variant::HillAdstock) {
      add_param("S" + tag, positive, Prior::half_normal(v_scale), {Unit::Kind::Response}, s.vmax);
      add_param("K_A" + tag, positive, Prior::half_normal(k_scale), {Unit::Kind::Spend, idx}, s.km);
      add_param("n" + tag, Bounds{pr.hill_lower, pr.hill_upper},
                Prior::gamma(pr.hill_shape, pr.hill_rate), {}, s.slope);
    } else {
      add_param("V" + tag, positive, Prior::half_normal(v_scale), {Unit::Kind::Response}, s.vmax);
      add_param("K" + tag, positive, Prior::half_normal(k_scale), {Unit::Kind::Spend, idx}, s.km);
    }
    if (v == Variant::MMBoltzmann) {
      add_param("a" + tag, Bounds{pr.self_lower, pr.self_upper},
                Prior::uniform(pr.self_lower, pr.self_upper), {}, s.self);
      add_param("b" + tag, Bounds{0.0, 1.0}, Prior::half_normal(pr.cross_scale), {}, s.cross);
    }
  }
}

void Model::add_param(std::string name, Bounds bounds, Prior prior, Unit unit, int &slot) {
  slot = static_cast<int>(params_.size());
  params_.push_back({std::move(name), bounds, prior, unit});
}

std::size_t Model::index_of(const std::string &name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  throw Error(ErrorCode::InvalidArgument, "no parameter named '" + name + "'");
}

void Model::forward(std::span<const double> theta, Workspace &ws, bool with_derivatives) const {
  const auto T = static_cast<Eigen::Index>(ds_.weeks());
  const auto M = static_cast<Eigen::Index>(ds_.channels());
  const int L = spec_.max_delay;
  const Variant v = spec_.variant;

  ws.window.resize(T, M);
  if (with_derivatives) {
    ws.d_window.resize(T, M);
    ws.d_delay.resize(T, M);
    ws.df_du.resize(T, M);
  }
  std::vector<double> w(static_cast<std::size_t>(L));
  std::vector<double> dw_base(static_cast<std::size_t>(L));
  std::vector<double> dw_delay(static_cast<std::size_t>(L));

  for (Eigen::Index m = 0; m < M; ++m) {
    const ChannelSlots &s = channel_slots_[static_cast<std::size_t>(m)];
    const double base = theta[static_cast<std::size_t>(s.window)];
    const double delta = s.delay >= 0 ? theta[static_cast<std::size_t>(s.delay)] : 0.0;
    const double log_base = std::log(base);
    for (int l = 0; l < L; ++l) {
      const double d = l - delta;
      w[l] = std::pow(base, d * d);
      dw_base[l] = w[l] * d * d / base;
      dw_delay[l] = -2.0 * d * log_base * w[l];
    }
    const auto x = ds_.media.col(m);
    for (Eigen::Index t = 0; t < T; ++t) {
      const int last = static_cast<int>(std::min<Eigen::Index>(t, L - 1));
      double num = 0.0, den = 0.0;
      double num_b = 0.0, den_b = 0.0, num_d = 0.0, den_d = 0.0;
      for (int l = 0; l <= last; ++l) {
        const double xv = x[t - l];
        num += w[l] * xv;
        den += w[l];
        if (with_derivatives) {
          num_b += dw_base[l] * xv;
          den_b += dw_base[l];
          num_d += dw_delay[l] * xv;
          den_d += dw_delay[l];
        }
      }
      const double c = num / den;
      ws.window(t, m) = c;
      if (with_derivatives) {
        ws.d_window(t, m) = (num_b - c * den_b) / den;
        ws.d_delay(t, m) = (num_d - c * den_d) / den;
      }
    }
  }

  if (v == Variant::MMBoltzmann) {
    ws.input.resize(T, M);
    const Eigen::VectorXd row_total = ws.window.rowwise().sum();
    for (Eigen::Index m = 0; m < M; ++m) {
      const ChannelSlots &s = channel_slots_[static_cast<std::size_t>(m)];
      const double a = theta[static_cast<std::size_t>(s.self)];
      const double b = theta[static_cast<std::size_t>(s.cross)];
      ws.input.col(m) = a * ws.window.col(m) + b * (row_total - ws.window.col(m));
    }
  } else {
    ws.input = ws.window;
  }

  ws.media.resize(T, M);
  for (Eigen::Index m = 0; m < M; ++m) {
    const ChannelSlots &s = channel_slots_[static_cast<std::size_t>(m)];
    for (Eigen::Index t = 0; t < T; ++t) {
      const double u = ws.input(t, m);
      double f = 0.0, dfu = 0.0;
      if (is_linear(v)) {
        const double beta = theta[static_cast<std::size_t>(s.coefficient)];
        f = beta * u;
        dfu = beta;
      } else if (v == Variant::HillAdstock) {
        const double S = theta[static_cast<std::size_t>(s.vmax)];
        const double K = theta[static_cast<std::size_t>(s.km)];
        const double n = theta[static_cast<std::size_t>(s.slope)];
        if (u > 0.0) {
          const double r = std::pow(u / K, n);
          f = S * r / (1.0 + r);
          dfu = S / ((1.0 + r) * (1.0 + r)) * n * r / u;
        }
      } else {
        const double V = theta[static_cast<std::size_t>(s.vmax)];
        const double K = theta[static_cast<std::size_t>(s.km)];
        f = V * u / (u + K);
        dfu = V * K / ((u + K) * (u + K));
      }
      ws.media(t, m) = f;
      if (with_derivatives) ws.df_du(t, m) = dfu;
    }
  }

  ws.mean = Eigen::VectorXd::Constant(T, theta[static_cast<std::size_t>(baseline_)]);
  if (trend_ >= 0) ws.mean += theta[static_cast<std::size_t>(trend_)] * trend_basis_;
  if (season_ >= 0)
    for (Eigen::Index k = 0; k < season_basis_.cols(); ++k)
      ws.mean += theta[static_cast<std::size_t>(season_ + k)] * season_basis_.col(k);
  for (Eigen::Index m = 0; m < M; ++m) ws.mean += ws.media.col(m);
  for (Eigen::Index c = 0; c < ds_.controls.cols(); ++c)
    ws.mean += theta[static_cast<std::size_t>(controls_ + c)] * ds_.controls.col(c);
}

double Model::evaluate(std::span<const double> theta, std::span<double> grad, bool with_prior,
                       bool with_likelihood) const {
  const bool want_grad = !grad.empty();
  if (theta.size() != params_.size())
    throw Error(ErrorCode::DimensionMismatch, "parameter vector has " +
                                                  std::to_string(theta.size()) + " entries, model has " +
                                                  std::to_string(params_.size()));
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  for (std::size_t i = 0; i < params_.size(); ++i)
    if (!params_[i].bounds.contains(theta[i]) || !std::isfinite(theta[i])) return kNegInf;

  double lp = 0.0;
  if (with_prior) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      double d = 0.0;
      lp += mmm::log_prior(params_[i].prior, params_[i].bounds, theta[i], want_grad ? &d : nullptr);
      if (want_grad) grad[i] += d;
    }
    if (!std::isfinite(lp)) return kNegInf;
  }
  if (!with_likelihood) return lp;

  Workspace ws;
  forward(theta, ws, want_grad);
  const auto T = static_cast<Eigen::Index>(ds_.weeks());
  const double sigma = theta[static_cast<std::size_t>(sigma_)];
  const Eigen::VectorXd resid = ds_.response - ws.mean;
  const double sse = resid.squaredNorm();
  const double n = static_cast<double>(T);
  const double ll = -0.5 * n * std::log(2.0 * std::numbers::pi * sigma * sigma) - sse / (2.0 * sigma * sigma);
  lp += ll;
  if (!std::isfinite(lp)) return kNegInf;
  if (!want_grad) return lp;

  // d loglik / d mean_t
  const Eigen::VectorXd g = resid / (sigma * sigma);
  grad[static_cast<std::size_t>(sigma_)] += -n / sigma + sse / (sigma * sigma * sigma);
  grad[static_cast<std::size_t>(baseline_)] += g.sum();
  if (trend_ >= 0) grad[static_cast<std::size_t>(trend_)] += g.dot(trend_basis_);
  if (season_ >= 0)
    for (Eigen::Index k = 0; k < season_basis_.cols(); ++k)
      grad[static_cast<std::size_t>(season_ + k)] += g.dot(season_basis_.col(k));
  for (Eigen::Index c = 0; c < ds_.controls.cols(); ++c)
    grad[static_cast<std::size_t>(controls_ + c)] += g.dot(ds_.controls.col(c));

  const auto M = static_cast<Eigen::Index>(ds_.channels());
  const Variant v = spec_.variant;
  // h = d loglik / d u (saturation input), per channel.
  Eigen::MatrixXd h(T, M);
  for (Eigen::Index m = 0; m < M; ++m) {
    const ChannelSlots &s = channel_slots_[static_cast<std::size_t>(m)];
    h.col(m) = g.cwiseProduct(ws.df_du.col(m));
    if (is_linear(v)) {
      grad[static_cast<std::size_t>(s.coefficient)] += g.dot(ws.input.col(m));
      continue;
    }
    if (v == Variant::HillAdstock) {
      const double S = theta[static_cast<std::size_t>(s.vmax)];
      const double K = theta[static_cast<std::size_t>(s.km)];
      const double nh = theta[static_cast<std::size_t>(s.slope)];
      double dS = 0.0, dK = 0.0, dn = 0.0;
      for (Eigen::Index t = 0; t < T; ++t) {
        const double u = ws.input(t, m);
        if (u <= 0.0) continue;
        const double r = std::pow(u / K, nh);
        const double df_dr = S / ((1.0 + r) * (1.0 + r));
        dS += g[t] * r / (1.0 + r);
        dK += g[t] * df_dr * (-nh * r / K);
        dn += g[t] * df_dr * r * std::log(u / K);
      }
      grad[static_cast<std::size_t>(s.vmax)] += dS;
      grad[static_cast<std::size_t>(s.km)] += dK;
      grad[static_cast<std::size_t>(s.slope)] += dn;
      continue;
    }
    const double V = theta[static_cast<std::size_t>(s.vmax)];
    const double K = theta[static_cast<std::size_t>(s.km)];
    double dV = 0.0, dK = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      const double u = ws.input(t, m);
      const double denom = u + K;
      dV += g[t] * u / denom;
      dK -= g[t] * V * u / (denom * denom);
    }
    grad[static_cast<std::size_t>(s.vmax)] += dV;
    grad[static_cast<std::size_t>(s.km)] += dK;
  }

  // Adjoint on the window output c.
  Eigen::MatrixXd hc;
  if (v == Variant::MMBoltzmann) {
    const Eigen::VectorXd row_total = ws.window.rowwise().sum();
    Eigen::VectorXd cross_sum = Eigen::VectorXd::Zero(T);
    for (Eigen::Index m = 0; m < M; ++m) {
      const ChannelSlots &s = channel_slots_[static_cast<std::size_t>(m)];
      cross_sum += theta[static_cast<std::size_t>(s.cross)] * h.col(m);
      grad[static_cast<std::size_t>(s.self)] += h.col(m).dot(ws.window.col(m));
      grad[static_cast<std::size_t>(s.cross)] += h.col(m).dot(row_total - ws.window.col(m));
    }
    hc.resize(T, M);
    for (Eigen::Index m = 0; m < M; ++m) {
      const ChannelSlots &s = channel_slots_[static_cast<std::size_t>(m)];
      const double a = theta[static_cast<std::size_t>(s.self)];
      const double b = theta[static_cast<std::size_t>(s.cross)];
      hc.col(m) = (a - b) * h.col(m) + cross_sum;
    }
  } else {
    hc = std::move(h);
  }
  for (Eigen::Index m = 0; m < M; ++m) {
    const ChannelSlots &s = channel_slots_[static_cast<std::size_t>(m)];
    grad[static_cast<std::size_t>(s.window)] += hc.col(m).dot(ws.d_window.col(m));
    if (s.delay >= 0) grad[static_cast<std::size_t>(s.delay)] += hc.col(m).dot(ws.d_delay.col(m));
  }
  return lp;
}

double Model::log_density(std::span<const double> theta, std::span<double> grad) const {
  return evaluate(theta, grad, true, likelihood_enabled_);
}

double Model::log_prior(std::span<const double> theta) const {
  return evaluate(theta, {}, true, false);
}

double Model::log_likelihood(std::span<const double> theta) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (!params_[i].bounds.contains(theta[i])) return kNegInf;
  return evaluate(theta, {}, false, true);
}

Components Model::components(std::span<const double> theta) const {
  if (theta.size() != params_.size())
    throw Error(ErrorCode::DimensionMismatch, "parameter vector does not match model");
  Workspace ws;
  forward(theta, ws, false);
  const auto T = static_cast<Eigen::Index>(ds_.weeks());
  Components out;
  out.baseline = Eigen::VectorXd::Constant(T, theta[static_cast<std::size_t>(baseline_)]);
  out.trend = Eigen::VectorXd::Zero(T);
  if (trend_ >= 0) out.trend = theta[static_cast<std::size_t>(trend_)] * trend_basis_;
  out.seasonality = Eigen::VectorXd::Zero(T);
  if (season_ >= 0)
    for (Eigen::Index k = 0; k < season_basis_.cols(); ++k)
      out.seasonality += theta[static_cast<std::size_t>(season_ + k)] * season_basis_.col(k);
  out.controls.resize(T, ds_.controls.cols());
  for (Eigen::Index c = 0; c < ds_.controls.cols(); ++c)
    out.controls.col(c) = theta[static_cast<std::size_t>(controls_ + c)] * ds_.controls.col(c);
  out.media = std::move(ws.media);
  return out;
}

Eigen::VectorXd Model::mean(std::span<const double> theta) const {
  Workspace ws;
  forward(theta, ws, false);
  return ws.mean;
}

Eigen::MatrixXd Model::isolated_media(std::span<const double> theta) const {
  Workspace ws;
  forward(theta, ws, false);
  if (spec_.variant != Variant::MMBoltzmann) return ws.media;
  Eigen::MatrixXd out(ws.window.rows(), ws.window.cols());
  for (Eigen::Index m = 0; m < out.cols(); ++m) {
    const ChannelSlots &s = channel_slots_[static_cast<std::size_t>(m)];
    const MMParams p{theta[static_cast<std::size_t>(s.vmax)], theta[static_cast<std::size_t>(s.km)]};
    for (Eigen::Index t = 0; t < out.rows(); ++t)
      out(t, m) = michaelis_menten(ws.window(t, m), p);
  }
  return out;
}

Eigen::MatrixXd Model::saturation_input(std::span<const double> theta) const {
  Workspace ws;
  forward(theta, ws, false);
  return ws.input;
}

}  // namespace mmm
