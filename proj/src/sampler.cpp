#include "mmm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "mmm/diagnostics.hpp"
#include "mmm/error.hpp"

namespace mmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxDeltaH = 1000.0;

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;  // gradient of log density at q
  double log_density = 0.0;
};

// Dual averaging step-size adaptation.
class StepSizeAdapter {
 public:
  explicit StepSizeAdapter(double target) : target_(target) {}

  void restart(double step) {
    mu_ = std::log(10.0 * step);
    s_bar_ = 0.0;
    x_bar_ = 0.0;
    counter_ = 0;
  }

  double learn(double accept) {
    ++counter_;
    accept = std::min(1.0, accept);
    const double eta = 1.0 / (counter_ + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - accept);
    const double x = mu_ - s_bar_ * std::sqrt(static_cast<double>(counter_)) / kGamma;
    const double x_eta = std::pow(static_cast<double>(counter_), -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  double final_step() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double target_;
  double mu_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  long counter_ = 0;
};

// Windowed metric adaptation: fast initial buffer, doubling slow windows,
// fast terminal buffer.
class WindowSchedule {
 public:
  explicit WindowSchedule(int warmup) : warmup_(warmup) {
    if (warmup < 20) {
      enabled_ = false;
      return;
    }
    if (init_ + term_ + base_ > warmup) {
      init_ = static_cast<int>(0.15 * warmup);
      term_ = static_cast<int>(0.1 * warmup);
      base_ = warmup - init_ - term_;
    }
    window_size_ = base_;
    window_end_ = init_ + window_size_;
    if (window_end_ + 2 * window_size_ > warmup_ - term_) window_end_ = warmup_ - term_;
  }

  bool collecting(int iter) const {
    return enabled_ && iter >= init_ && iter < warmup_ - term_;
  }

  // True when a slow window ends after iteration `iter`; advances the schedule.
  bool window_ends(int iter) {
    if (!enabled_ || iter + 1 != window_end_) return false;
    window_size_ *= 2;
    int next_end = window_end_ + window_size_;
    if (next_end + 2 * window_size_ > warmup_ - term_) next_end = warmup_ - term_;
    window_end_ = next_end;
    return true;
  }

 private:
  int warmup_;
  bool enabled_ = true;
  int init_ = 75;
  int term_ = 50;
  int base_ = 25;
  int window_size_ = 0;
  int window_end_ = 0;
};

class Chain {
 public:
  Chain(const UnconstrainedDensity &density, const SamplerConfig &cfg, int index)
      : density_(density), cfg_(cfg), inv_metric_(Eigen::VectorXd::Ones(density.dimension())),
        adapter_(cfg.target_accept) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(index)};
    rng_.seed(seq);
  }

  void run(std::span<double> kept, ChainStats &stats);

 private:
  double uniform() { return unif_(rng_); }

  void evaluate(PhasePoint &z) const {
    z.log_density = density_(z.q, z.grad);
    if (!std::isfinite(z.log_density)) z.log_density = -kInf;
  }

  double hamiltonian(const PhasePoint &z) const {
    if (z.log_density == -kInf) return kInf;
    return -z.log_density + 0.5 * z.p.dot(inv_metric_.cwiseProduct(z.p));
  }

  Eigen::VectorXd dtau_dp(const PhasePoint &z) const { return inv_metric_.cwiseProduct(z.p); }

  void sample_momentum(PhasePoint &z) {
    for (Eigen::Index i = 0; i < z.p.size(); ++i)
      z.p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
  }

  void leapfrog(PhasePoint &z, double eps) const {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    evaluate(z);
    if (z.log_density == -kInf) return;
    z.p += 0.5 * eps * z.grad;
  }

  void initialize();
  void init_step_size();
  double transition(int &depth, bool &divergent);
  bool build_tree(int depth, PhasePoint &z_propose, Eigen::VectorXd &p_sharp_beg,
                  Eigen::VectorXd &p_sharp_end, Eigen::VectorXd &rho, Eigen::VectorXd &p_beg,
                  Eigen::VectorXd &p_end, double H0, int sign, long &n_leapfrog,
                  double &log_sum_weight, double &sum_metro_prob, bool &divergent);

  static bool criterion(const Eigen::VectorXd &p_sharp_minus,
                        const Eigen::VectorXd &p_sharp_plus, const Eigen::VectorXd &rho) {
    return p_sharp_plus.dot(rho) > 0 && p_sharp_minus.dot(rho) > 0;
  }

  const UnconstrainedDensity &density_;
  const SamplerConfig &cfg_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  Eigen::VectorXd inv_metric_;
  StepSizeAdapter adapter_;
  PhasePoint z_;
  double eps_ = 1.0;
  long leapfrog_total_ = 0;
};

void Chain::initialize() {
  const auto n = static_cast<Eigen::Index>(density_.dimension());
  z_.q.resize(n);
  z_.p.resize(n);
  z_.grad.resize(n);
  for (int attempt = 0; attempt < cfg_.max_init_attempts; ++attempt) {
    for (Eigen::Index i = 0; i < n; ++i)
      z_.q[i] = cfg_.init_radius * (2.0 * uniform() - 1.0);
    evaluate(z_);
    if (std::isfinite(z_.log_density) && z_.grad.allFinite()) return;
  }
  throw Error(ErrorCode::NonFiniteDensityAtInit,
              "no finite log density after " + std::to_string(cfg_.max_init_attempts) +
                  " initialization attempts");
}

void Chain::init_step_size() {
  const PhasePoint start = z_;
  sample_momentum(z_);
  double H0 = hamiltonian(z_);
  leapfrog(z_, eps_);
  double delta_H = H0 - hamiltonian(z_);
  const int direction = delta_H > std::log(0.8) ? 1 : -1;
  for (int iter = 0; iter < 100; ++iter) {
    z_ = start;
    sample_momentum(z_);
    H0 = hamiltonian(z_);
    leapfrog(z_, eps_);
    double h = hamiltonian(z_);
    if (std::isnan(h)) h = kInf;
    delta_H = H0 - h;
    if (direction == 1 && !(delta_H > std::log(0.8))) break;
    if (direction == -1 && !(delta_H < std::log(0.8))) break;
    eps_ = direction == 1 ? 2.0 * eps_ : 0.5 * eps_;
    if (eps_ > 1e7 || eps_ == 0.0) break;
  }
  z_ = start;
}

bool Chain::build_tree(int depth, PhasePoint &z_propose, Eigen::VectorXd &p_sharp_beg,
                       Eigen::VectorXd &p_sharp_end, Eigen::VectorXd &rho,
                       Eigen::VectorXd &p_beg, Eigen::VectorXd &p_end, double H0, int sign,
                       long &n_leapfrog, double &log_sum_weight, double &sum_metro_prob,
                       bool &divergent) {
  if (depth == 0) {
    leapfrog(z_, sign * eps_);
    ++n_leapfrog;
    double h = hamiltonian(z_);
    if (std::isnan(h)) h = kInf;
    if (h - H0 > kMaxDeltaH) divergent = true;
    log_sum_weight = log_sum_exp(log_sum_weight, H0 - h);
    sum_metro_prob += H0 - h > 0 ? 1.0 : std::exp(H0 - h);
    z_propose = z_;
    p_sharp_beg = dtau_dp(z_);
    p_sharp_end = p_sharp_beg;
    rho += z_.p;
    p_beg = z_.p;
    p_end = p_beg;
    return !divergent;
  }

  const auto n = z_.p.size();
  double log_sum_weight_init = -kInf;
  Eigen::VectorXd p_init_end(n);
  Eigen::VectorXd p_sharp_init_end(n);
  Eigen::VectorXd rho_init = Eigen::VectorXd::Zero(n);
  if (!build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg,
                  p_init_end, H0, sign, n_leapfrog, log_sum_weight_init, sum_metro_prob,
                  divergent))
    return false;

  PhasePoint z_propose_final = z_;
  double log_sum_weight_final = -kInf;
  Eigen::VectorXd p_final_beg(n);
  Eigen::VectorXd p_sharp_final_beg(n);
  Eigen::VectorXd rho_final = Eigen::VectorXd::Zero(n);
  if (!build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                  p_final_beg, p_end, H0, sign, n_leapfrog, log_sum_weight_final,
                  sum_metro_prob, divergent))
    return false;

  const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
  log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
  if (log_sum_weight_final > log_sum_weight_subtree) {
    z_propose = z_propose_final;
  } else if (uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
    z_propose = z_propose_final;
  }

  const Eigen::VectorXd rho_subtree = rho_init + rho_final;
  rho += rho_subtree;
  bool persist = criterion(p_sharp_beg, p_sharp_end, rho_subtree);
  persist = persist && criterion(p_sharp_beg, p_sharp_final_beg, rho_init + p_final_beg);
  persist = persist && criterion(p_sharp_init_end, p_sharp_end, rho_final + p_init_end);
  return persist;
}

double Chain::transition(int &depth, bool &divergent) {
  sample_momentum(z_);
  const double H0 = hamiltonian(z_);
  const auto n = z_.p.size();

  PhasePoint z_fwd = z_;
  PhasePoint z_bck = z_;
  PhasePoint z_sample = z_;
  PhasePoint z_propose = z_;

  Eigen::VectorXd p_fwd_fwd = z_.p, p_fwd_bck = z_.p, p_bck_fwd = z_.p, p_bck_bck = z_.p;
  Eigen::VectorXd p_sharp_fwd_fwd = dtau_dp(z_);
  Eigen::VectorXd p_sharp_fwd_bck = p_sharp_fwd_fwd, p_sharp_bck_fwd = p_sharp_fwd_fwd,
                  p_sharp_bck_bck = p_sharp_fwd_fwd;
  Eigen::VectorXd rho = z_.p;
  double log_sum_weight = 0.0;
  long n_leapfrog = 0;
  double sum_metro_prob = 0.0;
  depth = 0;
  divergent = false;

  while (depth < cfg_.max_treedepth) {
    Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd rho_bck = Eigen::VectorXd::Zero(n);
    bool valid = false;
    double log_sum_weight_subtree = -kInf;

    if (uniform() > 0.5) {
      z_ = z_fwd;
      rho_bck = rho;
      p_bck_fwd = p_fwd_bck;
      p_sharp_bck_fwd = p_sharp_fwd_bck;
      valid = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd,
                         p_fwd_bck, p_fwd_fwd, H0, 1, n_leapfrog, log_sum_weight_subtree,
                         sum_metro_prob, divergent);
      z_fwd = z_;
    } else {
      z_ = z_bck;
      rho_fwd = rho;
      p_fwd_bck = p_bck_fwd;
      p_sharp_fwd_bck = p_sharp_bck_fwd;
      valid = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck,
                         p_bck_fwd, p_bck_bck, H0, -1, n_leapfrog, log_sum_weight_subtree,
                         sum_metro_prob, divergent);
      z_bck = z_;
    }
    if (!valid) break;
    ++depth;

    if (log_sum_weight_subtree > log_sum_weight) {
      z_sample = z_propose;
    } else if (uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
      z_sample = z_propose;
    }
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

    rho = rho_bck + rho_fwd;
    bool persist = criterion(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
    persist = persist && criterion(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
    persist = persist && criterion(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
    if (!persist) break;
  }
  leapfrog_total_ += n_leapfrog;
  z_ = z_sample;
  return n_leapfrog > 0 ? sum_metro_prob / static_cast<double>(n_leapfrog) : 0.0;
}

void Chain::run(std::span<double> kept, ChainStats &stats) {
  initialize();
  const bool adapt_step = !cfg_.fixed_step_size.has_value();
  if (adapt_step) {
    init_step_size();
    adapter_.restart(eps_);
  } else {
    eps_ = *cfg_.fixed_step_size;
  }

  WindowSchedule schedule(cfg_.warmup);
  const auto n = static_cast<Eigen::Index>(density_.dimension());
  Eigen::VectorXd w_mean = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w_m2 = Eigen::VectorXd::Zero(n);
  long w_count = 0;

  const std::size_t dim = density_.dimension();
  double accept_sum = 0.0;
  double depth_sum = 0.0;
  for (int iter = 0; iter < cfg_.warmup + cfg_.draws; ++iter) {
    int depth = 0;
    bool divergent = false;
    const double accept = transition(depth, divergent);

    if (iter < cfg_.warmup) {
      if (adapt_step) eps_ = adapter_.learn(accept);
      if (adapt_step && schedule.collecting(iter)) {
        ++w_count;
        const Eigen::VectorXd delta = z_.q - w_mean;
        w_mean += delta / static_cast<double>(w_count);
        w_m2 += delta.cwiseProduct(z_.q - w_mean);
      }
      if (adapt_step && schedule.window_ends(iter)) {
        const double c = static_cast<double>(w_count);
        const Eigen::VectorXd var = w_m2 / (c - 1.0);
        inv_metric_ = (c / (c + 5.0)) * var.array() + 1e-3 * (5.0 / (c + 5.0));
        w_mean.setZero();
        w_m2.setZero();
        w_count = 0;
        init_step_size();
        adapter_.restart(eps_);
      }
      if (adapt_step && iter + 1 == cfg_.warmup) eps_ = adapter_.final_step();
      continue;
    }

    const int d = iter - cfg_.warmup;
    const Eigen::VectorXd theta = density_.constrain(z_.q);
    std::copy(theta.data(), theta.data() + dim, kept.begin() + static_cast<std::ptrdiff_t>(d * dim));
    accept_sum += accept;
    depth_sum += depth;
    if (divergent) ++stats.divergences;
  }
  stats.step_size = eps_;
  stats.mean_accept = cfg_.draws > 0 ? accept_sum / cfg_.draws : 0.0;
  stats.mean_treedepth = cfg_.draws > 0 ? depth_sum / cfg_.draws : 0.0;
  stats.leapfrog_steps = leapfrog_total_;
}

}  // namespace

double UnconstrainedDensity::operator()(const Eigen::VectorXd &u, Eigen::VectorXd &grad) const {
  const auto &params = density_->parameters();
  const std::size_t n = params.size();
  Eigen::VectorXd theta(static_cast<Eigen::Index>(n));
  Eigen::VectorXd dx(static_cast<Eigen::Index>(n));
  Eigen::VectorXd dlogj(static_cast<Eigen::Index>(n));
  double logj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    theta[k] = mmm::constrain(params[i].bounds, u[k]);
    logj += log_jacobian(params[i].bounds, u[k], &dx[k], &dlogj[k]);
  }
  grad.resize(static_cast<Eigen::Index>(n));
  const double lp = density_->log_density({theta.data(), n}, {grad.data(), n});
  if (!std::isfinite(lp)) return -kInf;
  grad = grad.cwiseProduct(dx) + dlogj;
  return lp + logj;
}

Eigen::VectorXd UnconstrainedDensity::constrain(const Eigen::VectorXd &u) const {
  const auto &params = density_->parameters();
  Eigen::VectorXd theta(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    theta[i] = mmm::constrain(params[static_cast<std::size_t>(i)].bounds, u[i]);
  return theta;
}

Eigen::VectorXd UnconstrainedDensity::unconstrain(const Eigen::VectorXd &theta) const {
  const auto &params = density_->parameters();
  Eigen::VectorXd u(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    u[i] = mmm::unconstrain(params[static_cast<std::size_t>(i)].bounds, theta[i]);
  return u;
}

void SamplerConfig::validate() const {
  auto fail = [](const std::string &msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (chains < 2) fail("chains must be >= 2 (R-hat needs several chains)");
  if (draws < 100) fail("draws must be >= 100");
  if (warmup < 0) fail("warmup must be >= 0");
  if (!(target_accept > 0.0 && target_accept < 1.0)) fail("target_accept must lie in (0, 1)");
  if (max_treedepth < 1) fail("max_treedepth must be >= 1");
  if (fixed_step_size && !(*fixed_step_size >= 0.0)) fail("fixed_step_size must be >= 0");
}

std::vector<double> PosteriorDraws::parameter(std::size_t param) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(chains) * draws);
  for (int c = 0; c < chains; ++c)
    for (int d = 0; d < draws; ++d) out.push_back(at(c, d, param));
  return out;
}

std::optional<std::size_t> PosteriorDraws::index_of(const std::string &name) const {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].name == name) return i;
  return std::nullopt;
}

void PosteriorDraws::compute_diagnostics() {
  rhat.assign(dimension(), 0.0);
  ess.assign(dimension(), 0.0);
  for (std::size_t p = 0; p < dimension(); ++p) {
    ChainSeries series(static_cast<std::size_t>(chains));
    for (int c = 0; c < chains; ++c)
      for (int d = 0; d < draws; ++d) series[static_cast<std::size_t>(c)].push_back(at(c, d, p));
    rhat[p] = split_rhat(series);
    ess[p] = effective_sample_size(series);
  }
}

bool PosteriorDraws::converged(double threshold) const {
  return std::none_of(rhat.begin(), rhat.end(), [&](double r) { return r > threshold; });
}

PosteriorDraws sample(const Density &density, const SamplerConfig &cfg) {
  cfg.validate();
  const UnconstrainedDensity target(density);
  PosteriorDraws out;
  out.params = density.parameters();
  out.chains = cfg.chains;
  out.draws = cfg.draws;
  const std::size_t per_chain = static_cast<std::size_t>(cfg.draws) * out.dimension();
  out.values.assign(per_chain * static_cast<std::size_t>(cfg.chains), 0.0);
  out.chain_stats.assign(static_cast<std::size_t>(cfg.chains), {});

  auto run_chain = [&](int c) {
    Chain chain(target, cfg, c);
    chain.run({out.values.data() + per_chain * static_cast<std::size_t>(c), per_chain},
              out.chain_stats[static_cast<std::size_t>(c)]);
  };

  if (cfg.parallel && std::thread::hardware_concurrency() > 1) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.chains));
    {
      std::vector<std::jthread> workers;
      for (int c = 0; c < cfg.chains; ++c)
        workers.emplace_back([&, c] {
          try {
            run_chain(c);
          } catch (...) {
            errors[static_cast<std::size_t>(c)] = std::current_exception();
          }
        });
    }
    for (auto &e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (int c = 0; c < cfg.chains; ++c) run_chain(c);
  }
  out.compute_diagnostics();
  return out;
}

}  // namespace mmm
