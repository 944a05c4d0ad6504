#include "mmm/funnel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmm/error.hpp"

namespace mmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double norm(const Vec3 &v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

struct Quadratic {
  // sse(a, b) = zz - 2 (a hi + b hj) + a^2 gii + 2ab gij + b^2 gjj
  double gii, gij, gjj, hi, hj;

  double argmin_a(double b, double lo, double hi_bound) const {
    return std::clamp((hi - b * gij) / gii, lo, hi_bound);
  }
  double argmin_b(double a, double lo, double hi_bound) const {
    if (gjj == 0.0) return std::clamp(0.0, lo, hi_bound);
    return std::clamp((hj - a * gij) / gjj, lo, hi_bound);
  }
};

double residual_sse(const Eigen::Ref<const Eigen::VectorXd> &vi,
                    const Eigen::Ref<const Eigen::VectorXd> &vj,
                    const Eigen::Ref<const Eigen::VectorXd> &z, double a, double b) {
  return (z - a * vi - b * vj).squaredNorm();
}

CollisionEstimate degenerate_estimate(int target, const CoefficientBounds &bounds, double cond) {
  CollisionEstimate e;
  e.target = target;
  e.a = e.b = e.sse = e.delta_influence = kNaN;
  e.condition = cond;
  e.degenerate = true;
  e.bounds = bounds;
  return e;
}

}  // namespace

std::pair<Vec3, Vec3> elastic_collision(const ElasticPair &p) {
  if (std::abs(norm(p.omega) - 1.0) > 1e-12)
    throw Error(ErrorCode::NonUnitOmega, "omega must have unit length");
  Vec3 rel{};
  for (int k = 0; k < 3; ++k) rel[k] = p.v1[k] - p.v2[k];
  const double speed = norm(rel);
  Vec3 v1{};
  Vec3 v2{};
  for (int k = 0; k < 3; ++k) {
    const double sum = p.v1[k] + p.v2[k];
    v1[k] = 0.5 * (sum + speed * p.omega[k]);
    v2[k] = 0.5 * (sum - speed * p.omega[k]);
  }
  return {v1, v2};
}

void CoefficientBounds::validate() const {
  const bool finite = std::isfinite(a_lower) && std::isfinite(a_upper) &&
                      std::isfinite(b_lower) && std::isfinite(b_upper);
  if (!finite || a_lower > a_upper || b_lower > b_upper)
    throw Error(ErrorCode::InvalidArgument, "coefficient bounds must be finite and ordered");
}

Eigen::VectorXd build_funnel_target(const ContributionMatrix &cm,
                                    const Eigen::Ref<const Eigen::VectorXd> &y,
                                    const std::vector<int> &analysis) {
  const Eigen::Index T = cm.values.rows();
  const bool sizes_ok = y.size() == T && cm.baseline.size() == T && cm.trend.size() == T &&
                        cm.seasonality.size() == T && cm.controls.rows() == T;
  if (!sizes_ok) throw Error(ErrorCode::DimensionMismatch, "funnel target series lengths differ");
  std::vector<bool> analysed(static_cast<std::size_t>(cm.values.cols()), false);
  for (int i : analysis) {
    if (i < 0 || i >= cm.values.cols())
      throw Error(ErrorCode::DimensionMismatch, "analysis channel index out of range");
    analysed[static_cast<std::size_t>(i)] = true;
  }
  Eigen::VectorXd z = y - cm.non_media();
  for (Eigen::Index m = 0; m < cm.values.cols(); ++m)
    if (!analysed[static_cast<std::size_t>(m)]) z -= cm.values.col(m);
  return z;
}

CollisionEstimate estimate_pair(const Eigen::Ref<const Eigen::VectorXd> &vi,
                                const Eigen::Ref<const Eigen::VectorXd> &vj,
                                const Eigen::Ref<const Eigen::VectorXd> &z,
                                const CoefficientBounds &bounds) {
  bounds.validate();
  if (vi.size() != vj.size() || vi.size() != z.size())
    throw Error(ErrorCode::DimensionMismatch, "funnel series lengths differ");
  if (vi.size() < 2) throw Error(ErrorCode::InvalidArgument, "funnel needs at least 2 weeks");
  if (!vi.allFinite() || !vj.allFinite() || !z.allFinite())
    throw Error(ErrorCode::InvalidArgument, "funnel series must be finite");

  const Quadratic q{vi.squaredNorm(), vi.dot(vj), vj.squaredNorm(), vi.dot(z), vj.dot(z)};
  if (q.gii == 0.0) throw Error(ErrorCode::DegenerateDesign, "target channel series is all zero");

  // Condition number of [vi vj] from the eigenvalues of its Gram matrix.
  const double tr = q.gii + q.gjj;
  const double det = q.gii * q.gjj - q.gij * q.gij;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double lmax = 0.5 * tr + disc;
  const double lmin = det > 0.0 ? det / lmax : 0.0;
  const double cond = lmin > 0.0 ? std::sqrt(lmax / lmin) : std::numeric_limits<double>::infinity();
  if (cond > kMaxDesignCondition)
    throw Error(ErrorCode::DegenerateDesign,
                "collinear regressors, condition number " + std::to_string(cond));

  std::vector<std::pair<double, double>> candidates;
  const double a0 = (q.hi * q.gjj - q.hj * q.gij) / det;
  const double b0 = (q.gii * q.hj - q.gij * q.hi) / det;
  if (bounds.contains(a0, b0)) candidates.emplace_back(a0, b0);
  for (double b : {bounds.b_lower, bounds.b_upper})
    candidates.emplace_back(q.argmin_a(b, bounds.a_lower, bounds.a_upper), b);
  for (double a : {bounds.a_lower, bounds.a_upper})
    candidates.emplace_back(a, q.argmin_b(a, bounds.b_lower, bounds.b_upper));

  CollisionEstimate best;
  best.sse = std::numeric_limits<double>::infinity();
  for (const auto &[a, b] : candidates) {
    const double sse = residual_sse(vi, vj, z, a, b);
    if (sse < best.sse) {
      best.a = a;
      best.b = b;
      best.sse = sse;
    }
  }
  best.condition = cond;
  best.bounds = bounds;
  best.delta_influence = ((best.a - 1.0) * vi + best.b * vj).mean();
  return best;
}

std::vector<CollisionEstimate> estimate_n_particle(const Eigen::Ref<const Eigen::MatrixXd> &v,
                                                   const Eigen::Ref<const Eigen::MatrixXd> &targets,
                                                   const CoefficientBounds &bounds) {
  if (v.cols() < 2) throw Error(ErrorCode::InvalidArgument, "funnel analysis needs at least 2 channels");
  if (targets.rows() != v.rows() || targets.cols() != v.cols())
    throw Error(ErrorCode::DimensionMismatch, "target matrix shape differs from contributions");
  std::vector<CollisionEstimate> out;
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    // Summed directly rather than as total - v_i so M = 2 matches estimate_pair bit for bit.
    Eigen::VectorXd others = Eigen::VectorXd::Zero(v.rows());
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      if (j != i) others += v.col(j);
    CollisionEstimate e;
    try {
      e = estimate_pair(v.col(i), others, targets.col(i), bounds);
    } catch (const Error &err) {
      if (err.code() != ErrorCode::DegenerateDesign) throw;
      e = degenerate_estimate(static_cast<int>(i), bounds, kNaN);
    }
    e.target = static_cast<int>(i);
    e.donors.clear();
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      if (j != i) e.donors.push_back(static_cast<int>(j));
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<CollisionEstimate> estimate_n_particle(const ContributionMatrix &cm,
                                                   const Eigen::Ref<const Eigen::VectorXd> &z,
                                                   const CoefficientBounds &bounds) {
  if (z.size() != cm.values.rows())
    throw Error(ErrorCode::DimensionMismatch, "target length differs from contributions");
  const Eigen::MatrixXd targets = z.replicate(1, cm.values.cols());
  return estimate_n_particle(cm.values, targets, bounds);
}

std::vector<CollisionEstimate> estimate_pairwise(const Eigen::Ref<const Eigen::MatrixXd> &v,
                                                 const Eigen::Ref<const Eigen::MatrixXd> &targets,
                                                 const CoefficientBounds &bounds) {
  if (v.cols() < 2) throw Error(ErrorCode::InvalidArgument, "funnel analysis needs at least 2 channels");
  if (targets.rows() != v.rows() || targets.cols() != v.cols())
    throw Error(ErrorCode::DimensionMismatch, "target matrix shape differs from contributions");
  std::vector<CollisionEstimate> out;
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (i == j) continue;
      CollisionEstimate e;
      try {
        e = estimate_pair(v.col(i), v.col(j), targets.col(i), bounds);
      } catch (const Error &err) {
        if (err.code() != ErrorCode::DegenerateDesign) throw;
        e = degenerate_estimate(static_cast<int>(i), bounds, kNaN);
      }
      e.target = static_cast<int>(i);
      e.donors = {static_cast<int>(j)};
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::string_view to_string(InfluenceRole r) {
  switch (r) {
    case InfluenceRole::Donor: return "donor";
    case InfluenceRole::Receiver: return "receiver";
    case InfluenceRole::Neutral: return "neutral";
  }
  return "neutral";
}

FunnelReport donor_receiver_report(const std::vector<CollisionEstimate> &estimates,
                                   const std::vector<std::string> &channel_names) {
  const auto M = static_cast<Eigen::Index>(channel_names.size());
  FunnelReport report;
  // With two channels the n-particle estimates are pairwise ones as well.
  report.pairwise = !estimates.empty() &&
                    std::all_of(estimates.begin(), estimates.end(),
                                [](const CollisionEstimate &e) { return e.donors.size() == 1; });
  report.delta_matrix = Eigen::MatrixXd::Zero(M, M);
  std::vector<double> sum(static_cast<std::size_t>(M), 0.0);
  std::vector<int> count(static_cast<std::size_t>(M), 0);
  for (const auto &e : estimates) {
    if (e.target < 0 || e.target >= M)
      throw Error(ErrorCode::DimensionMismatch, "estimate refers to an unknown channel");
    if (e.degenerate) continue;
    if (e.donors.size() == 1) report.delta_matrix(e.target, e.donors.front()) = e.delta_influence;
    sum[static_cast<std::size_t>(e.target)] += e.delta_influence;
    ++count[static_cast<std::size_t>(e.target)];
  }
  for (Eigen::Index m = 0; m < M; ++m) {
    const auto k = static_cast<std::size_t>(m);
    ChannelInfluence ci;
    ci.channel = static_cast<int>(m);
    ci.name = channel_names[k];
    ci.delta = count[k] > 0 ? sum[k] / count[k] : 0.0;
    ci.role = ci.delta < 0.0   ? InfluenceRole::Donor
              : ci.delta > 0.0 ? InfluenceRole::Receiver
                               : InfluenceRole::Neutral;
    report.total_delta += ci.delta;
    report.ranking.push_back(std::move(ci));
  }
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [](const ChannelInfluence &x, const ChannelInfluence &y) { return x.delta < y.delta; });
  return report;
}

}  // namespace mmm
