#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mmm/posterior.hpp"

namespace mmm {

using Vec3 = std::array<double, 3>;

/// Two particles before an elastic collision; omega must be a unit vector.
struct ElasticPair {
  Vec3 v1{};
  Vec3 v2{};
  Vec3 omega{};
};

/// Post-collision velocities. Conserves momentum and kinetic energy.
std::pair<Vec3, Vec3> elastic_collision(const ElasticPair &p);

/// Box constraints for the collision coefficients.
struct CoefficientBounds {
  double a_lower = 0.0;
  double a_upper = 2.0;
  double b_lower = 0.0;
  double b_upper = 1.0;

  void validate() const;
  bool contains(double a, double b) const {
    return a >= a_lower && a <= a_upper && b >= b_lower && b <= b_upper;
  }
};

inline constexpr double kMaxDesignCondition = 1e8;

struct CollisionEstimate {
  int target = -1;
  std::vector<int> donors;
  double a = 0.0;
  double b = 0.0;
  double sse = 0.0;
  double delta_influence = 0.0;  // mean_t (a v_i + b v_j - v_i), response units
  double condition = 0.0;        // of the two-column design
  bool degenerate = false;       // a, b, sse, delta are NaN when set
  CoefficientBounds bounds;
};

/// z_t = y_t minus every fitted non-media component and every channel outside
/// `analysis`.
Eigen::VectorXd build_funnel_target(const ContributionMatrix &cm,
                                    const Eigen::Ref<const Eigen::VectorXd> &y,
                                    const std::vector<int> &analysis);

/// argmin over the box of sum_t (z_t - a v_i,t - b v_j,t)^2. Exact: the
/// objective is a convex quadratic in two variables, so the optimum is the
/// best of the interior stationary point, the four edge minimizers and the
/// corners. Throws DegenerateDesign when cond([v_i v_j]) exceeds 1e8.
CollisionEstimate estimate_pair(const Eigen::Ref<const Eigen::VectorXd> &vi,
                                const Eigen::Ref<const Eigen::VectorXd> &vj,
                                const Eigen::Ref<const Eigen::VectorXd> &z,
                                const CoefficientBounds &bounds = {});

/// One fit per channel i against (v_i, sum_{j != i} v_j), target column i of
/// `targets` (T x M). Degenerate channels are flagged, not thrown.
std::vector<CollisionEstimate> estimate_n_particle(const Eigen::Ref<const Eigen::MatrixXd> &v,
                                                   const Eigen::Ref<const Eigen::MatrixXd> &targets,
                                                   const CoefficientBounds &bounds = {});
/// Same target series for every channel, regressors from cm.values.
std::vector<CollisionEstimate> estimate_n_particle(const ContributionMatrix &cm,
                                                   const Eigen::Ref<const Eigen::VectorXd> &z,
                                                   const CoefficientBounds &bounds = {});

/// All M(M-1) ordered pairs (i <- j), target column i of `targets`.
std::vector<CollisionEstimate> estimate_pairwise(const Eigen::Ref<const Eigen::MatrixXd> &v,
                                                 const Eigen::Ref<const Eigen::MatrixXd> &targets,
                                                 const CoefficientBounds &bounds = {});

enum class InfluenceRole { Donor, Receiver, Neutral };
std::string_view to_string(InfluenceRole r);

struct ChannelInfluence {
  int channel = -1;
  std::string name;
  double delta = 0.0;
  InfluenceRole role = InfluenceRole::Neutral;
};

struct FunnelReport {
  std::vector<ChannelInfluence> ranking;  // ascending delta: strongest donor first
  Eigen::MatrixXd delta_matrix;           // M x M, (i, j) = delta(i <- j); pairwise only
  double total_delta = 0.0;
  bool pairwise = false;
};

/// Channel delta is the estimate's delta_influence (n-particle) or the mean
/// over donors of delta(i <- j) (pairwise). Degenerate estimates are skipped.
FunnelReport donor_receiver_report(const std::vector<CollisionEstimate> &estimates,
                                   const std::vector<std::string> &channel_names);

}  // namespace mmm
