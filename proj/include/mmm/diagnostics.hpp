#pragma once

#include <span>
#include <string>
#include <vector>

#include "mmm/dataset.hpp"
#include "mmm/sampler.hpp"

namespace mmm {

using ChainSeries = std::vector<std::vector<double>>;

/// Split-chain potential scale reduction. NaN when every draw is identical,
/// +inf when chains are individually constant but disagree.
double split_rhat(const ChainSeries &chains);

/// Multi-chain effective sample size over split chains (Geyer's initial
/// monotone sequence). NaN for constant input.
double effective_sample_size(const ChainSeries &chains);

/// Linear interpolation between order statistics (R type 7).
double quantile(std::vector<double> values, double p);

/// Value of a constrained parameter in original data units.
double to_original_units(const ParamInfo &info, const ScaleInfo &scale, double value);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double rhat = 0.0;
  double ess = 0.0;
  bool degenerate = false;  // all draws identical
};

/// Per-parameter summary, back-transformed through the draws' ScaleInfo when
/// present.
std::vector<ParameterSummary> posterior_summary(const PosteriorDraws &draws);

}  // namespace mmm
