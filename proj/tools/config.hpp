#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mmm/dataset.hpp"
#include "mmm/funnel.hpp"
#include "mmm/metrics.hpp"
#include "mmm/model.hpp"
#include "mmm/sampler.hpp"

namespace mmm::cli {

struct DataConfig {
  std::string path;
  ColumnMapping mapping;
};

struct FunnelConfig {
  std::string mode = "n-particle";  // or "pairwise"
  CoefficientBounds bounds;
};

/// Everything a command can be configured with. Config file keys are the
/// dotted field paths, e.g. `sampler.chains` or `model.priors.noise_scale`.
struct RunConfig {
  DataConfig data;
  ModelSpec model;
  SamplerConfig sampler;
  GeneratorSpec generator;
  FunnelConfig funnel;
  RegionThresholds regions;
  std::string out = "out";
  std::string fit;  // fit file; defaults to <out>/fit.json
  bool plots = false;

  std::filesystem::path fit_path() const;
};

/// Applies `key = value` lines; '#' starts a comment. Throws mmm::Error
/// (InvalidArgument) naming the offending key or line.
void apply_config_text(RunConfig &cfg, std::string_view text);
void apply_config_file(RunConfig &cfg, const std::filesystem::path &path);
void set_config_value(RunConfig &cfg, const std::string &key, const std::string &value);

/// All recognized keys, in documentation order.
std::vector<std::string> config_keys();

}  // namespace mmm::cli
