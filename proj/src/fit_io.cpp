#include "mmm/fit_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mmm/error.hpp"

namespace mmm {

namespace {

using nlohmann::json;

json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "NaN";
  return x > 0 ? "Infinity" : "-Infinity";
}

double to_number(const json &j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  throw Error(ErrorCode::ParseError, "fit file: expected a number, got " + j.dump());
}

json vector_json(const Eigen::VectorXd &v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

Eigen::VectorXd vector_from(const json &j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_number(j[i]);
  return v;
}

constexpr std::string_view kFamilies[] = {"flat", "normal", "half_normal", "beta", "uniform", "gamma"};
constexpr std::string_view kUnits[] = {"none", "response", "spend", "response_per_spend",
                                       "response_per_control"};

template <std::size_t N>
int lookup(const std::string_view (&names)[N], const std::string &s, const char *what) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<int>(i);
  throw Error(ErrorCode::ParseError, std::string("fit file: unknown ") + what + " '" + s + "'");
}

json priors_json(const PriorSpec &p) {
  return {{"baseline_scale", p.baseline_scale},
          {"control_sd", p.control_sd},
          {"noise_scale", p.noise_scale},
          {"retention_a", p.retention_a},
          {"retention_b", p.retention_b},
          {"delay_max", p.delay_max},
          {"saturation_factor", p.saturation_factor},
          {"half_saturation_factor", p.half_saturation_factor},
          {"coefficient_scale", p.coefficient_scale},
          {"hill_shape", p.hill_shape},
          {"hill_rate", p.hill_rate},
          {"hill_lower", p.hill_lower},
          {"hill_upper", p.hill_upper},
          {"self_lower", p.self_lower},
          {"self_upper", p.self_upper},
          {"cross_scale", p.cross_scale},
          {"trend_sd", p.trend_sd},
          {"seasonality_sd", p.seasonality_sd}};
}

PriorSpec priors_from(const json &j) {
  PriorSpec p;
  p.baseline_scale = j.at("baseline_scale");
  p.control_sd = j.at("control_sd");
  p.noise_scale = j.at("noise_scale");
  p.retention_a = j.at("retention_a");
  p.retention_b = j.at("retention_b");
  p.delay_max = j.at("delay_max");
  p.saturation_factor = j.at("saturation_factor");
  p.half_saturation_factor = j.at("half_saturation_factor");
  p.coefficient_scale = j.at("coefficient_scale");
  p.hill_shape = j.at("hill_shape");
  p.hill_rate = j.at("hill_rate");
  p.hill_lower = j.at("hill_lower");
  p.hill_upper = j.at("hill_upper");
  p.self_lower = j.at("self_lower");
  p.self_upper = j.at("self_upper");
  p.cross_scale = j.at("cross_scale");
  p.trend_sd = j.at("trend_sd");
  p.seasonality_sd = j.at("seasonality_sd");
  return p;
}

json param_json(const ParamInfo &p) {
  return {{"name", p.name},
          {"lower", number(p.bounds.lower)},
          {"upper", number(p.bounds.upper)},
          {"prior", {{"family", kFamilies[static_cast<int>(p.prior.family)]},
                     {"p1", number(p.prior.p1)},
                     {"p2", number(p.prior.p2)}}},
          {"unit", {{"kind", kUnits[static_cast<int>(p.unit.kind)]}, {"index", p.unit.index}}}};
}

ParamInfo param_from(const json &j) {
  ParamInfo p;
  p.name = j.at("name");
  p.bounds.lower = to_number(j.at("lower"));
  p.bounds.upper = to_number(j.at("upper"));
  const auto &prior = j.at("prior");
  p.prior.family = static_cast<Prior::Family>(lookup(kFamilies, prior.at("family"), "prior family"));
  p.prior.p1 = to_number(prior.at("p1"));
  p.prior.p2 = to_number(prior.at("p2"));
  const auto &unit = j.at("unit");
  p.unit.kind = static_cast<Unit::Kind>(lookup(kUnits, unit.at("kind"), "unit"));
  p.unit.index = unit.at("index");
  return p;
}

}  // namespace

std::string fit_to_json(const FitResult &fit) {
  const auto &d = fit.draws;
  if (!d.scale) throw Error(ErrorCode::InvalidArgument, "fit has no scale information");
  json j;
  j["format_version"] = kFitFormatVersion;
  j["fingerprint"] = fit.fingerprint;
  j["model"] = {{"variant", std::string(to_string(fit.spec.variant))},
                {"max_delay", fit.spec.max_delay},
                {"include_trend", fit.spec.include_trend},
                {"seasonality_terms", fit.spec.seasonality_terms},
                {"priors", priors_json(fit.spec.priors)}};
  const auto &s = fit.sampler;
  j["sampler"] = {{"chains", s.chains},
                  {"warmup", s.warmup},
                  {"draws", s.draws},
                  {"seed", s.seed},
                  {"target_accept", s.target_accept},
                  {"max_treedepth", s.max_treedepth},
                  {"init_radius", s.init_radius},
                  {"max_init_attempts", s.max_init_attempts}};
  if (s.fixed_step_size) j["sampler"]["fixed_step_size"] = *s.fixed_step_size;
  j["mapping"] = {{"time", fit.mapping.time},
                  {"response", fit.mapping.response},
                  {"media", fit.mapping.media},
                  {"controls", fit.mapping.controls},
                  {"media_prefix", fit.mapping.media_prefix},
                  {"control_prefix", fit.mapping.control_prefix}};
  j["channels"] = fit.channel_names;
  j["controls"] = fit.control_names;
  j["scale"] = {{"media", vector_json(d.scale->media_scale)},
                {"controls", vector_json(d.scale->control_scale)},
                {"response", number(d.scale->response_scale)}};
  json params = json::array();
  for (const auto &p : d.params) params.push_back(param_json(p));
  j["parameters"] = std::move(params);
  json rhat = json::array();
  json ess = json::array();
  for (double x : d.rhat) rhat.push_back(number(x));
  for (double x : d.ess) ess.push_back(number(x));
  j["rhat"] = std::move(rhat);
  j["ess"] = std::move(ess);
  json stats = json::array();
  for (const auto &c : d.chain_stats)
    stats.push_back({{"step_size", number(c.step_size)},
                     {"divergences", c.divergences},
                     {"mean_accept", number(c.mean_accept)},
                     {"mean_treedepth", number(c.mean_treedepth)},
                     {"leapfrog_steps", c.leapfrog_steps}});
  j["chain_stats"] = std::move(stats);
  j["chains"] = d.chains;
  j["draws_per_chain"] = d.draws;
  json draws = json::array();
  for (int c = 0; c < d.chains; ++c) {
    json chain = json::array();
    for (int k = 0; k < d.draws; ++k) {
      json row = json::array();
      for (double x : d.draw(c, k)) row.push_back(number(x));
      chain.push_back(std::move(row));
    }
    draws.push_back(std::move(chain));
  }
  j["draws"] = std::move(draws);
  return j.dump(1) + "\n";
}

FitResult fit_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::ParseError, std::string("fit file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kFitFormatVersion)
      throw Error(ErrorCode::ParseError, "unsupported fit file version");
    FitResult fit;
    fit.fingerprint = j.at("fingerprint");
    const auto &m = j.at("model");
    const auto variant = parse_variant(m.at("variant").get<std::string>());
    if (!variant) throw Error(ErrorCode::ParseError, "fit file: unknown variant");
    fit.spec.variant = *variant;
    fit.spec.max_delay = m.at("max_delay");
    fit.spec.include_trend = m.at("include_trend");
    fit.spec.seasonality_terms = m.at("seasonality_terms");
    fit.spec.priors = priors_from(m.at("priors"));
    const auto &s = j.at("sampler");
    fit.sampler.chains = s.at("chains");
    fit.sampler.warmup = s.at("warmup");
    fit.sampler.draws = s.at("draws");
    fit.sampler.seed = s.at("seed");
    fit.sampler.target_accept = s.at("target_accept");
    fit.sampler.max_treedepth = s.at("max_treedepth");
    fit.sampler.init_radius = s.at("init_radius");
    fit.sampler.max_init_attempts = s.at("max_init_attempts");
    if (s.contains("fixed_step_size")) fit.sampler.fixed_step_size = s.at("fixed_step_size").get<double>();
    const auto &mp = j.at("mapping");
    fit.mapping.time = mp.at("time");
    fit.mapping.response = mp.at("response");
    fit.mapping.media = mp.at("media").get<std::vector<std::string>>();
    fit.mapping.controls = mp.at("controls").get<std::vector<std::string>>();
    fit.mapping.media_prefix = mp.at("media_prefix");
    fit.mapping.control_prefix = mp.at("control_prefix");
    fit.channel_names = j.at("channels").get<std::vector<std::string>>();
    fit.control_names = j.at("controls").get<std::vector<std::string>>();

    auto &d = fit.draws;
    ScaleInfo scale;
    scale.media_scale = vector_from(j.at("scale").at("media"));
    scale.control_scale = vector_from(j.at("scale").at("controls"));
    scale.response_scale = to_number(j.at("scale").at("response"));
    d.scale = scale;
    for (const auto &p : j.at("parameters")) d.params.push_back(param_from(p));
    for (const auto &x : j.at("rhat")) d.rhat.push_back(to_number(x));
    for (const auto &x : j.at("ess")) d.ess.push_back(to_number(x));
    for (const auto &c : j.at("chain_stats")) {
      ChainStats st;
      st.step_size = to_number(c.at("step_size"));
      st.divergences = c.at("divergences");
      st.mean_accept = to_number(c.at("mean_accept"));
      st.mean_treedepth = to_number(c.at("mean_treedepth"));
      st.leapfrog_steps = c.at("leapfrog_steps");
      d.chain_stats.push_back(st);
    }
    d.chains = j.at("chains");
    d.draws = j.at("draws_per_chain");
    const auto &draws = j.at("draws");
    const std::size_t dim = d.params.size();
    if (draws.size() != static_cast<std::size_t>(d.chains))
      throw Error(ErrorCode::ParseError, "fit file: chain count does not match draws");
    d.values.reserve(static_cast<std::size_t>(d.chains) * d.draws * dim);
    for (const auto &chain : draws) {
      if (chain.size() != static_cast<std::size_t>(d.draws))
        throw Error(ErrorCode::ParseError, "fit file: draw count does not match");
      for (const auto &row : chain) {
        if (row.size() != dim) throw Error(ErrorCode::ParseError, "fit file: draw width does not match");
        for (const auto &x : row) d.values.push_back(to_number(x));
      }
    }
    if (scale.media_scale.size() != static_cast<Eigen::Index>(fit.channel_names.size()) ||
        scale.control_scale.size() != static_cast<Eigen::Index>(fit.control_names.size()))
      throw Error(ErrorCode::ParseError, "fit file: scale does not match columns");
    return fit;
  } catch (const json::exception &e) {
    throw Error(ErrorCode::ParseError, std::string("fit file: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path &path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_fit(const FitResult &fit, const std::filesystem::path &path) {
  write_file_atomic(path, fit_to_json(fit));
}

FitResult load_fit(const std::filesystem::path &path) { return fit_from_json(read_file(path)); }

}  // namespace mmm
