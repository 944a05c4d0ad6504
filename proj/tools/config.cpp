#include "config.hpp"

#include <charconv>
#include <functional>
#include <utility>

#include "mmm/error.hpp"
#include "mmm/fit_io.hpp"

namespace mmm::cli {

namespace {

using Setter = std::function<void(RunConfig &, const std::string &)>;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string &what) { throw Error(ErrorCode::InvalidArgument, what); }

double parse_double(const std::string &v) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value("expected a number, got '" + v + "'");
  return x;
}

template <typename Int>
Int parse_int(const std::string &v) {
  Int x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value("expected an integer, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value("expected true or false, got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string &v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto item = trim(std::string_view(v).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<double> parse_numbers(const std::string &v) {
  std::vector<double> out;
  for (const auto &item : parse_list(v)) out.push_back(parse_double(item));
  return out;
}

// Builds a setter from an accessor returning a reference to the field.
template <typename Access>
Setter real(Access access) {
  return [access](RunConfig &c, const std::string &v) { access(c) = parse_double(v); };
}
template <typename Access>
Setter integer(Access access) {
  return [access](RunConfig &c, const std::string &v) {
    using Field = std::remove_reference_t<decltype(access(c))>;
    access(c) = parse_int<Field>(v);
  };
}
template <typename Access>
Setter boolean(Access access) {
  return [access](RunConfig &c, const std::string &v) { access(c) = parse_bool(v); };
}
template <typename Access>
Setter text(Access access) {
  return [access](RunConfig &c, const std::string &v) { access(c) = v; };
}
template <typename Access>
Setter list(Access access) {
  return [access](RunConfig &c, const std::string &v) { access(c) = parse_list(v); };
}
template <typename Access>
Setter numbers(Access access) {
  return [access](RunConfig &c, const std::string &v) { access(c) = parse_numbers(v); };
}

#define FIELD(expr) [](RunConfig &c) -> auto & { return c.expr; }

const std::vector<std::pair<std::string, Setter>> &table() {
  static const std::vector<std::pair<std::string, Setter>> t = {
      {"data.path", text(FIELD(data.path))},
      {"data.time", text(FIELD(data.mapping.time))},
      {"data.response", text(FIELD(data.mapping.response))},
      {"data.media", list(FIELD(data.mapping.media))},
      {"data.controls", list(FIELD(data.mapping.controls))},
      {"data.media_prefix", text(FIELD(data.mapping.media_prefix))},
      {"data.control_prefix", text(FIELD(data.mapping.control_prefix))},

      {"model.variant",
       [](RunConfig &c, const std::string &v) {
         const auto variant = parse_variant(v);
         if (!variant) {
           std::string names;
           for (const auto &n : variant_names()) names += (names.empty() ? "" : ", ") + n;
           bad_value("unknown variant '" + v + "'; valid variants: " + names);
         }
         c.model.variant = *variant;
       }},
      {"model.max_delay", integer(FIELD(model.max_delay))},
      {"model.include_trend", boolean(FIELD(model.include_trend))},
      {"model.seasonality_terms", integer(FIELD(model.seasonality_terms))},
      {"model.priors.baseline_scale", real(FIELD(model.priors.baseline_scale))},
      {"model.priors.control_sd", real(FIELD(model.priors.control_sd))},
      {"model.priors.noise_scale", real(FIELD(model.priors.noise_scale))},
      {"model.priors.retention_a", real(FIELD(model.priors.retention_a))},
      {"model.priors.retention_b", real(FIELD(model.priors.retention_b))},
      {"model.priors.delay_max", real(FIELD(model.priors.delay_max))},
      {"model.priors.saturation_factor", real(FIELD(model.priors.saturation_factor))},
      {"model.priors.half_saturation_factor", real(FIELD(model.priors.half_saturation_factor))},
      {"model.priors.coefficient_scale", real(FIELD(model.priors.coefficient_scale))},
      {"model.priors.hill_shape", real(FIELD(model.priors.hill_shape))},
      {"model.priors.hill_rate", real(FIELD(model.priors.hill_rate))},
      {"model.priors.hill_lower", real(FIELD(model.priors.hill_lower))},
      {"model.priors.hill_upper", real(FIELD(model.priors.hill_upper))},
      {"model.priors.self_lower", real(FIELD(model.priors.self_lower))},
      {"model.priors.self_upper", real(FIELD(model.priors.self_upper))},
      {"model.priors.cross_scale", real(FIELD(model.priors.cross_scale))},
      {"model.priors.trend_sd", real(FIELD(model.priors.trend_sd))},
      {"model.priors.seasonality_sd", real(FIELD(model.priors.seasonality_sd))},

      {"sampler.chains", integer(FIELD(sampler.chains))},
      {"sampler.warmup", integer(FIELD(sampler.warmup))},
      {"sampler.draws", integer(FIELD(sampler.draws))},
      {"sampler.seed", integer(FIELD(sampler.seed))},
      {"sampler.target_accept", real(FIELD(sampler.target_accept))},
      {"sampler.max_treedepth", integer(FIELD(sampler.max_treedepth))},
      {"sampler.init_radius", real(FIELD(sampler.init_radius))},
      {"sampler.max_init_attempts", integer(FIELD(sampler.max_init_attempts))},
      {"sampler.parallel", boolean(FIELD(sampler.parallel))},

      {"generator.weeks", integer(FIELD(generator.weeks))},
      {"generator.channels", integer(FIELD(generator.channels))},
      {"generator.controls", integer(FIELD(generator.controls))},
      {"generator.control_coefficients", numbers(FIELD(generator.control_coefficients))},
      {"generator.mix_self", numbers(FIELD(generator.mix_self))},
      {"generator.mix_cross", numbers(FIELD(generator.mix_cross))},
      {"generator.baseline", real(FIELD(generator.baseline))},
      {"generator.noise_sd", real(FIELD(generator.noise_sd))},
      {"generator.pulse_density", real(FIELD(generator.pulse_density))},
      {"generator.amplitude_log_sd", real(FIELD(generator.amplitude_log_sd))},
      {"generator.control_mean", real(FIELD(generator.control_mean))},
      {"generator.control_sd", real(FIELD(generator.control_sd))},
      {"generator.max_delay", integer(FIELD(generator.max_delay))},
      {"generator.start_date", text(FIELD(generator.start_date))},
      {"generator.seed", integer(FIELD(generator.seed))},
      {"generator.max_retries", integer(FIELD(generator.max_retries))},
      {"generator.correlation_threshold", real(FIELD(generator.correlation_threshold))},

      {"funnel.mode",
       [](RunConfig &c, const std::string &v) {
         if (v != "pairwise" && v != "n-particle")
           bad_value("funnel mode must be pairwise or n-particle, got '" + v + "'");
         c.funnel.mode = v;
       }},
      {"funnel.bounds.a_lower", real(FIELD(funnel.bounds.a_lower))},
      {"funnel.bounds.a_upper", real(FIELD(funnel.bounds.a_upper))},
      {"funnel.bounds.b_lower", real(FIELD(funnel.bounds.b_lower))},
      {"funnel.bounds.b_upper", real(FIELD(funnel.bounds.b_upper))},

      {"regions.lower", real(FIELD(regions.lower))},
      {"regions.upper", real(FIELD(regions.upper))},

      {"out", text(FIELD(out))},
      {"fit", text(FIELD(fit))},
      {"plots", boolean(FIELD(plots))},
  };
  return t;
}

#undef FIELD

}  // namespace

std::filesystem::path RunConfig::fit_path() const {
  return fit.empty() ? std::filesystem::path(out) / "fit.json" : std::filesystem::path(fit);
}

void set_config_value(RunConfig &cfg, const std::string &key, const std::string &value) {
  for (const auto &[name, setter] : table()) {
    if (name != key) continue;
    try {
      setter(cfg, value);
    } catch (const Error &e) {
      throw Error(ErrorCode::InvalidArgument, "config key '" + key + "': " + e.what());
    }
    return;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

void apply_config_text(RunConfig &cfg, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidArgument,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    set_config_value(cfg, trim(std::string_view(content).substr(0, eq)),
                     trim(std::string_view(content).substr(eq + 1)));
  }
}

void apply_config_file(RunConfig &cfg, const std::filesystem::path &path) {
  apply_config_text(cfg, read_file(path));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto &entry : table()) out.push_back(entry.first);
  return out;
}

}  // namespace mmm::cli
