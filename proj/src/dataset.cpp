#include "mmm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#include "mmm/error.hpp"
#include "mmm/transforms.hpp"

namespace mmm {

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.emplace_back(trim(field));
  return out;
}

std::string csv_escape(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_name(const std::string &column, std::size_t row) {
  return "column '" + column + "', data row " + std::to_string(row + 1);
}

double parse_cell(std::string_view text, const std::string &column,
                  std::size_t row) {
  text = trim(text);
  if (text.empty() || text == "NA" || text == "NaN" || text == "nan" ||
      text == "null")
    throw Error(ErrorCode::MissingValue, cell_name(column, row));
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorCode::ParseError,
                cell_name(column, row) + ": '" + std::string(text) + "' is not a number");
  if (std::isnan(v)) throw Error(ErrorCode::MissingValue, cell_name(column, row));
  if (!std::isfinite(v))
    throw Error(ErrorCode::ParseError, cell_name(column, row) + ": non-finite value");
  return v;
}

bool starts_with(const std::string &s, const std::string &prefix) {
  return !prefix.empty() && s.rfind(prefix, 0) == 0;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len, auto &out) {
    auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc() && p == text.data() + pos + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

void TimeSeriesDataset::validate(int max_delay) const {
  const auto T = static_cast<Eigen::Index>(time.size());
  if (media.rows() != T || controls.rows() != T || response.size() != T)
    throw Error(ErrorCode::DimensionMismatch,
                "all columns must have " + std::to_string(T) + " entries");
  if (channel_names.size() != channels() || control_names.size() != num_controls())
    throw Error(ErrorCode::DimensionMismatch, "column names do not match matrix widths");
  if (max_delay > 0 && T < 2 * max_delay)
    throw Error(ErrorCode::InvalidArgument,
                "need at least 2*max_delay = " + std::to_string(2 * max_delay) +
                    " weeks, have " + std::to_string(T));
  for (Eigen::Index t = 1; t < T; ++t) {
    if ((time[t] - time[t - 1]).count() != 7)
      throw Error(ErrorCode::NonUniformTimeStep,
                  "rows " + std::to_string(t) + " and " + std::to_string(t + 1) +
                      " (" + format_date(time[t - 1]) + " -> " + format_date(time[t]) +
                      ") are not 7 days apart");
  }
  for (Eigen::Index m = 0; m < media.cols(); ++m) {
    for (Eigen::Index t = 0; t < T; ++t) {
      const double v = media(t, m);
      if (std::isnan(v)) throw Error(ErrorCode::MissingValue, cell_name(channel_names[m], t));
      if (v < 0.0) throw Error(ErrorCode::NegativeSpend, cell_name(channel_names[m], t));
    }
  }
  for (Eigen::Index c = 0; c < controls.cols(); ++c)
    for (Eigen::Index t = 0; t < T; ++t)
      if (!std::isfinite(controls(t, c)))
        throw Error(ErrorCode::MissingValue, cell_name(control_names[c], t));
  for (Eigen::Index t = 0; t < T; ++t) {
    if (!std::isfinite(response[t]))
      throw Error(ErrorCode::MissingValue, cell_name(response_name, t));
    if (response[t] < 0.0)
      throw Error(ErrorCode::InvalidArgument,
                  cell_name(response_name, t) + ": response must be non-negative");
  }
}

bool TimeSeriesDataset::operator==(const TimeSeriesDataset &o) const {
  return time == o.time && channel_names == o.channel_names &&
         control_names == o.control_names && time_name == o.time_name &&
         response_name == o.response_name && media.rows() == o.media.rows() &&
         media.cols() == o.media.cols() && media == o.media &&
         controls.rows() == o.controls.rows() && controls.cols() == o.controls.cols() &&
         controls == o.controls && response.size() == o.response.size() &&
         response == o.response;
}

TimeSeriesDataset parse_csv(std::string_view text, const ColumnMapping &mapping) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!trim(line).empty()) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  if (lines.empty()) throw Error(ErrorCode::ParseError, "empty CSV (no header row)");

  std::string_view header_line = lines.front();
  if (header_line.substr(0, 3) == "\xEF\xBB\xBF") header_line.remove_prefix(3);
  const auto header = split_csv_line(header_line);

  auto find = [&](const std::string &name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t time_col = find(mapping.time);
  const std::size_t response_col = find(mapping.response);

  std::vector<std::string> media_names = mapping.media;
  std::vector<std::string> control_names = mapping.controls;
  if (media_names.empty())
    for (const auto &h : header)
      if (starts_with(h, mapping.media_prefix)) media_names.push_back(h);
  if (control_names.empty())
    for (const auto &h : header)
      if (starts_with(h, mapping.control_prefix)) control_names.push_back(h);
  if (media_names.empty())
    throw Error(ErrorCode::MissingColumn,
                "no media columns (none configured and none with prefix '" +
                    mapping.media_prefix + "')");

  std::vector<std::size_t> media_cols;
  std::vector<std::size_t> control_cols;
  for (const auto &n : media_names) media_cols.push_back(find(n));
  for (const auto &n : control_names) control_cols.push_back(find(n));

  const std::size_t T = lines.size() - 1;
  TimeSeriesDataset ds;
  ds.time_name = mapping.time;
  ds.response_name = mapping.response;
  ds.channel_names = media_names;
  ds.control_names = control_names;
  ds.time.reserve(T);
  ds.media.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(media_cols.size()));
  ds.controls.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(control_cols.size()));
  ds.response.resize(static_cast<Eigen::Index>(T));

  for (std::size_t r = 0; r < T; ++r) {
    const auto cells = split_csv_line(lines[r + 1]);
    if (cells.size() != header.size())
      throw Error(ErrorCode::ParseError,
                  "data row " + std::to_string(r + 1) + " has " +
                      std::to_string(cells.size()) + " fields, header has " +
                      std::to_string(header.size()));
    if (trim(cells[time_col]).empty())
      throw Error(ErrorCode::MissingValue, cell_name(mapping.time, r));
    const auto date = parse_date(cells[time_col]);
    if (!date)
      throw Error(ErrorCode::ParseError,
                  cell_name(mapping.time, r) + ": '" + cells[time_col] +
                      "' is not an ISO-8601 date");
    ds.time.push_back(*date);
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t m = 0; m < media_cols.size(); ++m) {
      const double v = parse_cell(cells[media_cols[m]], media_names[m], r);
      if (v < 0.0) throw Error(ErrorCode::NegativeSpend, cell_name(media_names[m], r));
      ds.media(row, static_cast<Eigen::Index>(m)) = v;
    }
    for (std::size_t c = 0; c < control_cols.size(); ++c)
      ds.controls(row, static_cast<Eigen::Index>(c)) =
          parse_cell(cells[control_cols[c]], control_names[c], r);
    ds.response[row] = parse_cell(cells[response_col], mapping.response, r);
  }
  ds.validate();
  return ds;
}

TimeSeriesDataset load_csv(const std::filesystem::path &path, const ColumnMapping &mapping) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), mapping);
}

std::string to_csv(const TimeSeriesDataset &ds) {
  std::string out = csv_escape(ds.time_name);
  for (const auto &n : ds.channel_names) out += "," + csv_escape(n);
  for (const auto &n : ds.control_names) out += "," + csv_escape(n);
  out += "," + csv_escape(ds.response_name) + "\n";
  for (std::size_t r = 0; r < ds.weeks(); ++r) {
    const auto t = static_cast<Eigen::Index>(r);
    out += format_date(ds.time[r]);
    for (Eigen::Index m = 0; m < ds.media.cols(); ++m) out += "," + format_number(ds.media(t, m));
    for (Eigen::Index c = 0; c < ds.controls.cols(); ++c)
      out += "," + format_number(ds.controls(t, c));
    out += "," + format_number(ds.response[t]) + "\n";
  }
  return out;
}

void write_csv(const TimeSeriesDataset &ds, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << to_csv(ds);
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

std::string fingerprint(const TimeSeriesDataset &ds) {
  const std::string bytes = to_csv(ds);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoError, "SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

double pearson_r(const Eigen::Ref<const Eigen::VectorXd> &x,
                 const Eigen::Ref<const Eigen::VectorXd> &y) {
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd dy = y.array() - y.mean();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (dx * dy).sum() / std::sqrt(sxx * syy);
}

std::vector<CorrelationFinding> validate_correlations(const TimeSeriesDataset &ds,
                                                      double threshold) {
  if (ds.weeks() < 3)
    throw Error(ErrorCode::InvalidArgument, "correlation screen needs at least 3 weeks");
  std::vector<std::pair<std::string, Eigen::VectorXd>> columns;
  for (Eigen::Index m = 0; m < ds.media.cols(); ++m)
    columns.emplace_back(ds.channel_names[m], ds.media.col(m));
  for (Eigen::Index c = 0; c < ds.controls.cols(); ++c)
    columns.emplace_back(ds.control_names[c], ds.controls.col(c));

  std::vector<CorrelationFinding> findings;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    for (std::size_t j = i + 1; j < columns.size(); ++j) {
      const double r = pearson_r(columns[i].second, columns[j].second);
      if (std::isnan(r)) {
        findings.push_back({columns[i].first, columns[j].first, r, true});
      } else if (r * r > threshold) {
        findings.push_back({columns[i].first, columns[j].first, r * r, false});
      }
    }
  }
  return findings;
}

ScaleInfo ScaleInfo::identity(std::size_t channels, std::size_t controls) {
  return {Eigen::VectorXd::Ones(static_cast<Eigen::Index>(channels)),
          Eigen::VectorXd::Ones(static_cast<Eigen::Index>(controls)), 1.0};
}

std::pair<TimeSeriesDataset, ScaleInfo> scale_dataset(const TimeSeriesDataset &ds) {
  ScaleInfo scale;
  scale.media_scale.resize(ds.media.cols());
  scale.control_scale.resize(ds.controls.cols());
  for (Eigen::Index m = 0; m < ds.media.cols(); ++m) {
    // Spend is non-negative, so a zero mean means an all-zero channel; it
    // stays unscaled and contributes nothing.
    const double mean = ds.media.col(m).mean();
    if (!std::isfinite(mean))
      throw Error(ErrorCode::ZeroMeanColumn, "media column '" + ds.channel_names[m] + "'");
    scale.media_scale[m] = mean > 0.0 ? mean : 1.0;
  }
  for (Eigen::Index c = 0; c < ds.controls.cols(); ++c) {
    const double mean = std::abs(ds.controls.col(c).mean());
    if (!(mean > 0.0))
      throw Error(ErrorCode::ZeroMeanColumn, "control column '" + ds.control_names[c] + "'");
    scale.control_scale[c] = mean;
  }
  scale.response_scale = ds.response.mean();
  if (!(scale.response_scale > 0.0))
    throw Error(ErrorCode::ZeroMeanColumn, "response column '" + ds.response_name + "'");
  return {apply_scale(ds, scale), scale};
}

TimeSeriesDataset apply_scale(const TimeSeriesDataset &ds, const ScaleInfo &scale) {
  if (scale.media_scale.size() != ds.media.cols() ||
      scale.control_scale.size() != ds.controls.cols())
    throw Error(ErrorCode::ChannelMismatch, "scale info does not match dataset columns");
  TimeSeriesDataset out = ds;
  for (Eigen::Index m = 0; m < out.media.cols(); ++m) out.media.col(m) /= scale.media_scale[m];
  for (Eigen::Index c = 0; c < out.controls.cols(); ++c)
    out.controls.col(c) /= scale.control_scale[c];
  out.response /= scale.response_scale;
  return out;
}

TimeSeriesDataset unscale_dataset(const TimeSeriesDataset &ds, const ScaleInfo &scale) {
  if (scale.media_scale.size() != ds.media.cols() ||
      scale.control_scale.size() != ds.controls.cols())
    throw Error(ErrorCode::ChannelMismatch, "scale info does not match dataset columns");
  TimeSeriesDataset out = ds;
  for (Eigen::Index m = 0; m < out.media.cols(); ++m) out.media.col(m) *= scale.media_scale[m];
  for (Eigen::Index c = 0; c < out.controls.cols(); ++c)
    out.controls.col(c) *= scale.control_scale[c];
  out.response *= scale.response_scale;
  return out;
}

void GeneratorSpec::validate() const {
  auto fail = [](const std::string &msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (channels < 1) fail("generator: need at least one channel");
  if (max_delay < 1) fail("generator: max_delay must be >= 1");
  if (weeks < 2 * static_cast<std::size_t>(max_delay))
    fail("generator: weeks must be at least 2*max_delay");
  if (!(noise_sd >= 0.0)) fail("generator: noise_sd must be >= 0");
  if (!(pulse_density > 0.0 && pulse_density <= 1.0))
    fail("generator: pulse_density must lie in (0, 1]");
  if (!(amplitude_log_sd >= 0.0)) fail("generator: amplitude_log_sd must be >= 0");
  if (!truth.empty() && truth.size() != channels)
    fail("generator: truth must have one entry per channel");
  for (const auto &c : truth) {
    if (!(c.V > 0.0 && c.K > 0.0)) fail("generator: V and K must be positive");
    if (!(c.retention > 0.0 && c.retention < 1.0))
      fail("generator: retention must lie in (0, 1)");
    if (!(c.delay >= 0.0 && c.delay <= max_delay - 1))
      fail("generator: delay must lie in [0, max_delay - 1]");
  }
  if (!control_coefficients.empty() && control_coefficients.size() != controls)
    fail("generator: control_coefficients must have one entry per control");
  if (mix_self.size() != mix_cross.size())
    fail("generator: mix_self and mix_cross must have equal length");
  if (!mix_self.empty() && mix_self.size() != 1 && mix_self.size() != channels)
    fail("generator: mixing coefficients must be uniform (1 value) or per channel");
  if (!mix_self.empty() && channels < 2) fail("generator: mixing needs at least 2 channels");
}

SyntheticData generate_synthetic(const GeneratorSpec &input) {
  input.validate();
  GeneratorSpec spec = input;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unif(rng); };

  const auto T = static_cast<Eigen::Index>(spec.weeks);
  const auto M = static_cast<Eigen::Index>(spec.channels);
  const auto C = static_cast<Eigen::Index>(spec.controls);

  if (spec.truth.empty()) {
    spec.truth.resize(spec.channels);
    for (auto &c : spec.truth) {
      c.spend_level = std::exp(uniform(std::log(1000.0), std::log(20000.0)));
      c.retention = uniform(0.2, 0.7);
      c.delay = std::min(uniform(0.0, 2.0), static_cast<double>(spec.max_delay - 1));
      c.V = uniform(20.0, 60.0);
      c.K = uniform(0.5, 1.5) * spec.pulse_density * c.spend_level;
    }
  } else {
    for (auto &c : spec.truth)
      if (!(c.spend_level > 0.0))
        c.spend_level = std::exp(uniform(std::log(1000.0), std::log(20000.0)));
  }
  if (spec.control_coefficients.empty()) {
    spec.control_coefficients.resize(spec.controls);
    for (auto &g : spec.control_coefficients) g = uniform(1.0, 4.0);
  }
  if (spec.mix_self.size() == 1 && spec.channels > 1) {
    spec.mix_self.assign(spec.channels, spec.mix_self.front());
    spec.mix_cross.assign(spec.channels, spec.mix_cross.front());
  }

  const auto start = parse_date(spec.start_date);
  if (!start)
    throw Error(ErrorCode::InvalidArgument, "generator: bad start_date '" + spec.start_date + "'");

  TimeSeriesDataset ds;
  ds.time.reserve(spec.weeks);
  for (Eigen::Index t = 0; t < T; ++t) ds.time.push_back(*start + std::chrono::days{7 * t});
  for (Eigen::Index m = 0; m < M; ++m) ds.channel_names.push_back("media_" + std::to_string(m + 1));
  for (Eigen::Index c = 0; c < C; ++c) ds.control_names.push_back("control_" + std::to_string(c + 1));
  ds.response = Eigen::VectorXd::Zero(T);

  constexpr double kControlAutocorrelation = 0.5;
  int attempt = 0;
  for (;;) {
    ++attempt;
    ds.media.resize(T, M);
    for (Eigen::Index m = 0; m < M; ++m) {
      const double level = spec.truth[m].spend_level;
      for (Eigen::Index t = 0; t < T; ++t) {
        const bool active = spec.pulse_density >= 1.0 || unif(rng) < spec.pulse_density;
        const double z = normal(rng);
        ds.media(t, m) = active ? level * std::exp(spec.amplitude_log_sd * z) : 0.0;
      }
    }
    ds.controls.resize(T, C);
    const double innovation_sd =
        spec.control_sd * std::sqrt(1.0 - kControlAutocorrelation * kControlAutocorrelation);
    for (Eigen::Index c = 0; c < C; ++c) {
      double dev = spec.control_sd * normal(rng);
      for (Eigen::Index t = 0; t < T; ++t) {
        if (t > 0) dev = kControlAutocorrelation * dev + innovation_sd * normal(rng);
        ds.controls(t, c) = spec.control_mean + dev;
      }
    }
    const auto findings = validate_correlations(ds, spec.correlation_threshold);
    const bool screened = std::none_of(findings.begin(), findings.end(),
                                       [](const CorrelationFinding &f) { return !f.constant; });
    if (screened) break;
    if (attempt >= spec.max_retries)
      throw Error(ErrorCode::CorrelationScreenFailed,
                  "pairwise r^2 above " + std::to_string(spec.correlation_threshold) +
                      " after " + std::to_string(attempt) + " attempts");
  }

  Eigen::MatrixXd carried(T, M);
  for (Eigen::Index m = 0; m < M; ++m)
    carried.col(m) = carryover(
        ds.media.col(m), CarryoverParams{spec.truth[m].retention, spec.truth[m].delay,
                                         spec.max_delay});
  Eigen::MatrixXd saturation_input = carried;
  if (spec.has_mixing()) {
    BoltzmannParams mix{Eigen::Map<const Eigen::VectorXd>(spec.mix_self.data(), M),
                        Eigen::Map<const Eigen::VectorXd>(spec.mix_cross.data(), M)};
    saturation_input = boltzmann_mix(carried, mix);
  }
  Eigen::MatrixXd contributions(T, M);
  for (Eigen::Index m = 0; m < M; ++m)
    contributions.col(m) = michaelis_menten(
        saturation_input.col(m), MMParams{spec.truth[m].V, spec.truth[m].K});

  for (Eigen::Index t = 0; t < T; ++t) {
    double y = spec.baseline;
    for (Eigen::Index m = 0; m < M; ++m) y += contributions(t, m);
    for (Eigen::Index c = 0; c < C; ++c) y += spec.control_coefficients[c] * ds.controls(t, c);
    if (spec.noise_sd > 0.0) y += spec.noise_sd * normal(rng);
    ds.response[t] = std::max(0.0, y);
  }
  ds.validate(spec.max_delay);
  return {std::move(ds), std::move(spec), std::move(contributions), attempt};
}

}  // namespace mmm
