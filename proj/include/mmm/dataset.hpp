#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mmm {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD).
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

/// Weekly panel: T rows, M media channels, C controls, one response.
///
/// Media and control matrices are column-major so each channel is a
/// contiguous series.
struct TimeSeriesDataset {
  std::vector<Date> time;
  Eigen::MatrixXd media;     // T x M, spend per week
  Eigen::MatrixXd controls;  // T x C
  Eigen::VectorXd response;  // T
  std::vector<std::string> channel_names;
  std::vector<std::string> control_names;
  std::string time_name = "date";
  std::string response_name = "y";

  std::size_t weeks() const { return time.size(); }
  std::size_t channels() const { return static_cast<std::size_t>(media.cols()); }
  std::size_t num_controls() const { return static_cast<std::size_t>(controls.cols()); }

  /// Throws mmm::Error when any invariant is broken. `max_delay` > 0 also
  /// enforces T >= 2 * max_delay.
  void validate(int max_delay = 0) const;

  bool operator==(const TimeSeriesDataset &other) const;
};

/// Assigns roles to CSV columns. Empty media/control lists are inferred from
/// the header by prefix.
struct ColumnMapping {
  std::string time = "date";
  std::string response = "y";
  std::vector<std::string> media;
  std::vector<std::string> controls;
  std::string media_prefix = "media_";
  std::string control_prefix = "control_";
};

TimeSeriesDataset load_csv(const std::filesystem::path &path,
                           const ColumnMapping &mapping = {});
TimeSeriesDataset parse_csv(std::string_view text,
                            const ColumnMapping &mapping = {});

/// Canonical CSV text: time, media, controls, response, with shortest
/// round-trip number formatting.
std::string to_csv(const TimeSeriesDataset &ds);
void write_csv(const TimeSeriesDataset &ds, const std::filesystem::path &path);

/// SHA-256 (hex) over the canonical CSV bytes.
std::string fingerprint(const TimeSeriesDataset &ds);

struct CorrelationFinding {
  std::string first;
  std::string second;
  double r2 = 0.0;
  bool constant = false;  // correlation undefined; r2 is NaN
};

/// Squared Pearson correlation for every media/control column pair whose r^2
/// exceeds `threshold`. Pairs involving a constant column are reported with
/// `constant = true`.
std::vector<CorrelationFinding> validate_correlations(
    const TimeSeriesDataset &ds, double threshold = 0.4);

double pearson_r(const Eigen::Ref<const Eigen::VectorXd> &x,
                 const Eigen::Ref<const Eigen::VectorXd> &y);

struct ScaleInfo {
  Eigen::VectorXd media_scale;    // M
  Eigen::VectorXd control_scale;  // C
  double response_scale = 1.0;

  static ScaleInfo identity(std::size_t channels, std::size_t controls);
};

/// Divides every media, control and response column by its mean (controls by
/// the absolute mean). All-zero media columns keep a divisor of 1.
std::pair<TimeSeriesDataset, ScaleInfo> scale_dataset(const TimeSeriesDataset &ds);
TimeSeriesDataset apply_scale(const TimeSeriesDataset &ds, const ScaleInfo &scale);
TimeSeriesDataset unscale_dataset(const TimeSeriesDataset &ds, const ScaleInfo &scale);

struct ChannelTruth {
  double V = 0.0;          // maximum saturation, response units
  double K = 0.0;          // half-saturation, spend units (carryover axis)
  double retention = 0.5;  // carryover retention rate
  double delay = 0.0;      // peak delay, weeks
  double spend_level = 0.0;  // median pulse amplitude, spend units
};

/// Generator inputs. Empty `truth` / `control_coefficients` are realized from
/// the seed and echoed back filled in.
struct GeneratorSpec {
  std::size_t weeks = 144;
  std::size_t channels = 10;
  std::size_t controls = 2;
  std::vector<ChannelTruth> truth;
  std::vector<double> control_coefficients;
  /// Optional uniform or per-channel collision coefficients; when set the
  /// response passes carryover -> mix -> Michaelis-Menten.
  std::vector<double> mix_self;
  std::vector<double> mix_cross;
  double baseline = 200.0;
  double noise_sd = 10.0;
  double pulse_density = 0.5;
  double amplitude_log_sd = 0.5;
  double control_mean = 10.0;
  double control_sd = 2.0;
  int max_delay = 13;
  std::string start_date = "2021-01-04";
  std::uint64_t seed = 42;
  int max_retries = 50;
  double correlation_threshold = 0.4;

  void validate() const;
  bool has_mixing() const { return !mix_self.empty(); }
};

struct SyntheticData {
  TimeSeriesDataset dataset;
  GeneratorSpec spec;  // echo with realized ground truth
  Eigen::MatrixXd contributions;  // T x M noiseless per-channel response
  int attempts = 1;
};

SyntheticData generate_synthetic(const GeneratorSpec &spec);

}  // namespace mmm
