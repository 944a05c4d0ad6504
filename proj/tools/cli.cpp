#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "mmm/diagnostics.hpp"
#include "mmm/error.hpp"
#include "mmm/fit_io.hpp"
#include "mmm/funnel.hpp"
#include "mmm/metrics.hpp"
#include "mmm/posterior.hpp"
#include "svg.hpp"

namespace mmm::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class ArtifactMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
  std::string variant;
  int chains = 0;
  int draws = 0;
  int warmup = 0;
  bool allow_nonconverged = false;
  std::string data;
  std::string fit;
  std::string mode;
  bool plots = false;
  std::vector<const CLI::Option *> given;  // options present on the command line
  CLI::App *app = nullptr;
};

struct Context {
  RunConfig cfg;
  bool quiet = false;
  bool allow_nonconverged = false;
  std::ostream &out;
  std::ostream &err;

  fs::path out_dir() const { return fs::path(cfg.out); }
  void say(const std::string &text) const {
    if (!quiet) out << text;
  }
};

// Shortest round-trip text; "NaN" / "inf" for non-finite values.
std::string num(double x) {
  if (std::isnan(x)) return "NaN";
  return fmt::format("{}", x);
}

json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string fixed(double x, int digits) {
  if (std::isnan(x)) return "-";
  return fmt::format("{:.{}f}", x, digits);
}

std::string render_table(const std::vector<std::string> &header,
                         const std::vector<std::vector<std::string>> &rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto &r : rows)
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  auto line = [&](const std::vector<std::string> &cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i == 0) s += fmt::format("{:<{}}", cells[i], width[i]);
      else s += fmt::format("  {:>{}}", cells[i], width[i]);
    }
    return s + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w + 2;
  out += std::string(total > 2 ? total - 2 : 0, '-') + "\n";
  for (const auto &r : rows) out += line(r);
  return out;
}

std::string csv_line(const std::vector<std::string> &cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
    if (!quote) {
      s += cells[i];
      continue;
    }
    s += '"';
    for (char ch : cells[i]) s += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    s += '"';
  }
  return s + "\n";
}

void write_output(const fs::path &path, const std::string &content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, content);
}

RunConfig build_config(const Options &o) {
  RunConfig cfg;
  auto given = [&](const char *name) {
    return std::any_of(o.given.begin(), o.given.end(),
                       [&](const CLI::Option *opt) { return opt->check_lname(name); });
  };
  if (!o.config.empty()) apply_config_file(cfg, o.config);
  if (given("out")) cfg.out = o.out;
  if (given("seed")) {
    cfg.sampler.seed = o.seed;
    cfg.generator.seed = o.seed;
  }
  if (given("variant")) set_config_value(cfg, "model.variant", o.variant);
  if (given("chains")) cfg.sampler.chains = o.chains;
  if (given("draws")) cfg.sampler.draws = o.draws;
  if (given("warmup")) cfg.sampler.warmup = o.warmup;
  if (given("data")) cfg.data.path = o.data;
  if (given("fit")) cfg.fit = o.fit;
  if (given("mode")) set_config_value(cfg, "funnel.mode", o.mode);
  if (o.plots) cfg.plots = true;
  return cfg;
}

const std::string &require_data(const RunConfig &cfg) {
  if (cfg.data.path.empty())
    throw Error(ErrorCode::InvalidArgument, "data.path is required (config key or --data)");
  return cfg.data.path;
}

struct Inputs {
  FitResult fit;
  TimeSeriesDataset ds;
};

// Loads the fit file and its dataset, enforcing the fingerprint contract.
Inputs load_inputs(const RunConfig &cfg) {
  Inputs in;
  in.fit = load_fit(cfg.fit_path());
  in.ds = load_csv(require_data(cfg), in.fit.mapping);
  const std::string fp = fingerprint(in.ds);
  if (fp != in.fit.fingerprint)
    throw ArtifactMismatch("dataset fingerprint " + fp + " does not match the fit file (" +
                           in.fit.fingerprint + ")");
  return in;
}

// ---------------------------------------------------------------- generate

json ground_truth_json(const SyntheticData &syn, const std::string &fp) {
  const auto &g = syn.spec;
  json channels = json::array();
  for (std::size_t m = 0; m < g.truth.size(); ++m) {
    const auto &t = g.truth[m];
    json contrib = json::array();
    for (Eigen::Index r = 0; r < syn.contributions.rows(); ++r)
      contrib.push_back(syn.contributions(r, static_cast<Eigen::Index>(m)));
    channels.push_back({{"name", syn.dataset.channel_names[m]},
                        {"V", t.V},
                        {"K", t.K},
                        {"retention", t.retention},
                        {"delay", t.delay},
                        {"spend_level", t.spend_level},
                        {"contribution", std::move(contrib)}});
  }
  json controls = json::array();
  for (std::size_t c = 0; c < g.control_coefficients.size(); ++c)
    controls.push_back({{"name", syn.dataset.control_names[c]}, {"gamma", g.control_coefficients[c]}});
  return {{"fingerprint", fp},
          {"seed", g.seed},
          {"weeks", g.weeks},
          {"baseline", g.baseline},
          {"noise_sd", g.noise_sd},
          {"pulse_density", g.pulse_density},
          {"amplitude_log_sd", g.amplitude_log_sd},
          {"max_delay", g.max_delay},
          {"start_date", g.start_date},
          {"mix_self", g.mix_self},
          {"mix_cross", g.mix_cross},
          {"attempts", syn.attempts},
          {"channels", std::move(channels)},
          {"controls", std::move(controls)}};
}

int cmd_generate(Context &c) {
  const SyntheticData syn = generate_synthetic(c.cfg.generator);
  const std::string fp = fingerprint(syn.dataset);
  const fs::path csv = c.out_dir() / "dataset.csv";
  write_output(csv, to_csv(syn.dataset));
  write_output(c.out_dir() / "ground_truth.json", ground_truth_json(syn, fp).dump(2) + "\n");
  c.say(fmt::format("wrote {} ({} weeks, {} channels, {} controls)\n", csv.string(),
                    syn.dataset.weeks(), syn.dataset.channels(), syn.dataset.num_controls()));
  c.say(fmt::format("fingerprint {}\n", fp));
  return kExitOk;
}

// ---------------------------------------------------------------- fit

std::string metrics_text(const FitMetrics &m) {
  return render_table({"metric", "value"},
                      {{"R2", fixed(m.r2, 4)},
                       {"explained_variance", fixed(m.explained_variance, 4)},
                       {"MAPE", fixed(m.mape, 4)},
                       {"accuracy_pct", fixed(m.accuracy_pct, 2)},
                       {"zero_weeks_excluded", std::to_string(m.excluded_zero_weeks)}});
}

json metrics_json(const FitMetrics &m) {
  return {{"r2", jnum(m.r2)},
          {"explained_variance", jnum(m.explained_variance)},
          {"mape", jnum(m.mape)},
          {"accuracy_pct", jnum(m.accuracy_pct)},
          {"excluded_zero_weeks", m.excluded_zero_weeks}};
}

int cmd_fit(Context &c) {
  auto &cfg = c.cfg;
  cfg.model.validate();
  cfg.sampler.validate();
  const TimeSeriesDataset ds = load_csv(require_data(cfg), cfg.data.mapping);
  for (const auto &f : validate_correlations(ds)) {
    if (f.constant) c.err << fmt::format("warning: {} or {} is constant\n", f.first, f.second);
    else c.err << fmt::format("warning: r^2({}, {}) = {:.3f}\n", f.first, f.second, f.r2);
  }
  const FitResult fit = fit_model(ds, cfg.model, cfg.sampler, cfg.data.mapping);
  save_fit(fit, cfg.fit_path());

  const Prediction pred = predict(fit, ds, cfg.sampler.seed);
  const FitMetrics m = fit_metrics(ds.response, pred.mean);
  const auto summary = posterior_summary(fit.draws);

  json mj = metrics_json(m);
  std::vector<std::string> unconverged;
  double max_rhat = 0.0;
  for (const auto &s : summary) {
    if (std::isnan(s.rhat)) continue;
    max_rhat = std::max(max_rhat, s.rhat);
    if (s.rhat > 1.1) unconverged.push_back(s.name);
  }
  int divergences = 0;
  for (const auto &st : fit.draws.chain_stats) divergences += st.divergences;
  mj["variant"] = std::string(to_string(fit.spec.variant));
  mj["max_rhat"] = jnum(max_rhat);
  mj["converged"] = unconverged.empty();
  mj["divergences"] = divergences;
  write_output(c.out_dir() / "metrics.json", mj.dump(2) + "\n");
  const std::string text = metrics_text(m);
  write_output(c.out_dir() / "metrics.txt", text);

  std::string csv = csv_line({"parameter", "mean", "sd", "q05", "q50", "q95", "rhat", "ess"});
  for (const auto &s : summary)
    csv += csv_line({s.name, num(s.mean), num(s.sd), num(s.q05), num(s.q50), num(s.q95), num(s.rhat),
                     num(s.ess)});
  write_output(c.out_dir() / "summary.csv", csv);

  c.say(text);
  c.say(fmt::format("max R-hat {:.3f}, divergences {}\nwrote {}\n", max_rhat, divergences,
                    cfg.fit_path().string()));
  if (!unconverged.empty()) {
    std::string names;
    for (const auto &n : unconverged) names += (names.empty() ? "" : ", ") + n;
    c.err << "R-hat above 1.1 for: " << names << "\n";
    if (!c.allow_nonconverged) return kExitNotConverged;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- decompose

int cmd_decompose(Context &c) {
  const Inputs in = load_inputs(c.cfg);
  const ContributionMatrix cm = decompose(in.fit, in.ds);
  const ContributionShare share = contribution_percent(cm, in.ds.response);
  const Eigen::VectorXd total = cm.total();

  std::vector<std::string> header{in.ds.time_name};
  for (const auto &n : cm.channel_names) header.push_back(n);
  header.insert(header.end(), {"baseline", "trend", "seasonality"});
  for (const auto &n : cm.control_names) header.push_back(n);
  header.push_back("predicted");
  std::string csv = csv_line(header);
  for (Eigen::Index t = 0; t < cm.values.rows(); ++t) {
    std::vector<std::string> row{format_date(in.ds.time[static_cast<std::size_t>(t)])};
    for (Eigen::Index m = 0; m < cm.values.cols(); ++m) row.push_back(num(cm.values(t, m)));
    row.insert(row.end(), {num(cm.baseline[t]), num(cm.trend[t]), num(cm.seasonality[t])});
    for (Eigen::Index k = 0; k < cm.controls.cols(); ++k) row.push_back(num(cm.controls(t, k)));
    row.push_back(num(total[t]));
    csv += csv_line(row);
  }
  write_output(c.out_dir() / "contributions.csv", csv);

  std::string pct_csv = csv_line({"channel", "contribution", "contribution_pct"});
  std::vector<std::vector<std::string>> rows;
  json pj = json::array();
  for (std::size_t m = 0; m < cm.channel_names.size(); ++m) {
    const double sum = cm.values.col(static_cast<Eigen::Index>(m)).sum();
    pct_csv += csv_line({cm.channel_names[m], num(sum), num(share.channel[m])});
    rows.push_back({cm.channel_names[m], fixed(sum, 2), fixed(share.channel[m], 2)});
    pj.push_back({{"channel", cm.channel_names[m]}, {"contribution", sum}, {"contribution_pct", share.channel[m]}});
  }
  const double media_sum = cm.values.sum();
  pct_csv += csv_line({"Total", num(media_sum), num(share.total)});
  rows.push_back({"Total", fixed(media_sum, 2), fixed(share.total, 2)});
  write_output(c.out_dir() / "contribution_pct.csv", pct_csv);
  write_output(c.out_dir() / "contribution_pct.json",
               json{{"channels", pj}, {"total_pct", share.total}, {"response_total", in.ds.response.sum()}}
                       .dump(2) + "\n");
  c.say(render_table({"channel", "contribution", "pct"}, rows));
  return kExitOk;
}

// ---------------------------------------------------------------- funnel

int cmd_funnel(Context &c) {
  const Inputs in = load_inputs(c.cfg);
  const auto M = static_cast<Eigen::Index>(in.ds.channels());
  if (M < 2) throw Error(ErrorCode::InvalidArgument, "funnel analysis needs at least 2 media channels");
  const ContributionMatrix cm = decompose(in.fit, in.ds);

  // mm_boltzmann fits carry both sides of the collision; otherwise the target
  // for channel i is the response left after removing everything but v_i.
  Eigen::MatrixXd v;
  Eigen::MatrixXd targets(cm.values.rows(), M);
  if (in.fit.spec.variant == Variant::MMBoltzmann) {
    v = isolated_contributions(in.fit, in.ds);
    targets = cm.values;
  } else {
    v = cm.values;
    for (Eigen::Index i = 0; i < M; ++i)
      targets.col(i) = build_funnel_target(cm, in.ds.response, {static_cast<int>(i)});
  }
  const bool pairwise = c.cfg.funnel.mode == "pairwise";
  const auto estimates = pairwise ? estimate_pairwise(v, targets, c.cfg.funnel.bounds)
                                  : estimate_n_particle(v, targets, c.cfg.funnel.bounds);
  const FunnelReport report = donor_receiver_report(estimates, cm.channel_names);

  auto donors_of = [&](const CollisionEstimate &e) {
    if (e.donors.size() == 1) return cm.channel_names[static_cast<std::size_t>(e.donors.front())];
    return std::string("all others");
  };
  std::string csv = csv_line({"target", "donors", "a", "b", "sse", "delta_influence", "condition", "degenerate"});
  json ej = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto &e : estimates) {
    const auto &name = cm.channel_names[static_cast<std::size_t>(e.target)];
    csv += csv_line({name, donors_of(e), num(e.a), num(e.b), num(e.sse), num(e.delta_influence),
                     num(e.condition), e.degenerate ? "true" : "false"});
    json donors = json::array();
    for (int d : e.donors) donors.push_back(cm.channel_names[static_cast<std::size_t>(d)]);
    ej.push_back({{"target", name},
                  {"donors", donors},
                  {"a", jnum(e.a)},
                  {"b", jnum(e.b)},
                  {"sse", jnum(e.sse)},
                  {"delta_influence", jnum(e.delta_influence)},
                  {"condition", jnum(e.condition)},
                  {"degenerate", e.degenerate}});
    rows.push_back({name, donors_of(e), fixed(e.a, 4), fixed(e.b, 4), fixed(e.delta_influence, 3),
                    e.degenerate ? "degenerate" : ""});
  }
  write_output(c.out_dir() / "collisions.csv", csv);

  json ranking = json::array();
  std::vector<std::vector<std::string>> rank_rows;
  for (const auto &r : report.ranking) {
    ranking.push_back({{"channel", r.name}, {"delta", r.delta}, {"role", std::string(to_string(r.role))}});
    if (r.role != InfluenceRole::Neutral)
      rank_rows.push_back({r.name, fixed(r.delta, 3), std::string(to_string(r.role))});
  }
  json out{{"mode", c.cfg.funnel.mode},
           {"bounds",
            {{"a_lower", c.cfg.funnel.bounds.a_lower},
             {"a_upper", c.cfg.funnel.bounds.a_upper},
             {"b_lower", c.cfg.funnel.bounds.b_lower},
             {"b_upper", c.cfg.funnel.bounds.b_upper}}},
           {"estimates", ej},
           {"ranking", ranking},
           {"total_delta", report.total_delta}};
  if (pairwise) {
    std::vector<std::string> header{"target\\donor"};
    for (const auto &n : cm.channel_names) header.push_back(n);
    std::string mcsv = csv_line(header);
    json matrix = json::array();
    for (Eigen::Index i = 0; i < M; ++i) {
      std::vector<std::string> row{cm.channel_names[static_cast<std::size_t>(i)]};
      json jrow = json::array();
      for (Eigen::Index j = 0; j < M; ++j) {
        row.push_back(num(report.delta_matrix(i, j)));
        jrow.push_back(jnum(report.delta_matrix(i, j)));
      }
      mcsv += csv_line(row);
      matrix.push_back(jrow);
    }
    write_output(c.out_dir() / "delta_matrix.csv", mcsv);
    out["delta_matrix"] = matrix;
  }
  write_output(c.out_dir() / "collisions.json", out.dump(2) + "\n");

  c.say(render_table({"target", "donors", "a", "b", "delta", ""}, rows));
  if (rank_rows.empty()) c.say("\nno donor or receiver channels (all deltas are 0)\n");
  else c.say("\n" + render_table({"channel", "delta", "role"}, rank_rows));
  return kExitOk;
}

// ---------------------------------------------------------------- report

struct ChannelCurve {
  double vmax = std::numeric_limits<double>::quiet_NaN();
  double km = std::numeric_limits<double>::quiet_NaN();
  double slope = 1.0;
};

ChannelCurve channel_curve(const FitResult &fit, const std::vector<ParameterSummary> &summary,
                           const std::string &channel) {
  ChannelCurve curve;
  const bool hill = fit.spec.variant == Variant::HillAdstock;
  for (const auto &s : summary) {
    if (s.name == (hill ? "S[" : "V[") + channel + "]") curve.vmax = s.q50;
    if (s.name == (hill ? "K_A[" : "K[") + channel + "]") curve.km = s.q50;
    if (hill && s.name == "n[" + channel + "]") curve.slope = s.q50;
  }
  return curve;
}

void write_plots(const Context &c, const Inputs &in, const Prediction &pred,
                 const std::vector<ChannelCurve> &curves, const std::vector<ChannelEconomics> &econ) {
  const fs::path dir = c.out_dir() / "plots";
  const auto T = in.ds.weeks();
  std::vector<double> week(T), y(T), mean(T), lo(T), hi(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto i = static_cast<Eigen::Index>(t);
    week[t] = static_cast<double>(t);
    y[t] = in.ds.response[i];
    mean[t] = pred.mean[i];
    lo[t] = pred.lower[i];
    hi[t] = pred.upper[i];
  }
  SvgChart fitc("Response fit", "week", in.ds.response_name);
  fitc.band(week, lo, hi, palette(0));
  fitc.points(week, y, "#333333", "observed");
  fitc.line(week, mean, palette(0), "posterior mean");
  write_output(dir / "response_fit.svg", fitc.render());

  SvgChart sat("Saturation curves", "spend (carryover axis)", "response");
  bool any_curve = false;
  for (std::size_t m = 0; m < curves.size(); ++m) {
    const auto &cv = curves[m];
    if (!(cv.km > 0.0) || !std::isfinite(cv.vmax)) continue;
    any_curve = true;
    const double xmax = std::max(3.0 * cv.km, in.ds.media.col(static_cast<Eigen::Index>(m)).maxCoeff());
    std::vector<double> xs, ys;
    for (int k = 0; k <= 200; ++k) {
      const double x = xmax * k / 200.0;
      const double r = std::pow(x / cv.km, cv.slope);
      xs.push_back(x);
      ys.push_back(cv.vmax * r / (1.0 + r));
    }
    sat.line(xs, ys, palette(m), in.ds.channel_names[m]);
    sat.marker(cv.km, cv.vmax / 2.0, palette(m), "K");
  }
  if (any_curve) write_output(dir / "saturation_curves.svg", sat.render());

  std::vector<double> kn, pct;
  for (const auto &e : econ)
    if (std::isfinite(e.km_normalized)) kn.push_back(e.km_normalized), pct.push_back(e.contribution_pct);
  if (!kn.empty()) {
    SvgChart sc("Normalized K vs contribution", "K_M / total spend", "contribution %");
    sc.points(kn, pct, palette(0));
    write_output(dir / "km_normalized_vs_contribution.svg", sc.render());
  }
}

int cmd_report(Context &c) {
  const Inputs in = load_inputs(c.cfg);
  const Prediction pred = predict(in.fit, in.ds, in.fit.sampler.seed);
  const FitMetrics metrics = fit_metrics(in.ds.response, pred.mean);
  const ContributionMatrix cm = decompose(in.fit, in.ds);
  const auto summary = posterior_summary(in.fit.draws);
  const double y_total = in.ds.response.sum();

  std::vector<ChannelCurve> curves;
  std::vector<ChannelEconomics> econ;
  json rows = json::array();
  std::string csv = csv_line({"channel", "total_spend", "contribution_pct", "media_outcome", "roas", "cpa",
                              "K_M", "K_M_normalized", "region"});
  std::vector<std::vector<std::string>> table;
  for (std::size_t m = 0; m < in.ds.channels(); ++m) {
    const auto col = static_cast<Eigen::Index>(m);
    const auto &name = in.ds.channel_names[m];
    curves.push_back(channel_curve(in.fit, summary, name));
    ChannelEconomics e;
    if (in.ds.media.col(col).sum() > 0.0) {
      const double outcome = cm.values.col(col).sum();
      e = channel_economics(in.ds.media.col(col), cm.values.col(col), outcome, curves.back().km, y_total,
                            c.cfg.regions);
    } else {
      e.km = e.km_normalized = e.roas = std::numeric_limits<double>::quiet_NaN();
      e.contribution_pct = 0.0;
    }
    econ.push_back(e);
    const double cpa = e.cpa.value_or(std::numeric_limits<double>::quiet_NaN());
    csv += csv_line({name, num(e.total_spend), num(e.contribution_pct), num(e.media_outcome), num(e.roas),
                     num(cpa), num(e.km), num(e.km_normalized), std::to_string(e.region)});
    rows.push_back({{"channel", name},
                    {"total_spend", jnum(e.total_spend)},
                    {"contribution_pct", jnum(e.contribution_pct)},
                    {"media_outcome", jnum(e.media_outcome)},
                    {"roas", jnum(e.roas)},
                    {"cpa", jnum(cpa)},
                    {"K_M", jnum(e.km)},
                    {"K_M_normalized", jnum(e.km_normalized)},
                    {"V", jnum(curves.back().vmax)},
                    {"region", e.region}});
    table.push_back({name, fixed(e.total_spend, 0), fixed(e.contribution_pct, 2), fixed(e.media_outcome, 0),
                     fixed(e.roas, 4), fixed(cpa, 3), fixed(e.km, 0), fmt::format("{:.6f}", e.km_normalized),
                     e.region ? std::to_string(e.region) : "-"});
  }
  write_output(c.out_dir() / "economics.csv", csv);

  json rj{{"variant", std::string(to_string(in.fit.spec.variant))},
          {"fingerprint", in.fit.fingerprint},
          {"metrics", metrics_json(metrics)},
          {"region_thresholds", {{"lower", c.cfg.regions.lower}, {"upper", c.cfg.regions.upper}}},
          {"channels", rows}};
  write_output(c.out_dir() / "report.json", rj.dump(2) + "\n");
  const std::string text =
      metrics_text(metrics) + "\n" +
      render_table({"channel", "spend", "contrib%", "outcome", "RoAS", "CpA", "K_M", "K_M/spend", "region"},
                   table);
  write_output(c.out_dir() / "report.txt", text);
  if (c.cfg.plots) write_plots(c, in, pred, curves, econ);
  c.say(text);
  return kExitOk;
}

int exit_code_for(const Error &e) {
  switch (e.code()) {
    case ErrorCode::ChannelMismatch: return kExitArtifactMismatch;
    default: return kExitConfig;
  }
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Bayesian marketing mix modeling", "mmm"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  std::vector<CLI::Option *> tracked;
  tracked.push_back(app.add_option("--config", o.config, "key = value config file")->check(CLI::ExistingFile));
  tracked.push_back(app.add_option("--seed", o.seed, "random seed (generator and sampler)"));
  tracked.push_back(app.add_option("--out", o.out, "output directory"));
  app.add_flag("--quiet", o.quiet, "suppress tables on standard output");

  auto *generate = app.add_subcommand("generate", "write a synthetic dataset and its ground truth");
  auto *fit = app.add_subcommand("fit", "fit a model and persist posterior draws");
  tracked.push_back(fit->add_option("--variant", o.variant, "model variant"));
  tracked.push_back(fit->add_option("--chains", o.chains, "number of chains"));
  tracked.push_back(fit->add_option("--draws", o.draws, "kept draws per chain"));
  tracked.push_back(fit->add_option("--warmup", o.warmup, "warmup iterations per chain"));
  fit->add_flag("--allow-nonconverged", o.allow_nonconverged, "exit 0 even when R-hat exceeds 1.1");
  auto *decompose_cmd = app.add_subcommand("decompose", "per-channel contributions");
  auto *funnel = app.add_subcommand("funnel", "cross-channel collision analysis");
  tracked.push_back(funnel->add_option("--mode", o.mode, "pairwise or n-particle"));
  auto *report = app.add_subcommand("report", "metrics, economics and K_M table");
  report->add_flag("--plots", o.plots, "write SVG plots");
  for (auto *cmd : {fit, decompose_cmd, funnel, report}) {
    tracked.push_back(cmd->add_option("--data", o.data, "dataset CSV"));
    if (cmd != fit) tracked.push_back(cmd->add_option("--fit", o.fit, "fit file"));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  for (const auto *opt : tracked)
    if (opt->count() > 0) o.given.push_back(opt);

  try {
    Context ctx{build_config(o), o.quiet, o.allow_nonconverged, out, err};
    if (generate->parsed()) return cmd_generate(ctx);
    if (fit->parsed()) return cmd_fit(ctx);
    if (decompose_cmd->parsed()) return cmd_decompose(ctx);
    if (funnel->parsed()) return cmd_funnel(ctx);
    if (report->parsed()) return cmd_report(ctx);
    return kExitConfig;
  } catch (const ArtifactMismatch &e) {
    err << "error: " << e.what() << "\n";
    return kExitArtifactMismatch;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception &e) {
    err << "unexpected error: " << e.what() << "\n";
    return kExitUnexpected;
  }
}

}  // namespace mmm::cli
