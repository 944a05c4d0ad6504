#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "config.hpp"
#include "mmm/dataset.hpp"
#include "mmm/error.hpp"
#include "mmm/fit_io.hpp"

namespace fs = std::filesystem;
using namespace mmm;
using namespace mmm::cli;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mmm");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("mmm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path &dir, std::size_t channels) {
  const fs::path cfg = dir / "run.conf";
  std::ofstream f(cfg);
  f << "# small run\n"
    << "data.path = " << (dir / "dataset.csv").string() << "\n"
    << "out = " << dir.string() << "\n"
    << "generator.weeks = 60\n"
    << "generator.channels = " << channels << "\n"
    << "generator.controls = 1\n"
    << "generator.max_delay = 6\n"
    << "generator.noise_sd = 2\n"
    << "model.max_delay = 6\n"
    << "sampler.chains = 2\n"
    << "sampler.warmup = 150\n"
    << "sampler.draws = 100\n";
  return cfg;
}

std::vector<std::vector<std::string>> read_csv_cells(const fs::path &p) {
  std::ifstream f(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config parsing") {
  RunConfig cfg;
  apply_config_text(cfg, "# comment\n"
                         "model.variant = mm_boltzmann\n"
                         "sampler.chains = 3   # trailing comment\n"
                         "data.media = tv, radio\n"
                         "model.priors.noise_scale = 0.5\n"
                         "funnel.mode = pairwise\n"
                         "generator.mix_self = 0.94\n"
                         "regions.upper = 3\n");
  CHECK(cfg.model.variant == Variant::MMBoltzmann);
  CHECK(cfg.sampler.chains == 3);
  CHECK(cfg.data.mapping.media == std::vector<std::string>{"tv", "radio"});
  CHECK(cfg.model.priors.noise_scale == 0.5);
  CHECK(cfg.funnel.mode == "pairwise");
  CHECK(cfg.generator.mix_self == std::vector<double>{0.94});
  CHECK(cfg.regions.upper == 3.0);
  CHECK(cfg.fit_path() == fs::path("out") / "fit.json");

  CHECK_THROWS_AS(apply_config_text(cfg, "sampler.chains = many\n"), Error);
  CHECK_THROWS_AS(apply_config_text(cfg, "no.such.key = 1\n"), Error);
  CHECK_THROWS_AS(apply_config_text(cfg, "missing equals sign\n"), Error);
  CHECK_THROWS_AS(apply_config_text(cfg, "funnel.mode = sideways\n"), Error);
  try {
    apply_config_text(cfg, "model.variant = mm_magic\n");
    FAIL("expected an error");
  } catch (const Error &e) {
    const std::string msg = e.what();
    CHECK(msg.find("model.variant") != std::string::npos);
    for (const auto &v : variant_names()) CHECK(msg.find(v) != std::string::npos);
  }
}

TEST_CASE("the shipped example config parses and lists every key") {
  const fs::path example = fs::path(MMM_SOURCE_DIR) / "docs" / "config.example";
  RunConfig cfg;
  apply_config_file(cfg, example);
  const RunConfig defaults;
  CHECK(cfg.model.variant == defaults.model.variant);
  CHECK(cfg.sampler.chains == defaults.sampler.chains);
  CHECK(cfg.generator.noise_sd == defaults.generator.noise_sd);
  CHECK(cfg.fit_path() == defaults.fit_path());
  const std::string text = read_file(example);
  for (const auto &key : config_keys()) {
    CAPTURE(key);
    CHECK(text.find("\n" + key + " =") != std::string::npos);
  }
}

TEST_CASE("generate is deterministic and reports its fingerprint") {
  const fs::path a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
  const Result ra = run_cli({"--out", a.string(), "--seed", "9", "generate"});
  const Result rb = run_cli({"--out", b.string(), "--seed", "9", "--quiet", "generate"});
  REQUIRE(ra.code == kExitOk);
  REQUIRE(rb.code == kExitOk);
  CHECK(read_file(a / "dataset.csv") == read_file(b / "dataset.csv"));
  CHECK(read_file(a / "ground_truth.json") == read_file(b / "ground_truth.json"));
  const TimeSeriesDataset ds = load_csv(a / "dataset.csv");
  CHECK(ds.weeks() == 144);
  CHECK(ds.channels() == 10);
  CHECK(ds.num_controls() == 2);
  CHECK(ra.out.find(fingerprint(ds)) != std::string::npos);
  CHECK(rb.out.empty());
  const auto truth = nlohmann::json::parse(read_file(a / "ground_truth.json"));
  CHECK(truth["channels"].size() == 10);
}

TEST_CASE("usage and config errors exit with code 2") {
  const fs::path dir = fresh_dir("errors");
  CHECK(run_cli({}).code == kExitConfig);
  CHECK(run_cli({"bogus"}).code == kExitConfig);
  const Result bad_variant = run_cli({"--out", dir.string(), "fit", "--variant", "quadratic", "--data", "x.csv"});
  CHECK(bad_variant.code == kExitConfig);
  CHECK(bad_variant.err.find("mm_carryover") != std::string::npos);
  CHECK(bad_variant.err.find("hill_adstock") != std::string::npos);

  REQUIRE(run_cli({"--config", write_config(dir, 3).string(), "generate"}).code == kExitOk);
  const Result one_chain = run_cli({"--config", (dir / "run.conf").string(), "fit", "--chains", "1"});
  CHECK(one_chain.code == kExitConfig);
  CHECK(one_chain.err.find("chains") != std::string::npos);
  CHECK(run_cli({"--out", dir.string(), "fit"}).code == kExitConfig);  // no data path
  CHECK(run_cli({"--config", (dir / "missing.conf").string(), "generate"}).code == kExitConfig);
}

TEST_CASE("fit, decompose, funnel and report on a small dataset") {
  const fs::path dir = fresh_dir("pipeline");
  const std::string conf = write_config(dir, 3).string();
  REQUIRE(run_cli({"--config", conf, "generate"}).code == kExitOk);
  const std::string before = read_file(dir / "dataset.csv");

  const Result fit = run_cli({"--config", conf, "fit", "--allow-nonconverged"});
  REQUIRE(fit.code == kExitOk);
  CHECK(fit.out.find("R2") != std::string::npos);
  CHECK(fit.out.find("accuracy_pct") != std::string::npos);
  CHECK(fs::exists(dir / "fit.json"));
  const auto metrics = nlohmann::json::parse(read_file(dir / "metrics.json"));
  CHECK(metrics["r2"].get<double>() > 0.9);

  SUBCASE("refit with the same seed gives identical artifacts") {
    const std::string fit_bytes = read_file(dir / "fit.json");
    const std::string metric_bytes = read_file(dir / "metrics.json");
    REQUIRE(run_cli({"--config", conf, "fit", "--allow-nonconverged"}).code == kExitOk);
    CHECK(read_file(dir / "fit.json") == fit_bytes);
    CHECK(read_file(dir / "metrics.json") == metric_bytes);
  }
  SUBCASE("decompose") {
    const Result r = run_cli({"--config", conf, "decompose"});
    REQUIRE(r.code == kExitOk);
    const auto rows = read_csv_cells(dir / "contributions.csv");
    REQUIRE(rows.size() == 61);
    const auto pct = nlohmann::json::parse(read_file(dir / "contribution_pct.json"));
    const double y_total = pct["response_total"].get<double>();
    for (std::size_t m = 0; m < 3; ++m) {
      double sum = 0.0;
      for (std::size_t t = 1; t < rows.size(); ++t) sum += std::stod(rows[t][1 + m]);
      CHECK(100.0 * sum / y_total ==
            doctest::Approx(pct["channels"][m]["contribution_pct"].get<double>()).epsilon(1e-9));
    }
    CHECK(read_file(dir / "dataset.csv") == before);
  }
  SUBCASE("funnel in both modes") {
    Result r = run_cli({"--config", conf, "funnel"});
    REQUIRE(r.code == kExitOk);
    const auto n = nlohmann::json::parse(read_file(dir / "collisions.json"));
    CHECK(n["estimates"].size() == 3);
    r = run_cli({"--config", conf, "funnel", "--mode", "pairwise"});
    REQUIRE(r.code == kExitOk);
    const auto rows = read_csv_cells(dir / "delta_matrix.csv");
    CHECK(rows.size() == 4);
    const auto p = nlohmann::json::parse(read_file(dir / "collisions.json"));
    CHECK(p["estimates"].size() == 6);
  }
  SUBCASE("report") {
    const Result r = run_cli({"--config", conf, "report", "--plots"});
    REQUIRE(r.code == kExitOk);
    const auto report = nlohmann::json::parse(read_file(dir / "report.json"));
    REQUIRE(report["channels"].size() == 3);
    for (const auto &ch : report["channels"]) {
      CHECK(ch["K_M_normalized"].get<double>() ==
            doctest::Approx(ch["K_M"].get<double>() / ch["total_spend"].get<double>()).epsilon(1e-12));
      const int region = ch["region"].get<int>();
      CHECK(region >= 1);
      CHECK(region <= 3);
    }
    CHECK(read_csv_cells(dir / "economics.csv").size() == 4);
    for (const char *svg : {"response_fit.svg", "saturation_curves.svg", "km_normalized_vs_contribution.svg"}) {
      const std::string text = read_file(dir / "plots" / svg);
      CHECK(text.rfind("<svg", 0) == 0);
    }
  }
  SUBCASE("a modified dataset is an artifact mismatch") {
    TimeSeriesDataset ds = load_csv(dir / "dataset.csv");
    ds.response[0] += 1.0;
    write_csv(ds, dir / "changed.csv");
    for (const char *cmd : {"decompose", "funnel", "report"}) {
      const Result r = run_cli({"--config", conf, cmd, "--data", (dir / "changed.csv").string()});
      CHECK(r.code == kExitArtifactMismatch);
      CHECK(r.err.find("fingerprint") != std::string::npos);
    }
  }
}

TEST_CASE("funnel needs at least two channels") {
  const fs::path dir = fresh_dir("single");
  const std::string conf = write_config(dir, 1).string();
  REQUIRE(run_cli({"--config", conf, "generate"}).code == kExitOk);
  REQUIRE(run_cli({"--config", conf, "--quiet", "fit", "--allow-nonconverged"}).code == kExitOk);
  const Result r = run_cli({"--config", conf, "funnel"});
  CHECK(r.code == kExitConfig);
  CHECK(run_cli({"--config", conf, "fit", "--variant", "mm_boltzmann"}).code == kExitConfig);
}
