#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "clayid/errors.hpp"
#include "clayid/pipeline.hpp"
#include "test_support.hpp"

using namespace clayid;
using testsupport::fixtures_dir;
using testsupport::slurp;
using testsupport::temp_dir;

namespace {

/// Small configuration that keeps pipeline-level tests in seconds.
PipelineConfig fast_config(const std::filesystem::path& out) {
  PipelineConfig cfg = default_config();
  cfg.out_dir = out;
  cfg.fixtures_dir = fixtures_dir();
  cfg.train.epochs = 600;
  cfg.train_grid = false;
  cfg.fallback_hidden = {16};
  cfg.grid.levels = 25;
  cfg.select_cfg.top_k = 5;
  cfg.jobs = 2;
  return cfg;
}

}  // namespace

TEST_CASE("config serialization round-trips and hashes stably") {
  const PipelineConfig cfg = default_config();
  const std::string text = config_to_json(cfg);
  const PipelineConfig back = config_from_json(text);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(back.grid.levels == cfg.grid.levels);
  CHECK(back.refs == cfg.refs);
  CHECK(back.material.jc.B == cfg.material.jc.B);

  // Output locations do not participate in the fingerprint.
  PipelineConfig moved = cfg;
  moved.out_dir = "/somewhere/else";
  CHECK(config_hash(moved) == config_hash(cfg));

  PipelineConfig changed = cfg;
  changed.seed += 1;
  CHECK(config_hash(changed) != config_hash(cfg));
}

TEST_CASE("the bundled default config matches the built-in defaults") {
  const PipelineConfig built_in = default_config();
  const PipelineConfig bundled = load_config(CLAYID_CONFIGS_DIR "/default.json");
  CHECK(config_hash(bundled) == config_hash(built_in));
}

TEST_CASE("malformed configs are config errors") {
  CHECK_THROWS_AS(config_from_json("{not json"), ConfigError);
  CHECK_THROWS_AS(config_from_json("{\"format\":\"other\",\"version\":1}"),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

  PipelineConfig cfg = default_config();
  cfg.refs[1] = -5.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("cmd_simulate writes a result, a series and a manifest") {
  const auto out = temp_dir("simulate");
  PipelineConfig cfg = fast_config(out);
  cmd_simulate(cfg, 2);

  CHECK(std::filesystem::exists(out / "simulate_case2.json"));
  CHECK(std::filesystem::exists(out / "simulate_case2_series.csv"));
  CHECK(std::filesystem::exists(out / "simulate_case2.manifest.json"));

  const std::string result = slurp(out / "simulate_case2.json");
  CHECK(result.find("\"config_hash\"") != std::string::npos);
  CHECK(result.find(config_hash(cfg)) != std::string::npos);

  CHECK_THROWS_AS(cmd_simulate(cfg, 9), ConfigError);
}

TEST_CASE("cmd_doe then cmd_screen replays the published selection") {
  const auto out = temp_dir("doe_screen");
  PipelineConfig cfg = fast_config(out);

  cmd_doe(cfg, "oat");
  CHECK(std::filesystem::exists(out / "doe_oat.csv"));
  CHECK(std::filesystem::exists(out / "doe_oat_runs.csv"));

  cmd_screen(cfg, out / "doe_oat.csv");
  const std::string report = slurp(out / "screening.json");
  CHECK(report.find("\"selected\"") != std::string::npos);

  // The bundled fixture screens to the same selection.
  cmd_screen(cfg, fixtures_dir() / "table_a1.csv");
  const std::string fixture_report = slurp(out / "screening.json");
  const auto pos = fixture_report.find("\"selected\"");
  CHECK(fixture_report.substr(pos, 60).find("\"B\"") != std::string::npos);

  CHECK_THROWS_AS(cmd_doe(cfg, "latin"), ConfigError);
}

TEST_CASE("stages refuse inputs produced under a different config") {
  const auto out = temp_dir("mixed_hash");
  PipelineConfig cfg = fast_config(out);
  cmd_doe(cfg, "factorial");

  PipelineConfig other = cfg;
  other.seed += 99;
  CHECK_THROWS_AS(cmd_train(other, out / "doe_factorial.csv"), ConfigError);

  // Same config accepts its own outputs.
  PipelineConfig same = cfg;
  same.train.epochs = cfg.train.epochs;  // unchanged; hash equal
  cmd_train(same, out / "doe_factorial.csv");
  CHECK(std::filesystem::exists(out / "model_case1.json"));
  CHECK(std::filesystem::exists(out / "model_case3.json"));
  CHECK(std::filesystem::exists(out / "history_case2.csv"));
  CHECK(std::filesystem::exists(out / "train_metrics.json"));
}

TEST_CASE("a failing stage commits nothing") {
  const auto out = temp_dir("fail_stage");
  PipelineConfig cfg = fast_config(out);

  // Two-row dataset: screening requires at least three rows.
  SampleSet tiny = load_fixture("table_a1", cfg.fixtures_dir);
  tiny.rows.resize(2);
  std::filesystem::create_directories(out);
  save_sample_set(tiny, out / "tiny.csv");

  CHECK_THROWS_AS(cmd_screen(cfg, out / "tiny.csv"), StageError);
  CHECK_FALSE(std::filesystem::exists(out / "screening.json"));
  CHECK_FALSE(std::filesystem::exists(out / "screening.csv"));
  // Any debris a failed stage leaves must carry the .partial suffix.
  for (const auto& entry : std::filesystem::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("screening")) {
      CHECK(name.ends_with(".partial"));
    }
  }
}

TEST_CASE("cmd_pipeline chains every stage and improves on the baseline") {
  const auto out = temp_dir("pipeline");
  PipelineConfig cfg = fast_config(out);

  std::ostringstream summary;
  cmd_pipeline(cfg, summary);

  for (const char* name :
       {"doe_oat.csv", "screening.json", "doe_factorial.csv", "model_case1.json",
        "model_case2.json", "model_case3.json", "inverse.json",
        "inverse_common.csv", "validation.json", "summary.json"}) {
    CHECK(std::filesystem::exists(out / name));
  }
  const std::string text = summary.str();
  CHECK(text.find("optimal (B, n, C)") != std::string::npos);
  CHECK(text.find("mean relative error") != std::string::npos);

  const std::string summary_json = slurp(out / "summary.json");
  CHECK(summary_json.find("\"optimal\"") != std::string::npos);
  CHECK(summary_json.find("\"baseline_mean_rel_err\"") != std::string::npos);
}

TEST_CASE("two identical pipeline runs produce byte-identical results") {
  const auto out1 = temp_dir("det1");
  const auto out2 = temp_dir("det2");
  PipelineConfig cfg1 = fast_config(out1);
  PipelineConfig cfg2 = fast_config(out2);

  std::ostringstream s1, s2;
  cmd_pipeline(cfg1, s1);
  cmd_pipeline(cfg2, s2);
  CHECK(s1.str() == s2.str());

  std::set<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(out1)) {
    names.insert(entry.path().filename().string());
  }
  REQUIRE_FALSE(names.empty());
  for (const std::string& name : names) {
    if (name.find(".manifest.json") != std::string::npos) continue;
    CAPTURE(name);
    CHECK(slurp(out1 / name) == slurp(out2 / name));
  }
}

TEST_CASE("cmd_invert and cmd_validate run from persisted stage outputs") {
  const auto out = temp_dir("invert_validate");
  PipelineConfig cfg = fast_config(out);

  cmd_doe(cfg, "factorial");
  cmd_train(cfg, out / "doe_factorial.csv");
  cmd_invert(cfg, out);
  CHECK(std::filesystem::exists(out / "inverse.json"));
  CHECK(std::filesystem::exists(out / "inverse_common.csv"));

  cmd_validate(cfg, out / "inverse.json");
  CHECK(std::filesystem::exists(out / "validation.json"));

  const std::string validation = slurp(out / "validation.json");
  CHECK(validation.find("\"optimal\"") != std::string::npos);
  CHECK(validation.find("\"baseline\"") != std::string::npos);

  // Inverse results from another configuration are refused.
  PipelineConfig other = cfg;
  other.seed += 1;
  CHECK_THROWS_AS(cmd_validate(other, out / "inverse.json"), ConfigError);
}

TEST_CASE("cmd_ablate writes the study report") {
  const auto out = temp_dir("ablate");
  PipelineConfig cfg = fast_config(out);
  cfg.ablation_cfg.fractions = {1.0, 0.5};
  cfg.ablation_cfg.repeats = 1;
  cfg.ablation_cfg.epochs = 250;
  cfg.ablation_cfg.grid_levels = 10;

  cmd_doe(cfg, "factorial");
  cmd_ablate(cfg, out / "doe_factorial.csv");
  CHECK(std::filesystem::exists(out / "ablation.json"));
  CHECK(std::filesystem::exists(out / "ablation.csv"));
  const std::string report = slurp(out / "ablation.json");
  CHECK(report.find("\"mean_accuracy\"") != std::string::npos);
}

TEST_CASE("the CLI binary maps error classes to exit codes") {
  const std::string cli = CLAYID_CLI_PATH;
  const auto out = temp_dir("cli_exit");

  const int ok = std::system(
      (cli + " config --emit " + (out / "cfg.json").string() + " >/dev/null 2>&1")
          .c_str());
  CHECK(WEXITSTATUS(ok) == 0);

  const int config_error = std::system(
      (cli + " --config /nonexistent.json pipeline >/dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(config_error) == 2);

  const int stage_error = std::system(
      (cli + " --out " + out.string() + " screen --dataset /nonexistent.csv" +
       " >/dev/null 2>&1")
          .c_str());
  CHECK(WEXITSTATUS(stage_error) == 3);
}
