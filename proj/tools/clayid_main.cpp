// clayid: inverse identification of Johnson-Cook parameters for ballistic
// clay from drop-impact indentation depths, via a trained surrogate and an
// exhaustive candidate grid search.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "clayid/errors.hpp"
#include "clayid/pipeline.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir;
  std::string fixtures_dir;
  std::int64_t seed = -1;
  int jobs = -1;
};

clayid::PipelineConfig resolve_config(const GlobalOptions& opts) {
  clayid::PipelineConfig cfg = opts.config_path.empty()
                                   ? clayid::default_config()
                                   : clayid::load_config(opts.config_path);
  if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
  if (opts.jobs >= 0) cfg.jobs = opts.jobs;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (!opts.fixtures_dir.empty()) cfg.fixtures_dir = opts.fixtures_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Johnson-Cook parameter identification for ballistic clay"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "Pipeline configuration (JSON)");
  app.add_option("--seed", opts.seed, "Override the configured seed");
  app.add_option("--jobs", opts.jobs, "Worker cap (0 = hardware concurrency)");
  app.add_option("--out", opts.out_dir, "Override the output directory");
  app.add_option("--fixtures", opts.fixtures_dir, "Override the fixtures directory");

  int sim_case = 1;
  auto* simulate = app.add_subcommand("simulate", "Run one forward drop-impact case");
  simulate->add_option("--case", sim_case, "Impact case id")->required();

  std::string design;
  auto* doe = app.add_subcommand("doe", "Generate a design and simulate it");
  doe->add_option("--design", design, "oat | factorial")->required();

  std::string dataset;
  auto* screen = app.add_subcommand("screen", "Correlation screening of a dataset");
  screen->add_option("--dataset", dataset, "Sample set CSV")->required();

  std::string train_dataset;
  auto* train = app.add_subcommand("train", "Train the per-case surrogates");
  train->add_option("--dataset", train_dataset, "Sample set CSV")->required();

  std::string models_dir;
  auto* invert = app.add_subcommand("invert", "Grid search through the surrogates");
  invert->add_option("--models", models_dir, "Directory with model_case{1,2,3}.json")
      ->required();

  std::string inverse_json;
  auto* validate = app.add_subcommand("validate", "Re-check top sets with the solver");
  validate->add_option("--result", inverse_json, "inverse.json path")->required();

  std::string ablate_dataset;
  auto* ablate = app.add_subcommand("ablate", "Reduced-training-set study");
  ablate->add_option("--dataset", ablate_dataset, "Sample set CSV")->required();

  auto* pipeline = app.add_subcommand("pipeline", "Run the whole identification chain");

  auto* calibrate =
      app.add_subcommand("calibrate", "Re-derive the lumped solver constants");

  std::string emit_path;
  auto* config_cmd = app.add_subcommand("config", "Write the default configuration");
  config_cmd->add_option("--emit", emit_path, "Destination path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const clayid::PipelineConfig cfg = resolve_config(opts);
    if (simulate->parsed()) {
      clayid::cmd_simulate(cfg, sim_case);
    } else if (doe->parsed()) {
      clayid::cmd_doe(cfg, design);
    } else if (screen->parsed()) {
      clayid::cmd_screen(cfg, dataset);
    } else if (train->parsed()) {
      clayid::cmd_train(cfg, train_dataset);
    } else if (invert->parsed()) {
      clayid::cmd_invert(cfg, models_dir);
    } else if (validate->parsed()) {
      clayid::cmd_validate(cfg, inverse_json);
    } else if (ablate->parsed()) {
      clayid::cmd_ablate(cfg, ablate_dataset);
    } else if (pipeline->parsed()) {
      clayid::cmd_pipeline(cfg, std::cout);
    } else if (calibrate->parsed()) {
      clayid::cmd_calibrate(cfg, std::cout);
    } else if (config_cmd->parsed()) {
      clayid::save_config(cfg, emit_path);
    }
  } catch (const clayid::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const clayid::StageError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
