#include "clayid/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clayid/correlation.hpp"
#include "clayid/csv.hpp"
#include "clayid/errors.hpp"
#include "clayid/rng.hpp"

namespace clayid {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------
// Configuration

json case_to_json(const ImpactCase& c) {
  return {{"id", c.id},
          {"diameter_mm", c.diameter_mm},
          {"mass_g", c.mass_g},
          {"v0_m_s", c.v0},
          {"ref_depth_mm", c.ref_depth_mm},
          {"ref_tol_mm", c.ref_tol_mm}};
}

ImpactCase case_from_json(const json& j) {
  ImpactCase c;
  c.id = j.at("id").get<int>();
  c.diameter_mm = j.at("diameter_mm").get<double>();
  c.mass_g = j.at("mass_g").get<double>();
  c.v0 = j.at("v0_m_s").get<double>();
  c.ref_depth_mm = j.at("ref_depth_mm").get<double>();
  c.ref_tol_mm = j.value("ref_tol_mm", 0.0);
  return c;
}

json material_to_json(const MaterialParams& p) {
  return {{"a1_gpa", p.eos.A1},   {"a2_gpa", p.eos.A2},
          {"a3_gpa", p.eos.A3},   {"b0", p.eos.B0},
          {"b1", p.eos.B1},       {"rho0_kgm3", p.eos.rho0},
          {"a_kpa", p.jc.A},      {"b_kpa", p.jc.B},
          {"n", p.jc.n},          {"c", p.jc.C},
          {"m", p.jc.m},          {"eps_dot_ref_s", p.jc.eps_dot_ref},
          {"ise", p.ise},         {"t0_k", p.jc.T0},
          {"tm_k", p.jc.Tm}};
}

MaterialParams material_from_json(const json& j) {
  MaterialParams p;
  p.eos.A1 = j.at("a1_gpa").get<double>();
  p.eos.A2 = j.at("a2_gpa").get<double>();
  p.eos.A3 = j.at("a3_gpa").get<double>();
  p.eos.B0 = j.at("b0").get<double>();
  p.eos.B1 = j.at("b1").get<double>();
  p.eos.rho0 = j.at("rho0_kgm3").get<double>();
  p.jc.A = j.at("a_kpa").get<double>();
  p.jc.B = j.at("b_kpa").get<double>();
  p.jc.n = j.at("n").get<double>();
  p.jc.C = j.at("c").get<double>();
  p.jc.m = j.at("m").get<double>();
  p.jc.eps_dot_ref = j.at("eps_dot_ref_s").get<double>();
  p.ise = j.at("ise").get<double>();
  p.jc.T0 = j.value("t0_k", p.jc.T0);
  p.jc.Tm = j.value("tm_k", p.jc.Tm);
  return p;
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    material.validate();
    solver.validate();
    train.validate();
    grid.validate();
    if (cases.empty()) throw InvalidParameterError("config: no impact cases");
    for (const ImpactCase& c : cases) c.validate();
    for (double r : refs) {
      if (!(r > 0.0)) throw InvalidParameterError("config: refs must be > 0");
    }
    if (!(screen_threshold > 0.0 && screen_threshold < 1.0)) {
      throw InvalidParameterError("config: screen threshold must be in (0, 1)");
    }
    for (int w : fallback_hidden) {
      if (w < 1) throw InvalidParameterError("config: hidden width must be >= 1");
    }
    if (ablation_cfg.repeats < 1 || ablation_cfg.epochs < 1 ||
        ablation_cfg.grid_levels < 2) {
      throw InvalidParameterError("config: bad ablation settings");
    }
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

PipelineConfig default_config() {
  PipelineConfig cfg;
  const auto cases = standard_cases();
  cfg.cases.assign(cases.begin(), cases.end());
  cfg.material = MaterialParams::rp_clay_defaults();
  return cfg;
}

std::string config_to_json(const PipelineConfig& cfg) {
  json j;
  j["format"] = "clayid-config";
  j["version"] = 1;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["paths"] = {{"fixtures", cfg.fixtures_dir.generic_string()},
                {"out", cfg.out_dir.generic_string()}};
  json cases = json::array();
  for (const ImpactCase& c : cfg.cases) cases.push_back(case_to_json(c));
  j["cases"] = cases;
  j["material"] = material_to_json(cfg.material);
  j["solver"] = {{"dt_s", cfg.solver.dt},
                 {"t_max_s", cfg.solver.t_max},
                 {"strain_shape_k", cfg.solver.strain_shape_k},
                 {"inertia_coeff", cfg.solver.inertia_coeff},
                 {"constraint_factor", cfg.solver.constraint_factor},
                 {"eos_confinement", cfg.solver.eos_confinement},
                 {"eos_mu_coeff", cfg.solver.eos_mu_coeff},
                 {"stop_velocity_m_s", cfg.solver.stop_velocity}};
  j["screen"] = {{"threshold", cfg.screen_threshold}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"split", cfg.train.split},
                {"lr", cfg.train.lr},
                {"adam_beta1", cfg.train.adam_beta1},
                {"adam_beta2", cfg.train.adam_beta2},
                {"adam_eps", cfg.train.adam_eps},
                {"batch", cfg.train.batch},
                {"early_stop", cfg.train.early_stop},
                {"early_stop_delta", cfg.train.early_stop_delta},
                {"early_stop_window", cfg.train.early_stop_window},
                {"grid", cfg.train_grid},
                {"fallback_hidden", cfg.fallback_hidden}};
  j["grid"] = {{"mins", cfg.grid.mins},
               {"maxs", cfg.grid.maxs},
               {"levels", cfg.grid.levels},
               {"cap", cfg.grid.cap}};
  j["refs_mm"] = cfg.refs;
  j["select"] = {{"per_case_cap", cfg.select_cfg.per_case_cap},
                 {"common_cap", cfg.select_cfg.common_cap},
                 {"top_k", cfg.select_cfg.top_k},
                 {"absolute_mm", cfg.select_cfg.absolute_mm}};
  j["ablation"] = {{"fractions", cfg.ablation_cfg.fractions},
                   {"repeats", cfg.ablation_cfg.repeats},
                   {"epochs", cfg.ablation_cfg.epochs},
                   {"grid_levels", cfg.ablation_cfg.grid_levels}};
  return j.dump(2) + "\n";
}

PipelineConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  try {
    if (j.value("format", "") != "clayid-config" || j.value("version", 0) != 1) {
      throw ConfigError("config: field 'format'/'version' mismatch");
    }
    PipelineConfig cfg = default_config();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.jobs = j.value("jobs", cfg.jobs);
    if (j.contains("paths")) {
      cfg.fixtures_dir = j["paths"].value("fixtures", cfg.fixtures_dir.string());
      cfg.out_dir = j["paths"].value("out", cfg.out_dir.string());
    }
    if (j.contains("cases")) {
      cfg.cases.clear();
      for (const auto& c : j["cases"]) cfg.cases.push_back(case_from_json(c));
    }
    if (j.contains("material")) cfg.material = material_from_json(j["material"]);
    if (j.contains("solver")) {
      const json& s = j["solver"];
      cfg.solver.dt = s.value("dt_s", cfg.solver.dt);
      cfg.solver.t_max = s.value("t_max_s", cfg.solver.t_max);
      cfg.solver.strain_shape_k =
          s.value("strain_shape_k", cfg.solver.strain_shape_k);
      cfg.solver.inertia_coeff = s.value("inertia_coeff", cfg.solver.inertia_coeff);
      cfg.solver.constraint_factor =
          s.value("constraint_factor", cfg.solver.constraint_factor);
      cfg.solver.eos_confinement =
          s.value("eos_confinement", cfg.solver.eos_confinement);
      cfg.solver.eos_mu_coeff = s.value("eos_mu_coeff", cfg.solver.eos_mu_coeff);
      cfg.solver.stop_velocity =
          s.value("stop_velocity_m_s", cfg.solver.stop_velocity);
    }
    if (j.contains("screen")) {
      cfg.screen_threshold = j["screen"].value("threshold", cfg.screen_threshold);
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      cfg.train.epochs = t.value("epochs", cfg.train.epochs);
      cfg.train.split = t.value("split", cfg.train.split);
      cfg.train.lr = t.value("lr", cfg.train.lr);
      cfg.train.adam_beta1 = t.value("adam_beta1", cfg.train.adam_beta1);
      cfg.train.adam_beta2 = t.value("adam_beta2", cfg.train.adam_beta2);
      cfg.train.adam_eps = t.value("adam_eps", cfg.train.adam_eps);
      cfg.train.batch = t.value("batch", cfg.train.batch);
      cfg.train.early_stop = t.value("early_stop", cfg.train.early_stop);
      cfg.train.early_stop_delta =
          t.value("early_stop_delta", cfg.train.early_stop_delta);
      cfg.train.early_stop_window =
          t.value("early_stop_window", cfg.train.early_stop_window);
      cfg.train_grid = t.value("grid", cfg.train_grid);
      if (t.contains("fallback_hidden")) {
        cfg.fallback_hidden = t["fallback_hidden"].get<std::vector<int>>();
      }
    }
    if (j.contains("grid")) {
      const json& g = j["grid"];
      if (g.contains("mins")) cfg.grid.mins = g["mins"].get<std::array<double, 3>>();
      if (g.contains("maxs")) cfg.grid.maxs = g["maxs"].get<std::array<double, 3>>();
      cfg.grid.levels = g.value("levels", cfg.grid.levels);
      cfg.grid.cap = g.value("cap", cfg.grid.cap);
    }
    if (j.contains("refs_mm")) cfg.refs = j["refs_mm"].get<std::array<double, 3>>();
    if (j.contains("select")) {
      const json& s = j["select"];
      cfg.select_cfg.per_case_cap =
          s.value("per_case_cap", cfg.select_cfg.per_case_cap);
      cfg.select_cfg.common_cap = s.value("common_cap", cfg.select_cfg.common_cap);
      cfg.select_cfg.top_k = s.value("top_k", cfg.select_cfg.top_k);
      cfg.select_cfg.absolute_mm =
          s.value("absolute_mm", cfg.select_cfg.absolute_mm);
    }
    if (j.contains("ablation")) {
      const json& a = j["ablation"];
      if (a.contains("fractions")) {
        cfg.ablation_cfg.fractions = a["fractions"].get<std::vector<double>>();
      }
      cfg.ablation_cfg.repeats = a.value("repeats", cfg.ablation_cfg.repeats);
      cfg.ablation_cfg.epochs = a.value("epochs", cfg.ablation_cfg.epochs);
      cfg.ablation_cfg.grid_levels =
          a.value("grid_levels", cfg.ablation_cfg.grid_levels);
    }
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void save_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write config '" + path.string() + "'");
  out << config_to_json(cfg);
}

std::string config_hash(const PipelineConfig& cfg) {
  // Canonical form excludes the output/fixture paths: moving results to
  // another directory must not invalidate them.
  PipelineConfig canon = cfg;
  canon.out_dir.clear();
  canon.fixtures_dir.clear();
  const std::string dump = config_to_json(canon);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char byte : dump) {
    h ^= byte;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------
// Stage plumbing: atomic output files and manifests.

namespace {

/// Writes to <path>.partial and renames on commit; an uncommitted
/// (failed) stage leaves the .partial file behind for inspection.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path)
      : final_(std::move(path)), partial_(final_.string() + ".partial") {}

  void write(const std::string& content) {
    std::ofstream out(partial_, std::ios::binary);
    if (!out) throw StageError("io", "cannot write '" + partial_.string() + "'");
    out << content;
  }

  void commit() {
    std::filesystem::rename(partial_, final_);
    committed_ = true;
  }

  const std::filesystem::path& path() const { return final_; }
  bool committed() const { return committed_; }

 private:
  std::filesystem::path final_;
  std::filesystem::path partial_;
  bool committed_ = false;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Stage {
 public:
  Stage(const PipelineConfig& cfg, std::string name)
      : cfg_(cfg), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {
    std::filesystem::create_directories(cfg.out_dir);
  }

  const std::string& name() const { return name_; }

  std::filesystem::path out(const std::string& filename) const {
    return cfg_.out_dir / filename;
  }

  void add_input(const std::filesystem::path& path) {
    inputs_.push_back(path.generic_string());
  }

  /// Commits one output file and records it in the manifest.
  void emit(AtomicFile& file) {
    file.commit();
    outputs_.push_back(file.path().filename().generic_string());
  }

  void write_manifest() {
    json j;
    j["format"] = "clayid-manifest";
    j["version"] = 1;
    j["stage"] = name_;
    j["config_hash"] = config_hash(cfg_);
    j["seed"] = cfg_.seed;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["started_utc"] = started_;
    j["wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start_)
                       .count();
    std::ofstream file(out(name_ + ".manifest.json"), std::ios::binary);
    file << j.dump(2) << '\n';
  }

 private:
  const PipelineConfig& cfg_;
  std::string name_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::string started_ = utc_now();
  std::chrono::steady_clock::time_point start_;
};

/// Looks for a stage manifest in `dir` that lists `filename` among its
/// outputs and returns that stage's config hash.
std::string producing_hash(const std::filesystem::path& dir,
                           const std::string& filename) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) return {};
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() < 14 || name.substr(name.size() - 14) != ".manifest.json") {
      continue;
    }
    std::ifstream in(entry.path());
    if (!in) continue;
    json j;
    try {
      in >> j;
    } catch (const json::exception&) {
      continue;
    }
    for (const auto& out : j.value("outputs", json::array())) {
      if (out.get<std::string>() == filename) {
        return j.value("config_hash", "");
      }
    }
  }
  return {};
}

/// Refuses inputs produced under a different configuration. Files with
/// no discoverable provenance (user-supplied data) are accepted.
void require_same_config(const PipelineConfig& cfg,
                         const std::filesystem::path& input) {
  const std::string hash =
      producing_hash(input.parent_path(), input.filename().string());
  if (!hash.empty() && hash != config_hash(cfg)) {
    throw ConfigError("input '" + input.string() +
                      "' was produced under config " + hash +
                      ", current config is " + config_hash(cfg));
  }
}

/// Same check for JSON files that embed their config hash directly.
void require_same_embedded_config(const PipelineConfig& cfg,
                                  const std::filesystem::path& input) {
  std::ifstream in(input);
  if (!in) return;
  json j;
  try {
    in >> j;
  } catch (const json::exception&) {
    return;
  }
  const std::string hash = j.value("config_hash", "");
  if (!hash.empty() && hash != config_hash(cfg)) {
    throw ConfigError("input '" + input.string() +
                      "' was produced under config " + hash +
                      ", current config is " + config_hash(cfg));
  }
}

template <typename Fn>
void run_stage(const char* name, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string model_display_name(int case_id, const std::vector<int>& hidden) {
  const char letter = static_cast<char>('A' + (case_id - 1));
  for (const auto& [name, arch] : standard_architectures(case_id)) {
    std::vector<int> widths;
    for (std::size_t i = 0; i + 1 < arch.size(); ++i) widths.push_back(arch[i].width);
    if (widths == hidden) return name;
  }
  std::string name{letter};
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    name += (i == 0 ? "-" : "x") + std::to_string(hidden[i]);
  }
  return name;
}

std::vector<LayerSpec> arch_from_hidden(const std::vector<int>& hidden) {
  std::vector<LayerSpec> arch;
  for (int w : hidden) arch.push_back({w, Activation::relu});
  arch.push_back({1, Activation::linear});
  return arch;
}

json metrics_to_json(const FitMetrics& m) {
  return {{"mse", m.mse}, {"rmse", m.rmse}, {"r2", m.r2}};
}

// Shared by cmd_train and cmd_pipeline.
struct TrainedModels {
  std::array<TrainOutput, 3> per_case;
  std::vector<ArchitectureEntry> grid_entries;  // empty when grid off
};

TrainedModels train_models(const PipelineConfig& cfg, const SampleSet& data) {
  TrainedModels result;
  std::map<int, CaseData> per_case;
  for (int c = 1; c <= 3; ++c) per_case[c] = case_data(data, c);

  if (cfg.train_grid) {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    ArchitectureGridResult grid = run_architecture_grid(per_case, tc, cfg.jobs);
    result.grid_entries = std::move(grid.entries);
    for (int c = 1; c <= 3; ++c) {
      result.per_case[c - 1] = std::move(grid.best_per_case.at(c));
    }
  } else {
    const std::vector<LayerSpec> arch = arch_from_hidden(cfg.fallback_hidden);
    for (int c = 1; c <= 3; ++c) {
      TrainConfig tc = cfg.train;
      tc.seed = derive_seed(cfg.seed, 100 + c);
      result.per_case[c - 1] = train(per_case[c], arch, tc);
      result.per_case[c - 1].model.name =
          model_display_name(c, cfg.fallback_hidden);
    }
  }
  return result;
}

void write_models(const PipelineConfig& cfg, Stage& stage,
                  const TrainedModels& models) {
  const std::string hash = config_hash(cfg);
  for (int c = 1; c <= 3; ++c) {
    const TrainOutput& out = models.per_case[c - 1];
    AtomicFile model_file(stage.out("model_case" + std::to_string(c) + ".json"));
    model_file.write(model_to_json(out.model, hash));
    stage.emit(model_file);

    std::ostringstream history;
    write_history_csv(history, out.history);
    AtomicFile history_file(
        stage.out("history_case" + std::to_string(c) + ".csv"));
    history_file.write(history.str());
    stage.emit(history_file);
  }

  json metrics_json;
  metrics_json["format"] = "clayid-train-metrics";
  metrics_json["version"] = 1;
  metrics_json["config_hash"] = hash;
  json cases = json::array();
  for (int c = 1; c <= 3; ++c) {
    const TrainOutput& out = models.per_case[c - 1];
    cases.push_back({{"case", c},
                     {"name", out.model.name},
                     {"epochs_run", out.epochs_run},
                     {"train", metrics_to_json(out.train)},
                     {"validation", metrics_to_json(out.validation)}});
  }
  metrics_json["models"] = cases;
  AtomicFile metrics_file(stage.out("train_metrics.json"));
  metrics_file.write(metrics_json.dump(2) + "\n");
  stage.emit(metrics_file);

  if (!models.grid_entries.empty()) {
    csv::Table table;
    table.header = {"case", "name", "train_mse", "train_rmse", "train_r2",
                    "val_mse", "val_rmse", "val_r2"};
    char buf[64];
    auto num = [&buf](double v) {
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      return std::string(buf);
    };
    for (const ArchitectureEntry& e : models.grid_entries) {
      table.rows.push_back({std::to_string(e.case_id), e.name, num(e.train.mse),
                            num(e.train.rmse), num(e.train.r2),
                            num(e.validation.mse), num(e.validation.rmse),
                            num(e.validation.r2)});
    }
    AtomicFile grid_file(stage.out("architecture_grid.csv"));
    grid_file.write(csv::to_string(table));
    stage.emit(grid_file);
  }
}

SampleSet run_doe(const PipelineConfig& cfg, const std::string& design,
                  Stage& stage) {
  std::vector<MaterialParams> mats;
  Provenance provenance;
  if (design == "oat") {
    mats = gen_oat_design(cfg.material);
    provenance = Provenance::generated_oat;
  } else if (design == "factorial") {
    mats = gen_factorial_design(cfg.material);
    provenance = Provenance::generated_factorial;
  } else {
    throw ConfigError("unknown design '" + design + "' (expected oat|factorial)");
  }

  const std::vector<BatchRun> runs =
      simulate_batch(cfg.cases, mats, cfg.solver, cfg.jobs);
  for (const BatchRun& run : runs) {
    if (!run.ok()) {
      throw StageError("doe_" + design,
                       "run " + std::to_string(run.mat_index + 1) + " case " +
                           std::to_string(cfg.cases[run.case_index].id) + ": " +
                           run.error);
    }
  }

  const SampleSet set =
      sample_set_from_batch(cfg.cases, mats, runs, provenance);

  AtomicFile dataset_file(stage.out("doe_" + design + ".csv"));
  dataset_file.write(sample_set_to_csv(set));
  stage.emit(dataset_file);

  std::ostringstream batch_csv;
  write_batch_csv(batch_csv, cfg.cases, mats, runs);
  AtomicFile runs_file(stage.out("doe_" + design + "_runs.csv"));
  runs_file.write(batch_csv.str());
  stage.emit(runs_file);
  return set;
}

ScreeningReport run_screen(const PipelineConfig& cfg, const SampleSet& set,
                           Stage& stage) {
  const ScreeningReport report = screen(set, cfg.screen_threshold);

  std::ostringstream js;
  write_screening_json(js, report, config_hash(cfg));
  AtomicFile json_file(stage.out("screening.json"));
  json_file.write(js.str());
  stage.emit(json_file);

  std::ostringstream cs;
  write_screening_csv(cs, report);
  AtomicFile csv_file(stage.out("screening.csv"));
  csv_file.write(cs.str());
  stage.emit(csv_file);
  return report;
}

InverseResult run_invert(const PipelineConfig& cfg,
                         const std::array<const MlpModel*, 3>& models,
                         Stage& stage) {
  SweepConfig sweep_cfg;
  sweep_cfg.jobs = cfg.jobs;
  const InverseResult result =
      run_inverse(models, cfg.grid, cfg.refs, cfg.select_cfg, sweep_cfg);

  std::ostringstream js;
  write_inverse_json(js, result, config_hash(cfg));
  AtomicFile json_file(stage.out("inverse.json"));
  json_file.write(js.str());
  stage.emit(json_file);

  std::ostringstream cs;
  write_common_csv(cs, result);
  AtomicFile csv_file(stage.out("inverse_common.csv"));
  csv_file.write(cs.str());
  stage.emit(csv_file);
  return result;
}

ValidationReport run_validate(const PipelineConfig& cfg,
                              const InverseResult& inverse, Stage& stage) {
  const ValidationReport report =
      validate(inverse, cfg.cases, cfg.material, cfg.solver, cfg.jobs);

  std::ostringstream js;
  write_validation_json(js, report, inverse.refs, config_hash(cfg));
  AtomicFile json_file(stage.out("validation.json"));
  json_file.write(js.str());
  stage.emit(json_file);
  return report;
}

}  // namespace

// ---------------------------------------------------------------------
// Commands

void cmd_simulate(const PipelineConfig& cfg, int case_id) {
  cfg.validate();
  run_stage("simulate", [&] {
    const ImpactCase* impact = nullptr;
    for (const ImpactCase& c : cfg.cases) {
      if (c.id == case_id) impact = &c;
    }
    if (impact == nullptr) {
      throw ConfigError("case " + std::to_string(case_id) + " not in config");
    }

    Stage stage(cfg, "simulate_case" + std::to_string(case_id));
    const SimResult result = simulate(*impact, cfg.material, cfg.solver);

    csv::Table series;
    series.header = {"t_s", "displacement_m", "velocity_m_s", "force_n"};
    char buf[64];
    auto num = [&buf](double v) {
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      return std::string(buf);
    };
    for (const TimeSample& s : result.series) {
      series.rows.push_back({num(s.t), num(s.displacement), num(s.velocity),
                             num(s.force)});
    }
    const std::string series_name =
        "simulate_case" + std::to_string(case_id) + "_series.csv";
    AtomicFile series_file(stage.out(series_name));
    series_file.write(csv::to_string(series));
    stage.emit(series_file);

    json j;
    j["format"] = "clayid-simulate";
    j["version"] = 1;
    j["config_hash"] = config_hash(cfg);
    j["case"] = case_id;
    j["depth_mm"] = result.depth_mm;
    j["eroded"] = result.eroded;
    j["series_file"] = series_name;
    AtomicFile result_file(
        stage.out("simulate_case" + std::to_string(case_id) + ".json"));
    result_file.write(j.dump(2) + "\n");
    stage.emit(result_file);
    stage.write_manifest();
  });
}

void cmd_doe(const PipelineConfig& cfg, const std::string& design) {
  cfg.validate();
  if (design != "oat" && design != "factorial") {
    throw ConfigError("unknown design '" + design + "' (expected oat|factorial)");
  }
  run_stage(("doe_" + design).c_str(), [&] {
    Stage stage(cfg, "doe_" + design);
    run_doe(cfg, design, stage);
    stage.write_manifest();
  });
}

void cmd_screen(const PipelineConfig& cfg, const std::filesystem::path& dataset) {
  cfg.validate();
  require_same_config(cfg, dataset);
  run_stage("screen", [&] {
    Stage stage(cfg, "screen");
    stage.add_input(dataset);
    const SampleSet set = load_sample_set(dataset, Provenance::generated_oat);
    run_screen(cfg, set, stage);
    stage.write_manifest();
  });
}

void cmd_train(const PipelineConfig& cfg, const std::filesystem::path& dataset) {
  cfg.validate();
  require_same_config(cfg, dataset);
  run_stage("train", [&] {
    Stage stage(cfg, "train");
    stage.add_input(dataset);
    const SampleSet set =
        load_sample_set(dataset, Provenance::generated_factorial);
    const TrainedModels models = train_models(cfg, set);
    write_models(cfg, stage, models);
    stage.write_manifest();
  });
}

void cmd_invert(const PipelineConfig& cfg,
                const std::filesystem::path& models_dir) {
  cfg.validate();
  run_stage("invert", [&] {
    Stage stage(cfg, "invert");
    std::array<MlpModel, 3> models;
    for (int c = 1; c <= 3; ++c) {
      const auto path = models_dir / ("model_case" + std::to_string(c) + ".json");
      require_same_embedded_config(cfg, path);
      stage.add_input(path);
      models[c - 1] = load_model_json(path);
    }
    run_invert(cfg, {&models[0], &models[1], &models[2]}, stage);
    stage.write_manifest();
  });
}

void cmd_validate(const PipelineConfig& cfg,
                  const std::filesystem::path& inverse_json) {
  cfg.validate();
  require_same_embedded_config(cfg, inverse_json);
  run_stage("validate", [&] {
    Stage stage(cfg, "validate");
    stage.add_input(inverse_json);
    const InverseResult inverse = read_inverse_json(inverse_json);
    run_validate(cfg, inverse, stage);
    stage.write_manifest();
  });
}

void cmd_ablate(const PipelineConfig& cfg, const std::filesystem::path& dataset) {
  cfg.validate();
  require_same_config(cfg, dataset);
  run_stage("ablate", [&] {
    Stage stage(cfg, "ablate");
    stage.add_input(dataset);
    const SampleSet set =
        load_sample_set(dataset, Provenance::generated_factorial);

    AblationConfig ab;
    ab.fractions = cfg.ablation_cfg.fractions;
    ab.repeats = cfg.ablation_cfg.repeats;
    ab.seed = cfg.seed;
    ab.train = cfg.train;
    ab.train.epochs = cfg.ablation_cfg.epochs;
    const std::vector<LayerSpec> arch = arch_from_hidden(cfg.fallback_hidden);
    ab.archs = {arch, arch, arch};
    ab.grid = cfg.grid;
    ab.grid.levels = cfg.ablation_cfg.grid_levels;
    ab.select_cfg = cfg.select_cfg;
    ab.sweep_cfg.jobs = cfg.jobs;

    const AblationReport report =
        ablation(set, cfg.cases, cfg.material, cfg.solver, cfg.refs, ab);

    std::ostringstream js;
    write_ablation_json(js, report, config_hash(cfg));
    AtomicFile json_file(stage.out("ablation.json"));
    json_file.write(js.str());
    stage.emit(json_file);

    std::ostringstream cs;
    write_ablation_csv(cs, report);
    AtomicFile csv_file(stage.out("ablation.csv"));
    csv_file.write(cs.str());
    stage.emit(csv_file);
    stage.write_manifest();
  });
}

void cmd_pipeline(const PipelineConfig& cfg, std::ostream& summary) {
  cfg.validate();

  // 1. Screening design through the forward solver.
  SampleSet oat_set;
  run_stage("doe_oat", [&] {
    Stage stage(cfg, "doe_oat");
    oat_set = run_doe(cfg, "oat", stage);
    stage.write_manifest();
  });

  // 2. Correlation screening must single out (B, n, C): the surrogate
  //    input layout depends on it.
  ScreeningReport screening;
  run_stage("screen", [&] {
    Stage stage(cfg, "screen");
    stage.add_input(stage.out("doe_oat.csv"));
    screening = run_screen(cfg, oat_set, stage);
    stage.write_manifest();
    if (screening.selected != std::vector<std::string>{"B", "n", "C"}) {
      std::string got;
      for (const auto& s : screening.selected) got += s + " ";
      throw Error("screening selected {" + got +
                  "} instead of {B n C}; check solver configuration");
    }
  });

  // 3. Training design.
  SampleSet factorial_set;
  run_stage("doe_factorial", [&] {
    Stage stage(cfg, "doe_factorial");
    factorial_set = run_doe(cfg, "factorial", stage);
    stage.write_manifest();
  });

  // 4. Surrogate training.
  TrainedModels models;
  run_stage("train", [&] {
    Stage stage(cfg, "train");
    stage.add_input(stage.out("doe_factorial.csv"));
    models = train_models(cfg, factorial_set);
    write_models(cfg, stage, models);
    stage.write_manifest();
  });

  // 5. Inverse grid search through the surrogates.
  InverseResult inverse;
  run_stage("invert", [&] {
    Stage stage(cfg, "invert");
    for (int c = 1; c <= 3; ++c) {
      stage.add_input(stage.out("model_case" + std::to_string(c) + ".json"));
    }
    inverse = run_invert(cfg,
                         {&models.per_case[0].model, &models.per_case[1].model,
                          &models.per_case[2].model},
                         stage);
    stage.write_manifest();
  });

  // 6. Solver re-validation of the best sets.
  ValidationReport validation;
  run_stage("validate", [&] {
    Stage stage(cfg, "validate");
    stage.add_input(stage.out("inverse.json"));
    validation = run_validate(cfg, inverse, stage);
    stage.write_manifest();
  });

  // 7. Summary.
  run_stage("summary", [&] {
    Stage stage(cfg, "summary");
    const ValidationRow& best = validation.rows[validation.best_index];

    json j;
    j["format"] = "clayid-summary";
    j["version"] = 1;
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.seed;
    j["refs_mm"] = cfg.refs;
    j["selected_parameters"] = screening.selected;
    json model_names = json::array();
    for (const TrainOutput& out : models.per_case) {
      model_names.push_back(out.model.name);
    }
    j["models"] = model_names;
    j["common_count"] = inverse.common.size();
    j["optimal"] = {{"b_kpa", best.candidate.params[0]},
                    {"n", best.candidate.params[1]},
                    {"c", best.candidate.params[2]}};
    j["optimal_solver_depths_mm"] = best.solver_depths_mm;
    j["optimal_mean_rel_err"] = best.mean_rel_err;
    j["baseline_mean_rel_err"] = validation.baseline.mean_rel_err;
    AtomicFile summary_file(stage.out("summary.json"));
    summary_file.write(j.dump(2) + "\n");
    stage.emit(summary_file);
    stage.write_manifest();

    summary << "optimal (B, n, C) = (" << best.candidate.params[0] << " kPa, "
            << best.candidate.params[1] << ", " << best.candidate.params[2]
            << ")\n"
            << "solver depths [mm]: " << best.solver_depths_mm[0] << ", "
            << best.solver_depths_mm[1] << ", " << best.solver_depths_mm[2]
            << " (refs " << cfg.refs[0] << ", " << cfg.refs[1] << ", "
            << cfg.refs[2] << ")\n"
            << "mean relative error: baseline "
            << validation.baseline.mean_rel_err * 100.0 << "% -> optimized "
            << best.mean_rel_err * 100.0 << "%\n";
  });
}

void cmd_calibrate(const PipelineConfig& cfg, std::ostream& out) {
  cfg.validate();
  run_stage("calibrate", [&] {
    // Reference depths of the all-baseline screening row.
    const std::array<double, 3> targets = {13.600, 19.700, 16.033};
    const CalibrationResult result = calibrate_resistance(
        cfg.material, cfg.cases, std::span<const double>(targets), cfg.solver);
    out << "strain_shape_k = " << result.strain_shape_k
        << "\ninertia_coeff = " << result.inertia_coeff << "\ndepths [mm]: "
        << result.depths_mm[0] << ", " << result.depths_mm[1] << ", "
        << result.depths_mm[2] << "\nworst relative error = "
        << result.worst_rel_error * 100.0 << "%\n";
  });
}

}  // namespace clayid
