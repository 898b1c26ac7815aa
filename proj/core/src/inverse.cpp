#include "clayid/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "clayid/csv.hpp"
#include "clayid/errors.hpp"
#include "clayid/parallel.hpp"
#include "clayid/rng.hpp"

namespace clayid {

void GridSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (!(mins[a] < maxs[a])) {
      throw InvalidParameterError("grid: mins must be < maxs componentwise");
    }
  }
  if (levels < 2) throw InvalidParameterError("grid: levels must be >= 2");
  const std::size_t total = static_cast<std::size_t>(levels) *
                            static_cast<std::size_t>(levels) *
                            static_cast<std::size_t>(levels);
  if (total > cap) {
    throw GridOverflowError("grid: " + std::to_string(total) +
                            " candidates exceed cap " + std::to_string(cap));
  }
}

CandidateGrid::CandidateGrid(const GridSpec& spec) : spec_(spec) {
  spec.validate();
  for (int a = 0; a < 3; ++a) {
    step_[a] = (spec.maxs[a] - spec.mins[a]) / (spec.levels - 1);
  }
  total_ = static_cast<std::size_t>(spec.levels) *
           static_cast<std::size_t>(spec.levels) *
           static_cast<std::size_t>(spec.levels);
}

std::array<int, 3> CandidateGrid::indices_of(std::size_t linear) const {
  const std::size_t l = spec_.levels;
  return {static_cast<int>(linear / (l * l)),
          static_cast<int>((linear / l) % l),
          static_cast<int>(linear % l)};
}

std::array<double, 3> CandidateGrid::params_at(int i, int j, int k) const {
  return {spec_.mins[0] + i * step_[0], spec_.mins[1] + j * step_[1],
          spec_.mins[2] + k * step_[2]};
}

std::array<double, 3> CandidateGrid::params_at(std::size_t linear) const {
  const auto idx = indices_of(linear);
  return params_at(idx[0], idx[1], idx[2]);
}

double objective(double k1, double k2, double k3,
                 const std::array<double, 3>& refs) {
  return (std::abs(refs[0] - k1) + std::abs(refs[1] - k2) +
          std::abs(refs[2] - k3)) /
         3.0;
}

void sweep(const std::array<const MlpModel*, 3>& models, const GridSpec& spec,
           const std::array<double, 3>& refs, const SweepConfig& cfg,
           const std::function<void(std::span<const Candidate>)>& sink) {
  const CandidateGrid grid(spec);
  for (const MlpModel* m : models) {
    if (m == nullptr) throw InvalidParameterError("sweep: missing surrogate");
    m->validate();
  }

  const std::size_t chunk = cfg.chunk == 0 ? grid.size() : cfg.chunk;
  const std::size_t n_chunks = (grid.size() + chunk - 1) / chunk;

  // Chunks are evaluated in parallel into per-chunk slots and handed to
  // the sink in index order afterwards, keeping the stream deterministic.
  std::vector<std::vector<Candidate>> slots(n_chunks);
  parallel_chunks(
      grid.size(), chunk, cfg.jobs,
      [&](std::size_t chunk_index, std::size_t begin, std::size_t end) {
        const std::size_t count = end - begin;
        std::vector<Candidate>& out = slots[chunk_index];
        out.resize(count);

        std::vector<double> inputs(count * 3);
        for (std::size_t i = 0; i < count; ++i) {
          Candidate& c = out[i];
          c.idx = grid.indices_of(begin + i);
          c.params = grid.params_at(begin + i);
          inputs[i * 3 + 0] = c.params[0];
          inputs[i * 3 + 1] = c.params[1];
          inputs[i * 3 + 2] = c.params[2];
        }
        std::vector<double> preds(count);
        for (int m = 0; m < 3; ++m) {
          forward_batch(*models[m], inputs, preds);
          for (std::size_t i = 0; i < count; ++i) out[i].predicted[m] = preds[i];
        }
        for (Candidate& c : out) {
          c.score = objective(c.predicted[0], c.predicted[1], c.predicted[2], refs);
        }
      });

  for (std::vector<Candidate>& slot : slots) {
    sink(slot);
    slot.clear();
    slot.shrink_to_fit();
  }
}

std::vector<Candidate> sweep_all(const std::array<const MlpModel*, 3>& models,
                                 const GridSpec& spec,
                                 const std::array<double, 3>& refs,
                                 const SweepConfig& cfg) {
  std::vector<Candidate> all;
  all.reserve(CandidateGrid(spec).size());
  sweep(models, spec, refs, cfg, [&](std::span<const Candidate> chunk) {
    all.insert(all.end(), chunk.begin(), chunk.end());
  });
  return all;
}

namespace {

std::size_t linear_index(const Candidate& c, int levels) {
  return (static_cast<std::size_t>(c.idx[0]) * levels + c.idx[1]) * levels +
         c.idx[2];
}

struct Selector {
  const GridSpec& spec;
  const std::array<double, 3>& refs;
  const SelectConfig& cfg;
  InverseResult result;

  explicit Selector(const GridSpec& s, const std::array<double, 3>& r,
                    const SelectConfig& c)
      : spec(s), refs(r), cfg(c) {
    if (!(cfg.per_case_cap > 0.0) || !(cfg.common_cap > 0.0)) {
      throw InvalidParameterError("select: caps must be > 0");
    }
    // Relative caps above 1 make no sense; absolute caps are in mm.
    if (!cfg.absolute_mm && (cfg.per_case_cap > 1.0 || cfg.common_cap > 1.0)) {
      throw InvalidParameterError("select: relative caps must be in (0, 1]");
    }
    if (cfg.top_k < 1) throw InvalidParameterError("select: top_k must be >= 1");
    result.grid = spec;
    result.refs = refs;
    result.select_cfg = cfg;
  }

  double error_of(const Candidate& c, int case_index) const {
    const double abs_err = std::abs(c.predicted[case_index] - refs[case_index]);
    return cfg.absolute_mm ? abs_err : abs_err / refs[case_index];
  }

  void consume(std::span<const Candidate> chunk) {
    for (const Candidate& c : chunk) {
      int qualified = 0;
      double err_sum = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double err = error_of(c, k);
        err_sum += err;
        if (err < cfg.per_case_cap) {
          result.per_case[k].push_back(c);
          ++qualified;
        }
      }
      if (qualified == 3 && err_sum / 3.0 < cfg.common_cap) {
        result.common.push_back(c);
      }
    }
  }

  InverseResult finish() {
    auto by_index = [&](const Candidate& a, const Candidate& b) {
      return linear_index(a, spec.levels) < linear_index(b, spec.levels);
    };
    for (int k = 0; k < 3; ++k) {
      std::sort(result.per_case[k].begin(), result.per_case[k].end(),
                [&](const Candidate& a, const Candidate& b) {
                  const double ea = error_of(a, k);
                  const double eb = error_of(b, k);
                  if (ea != eb) return ea < eb;
                  return by_index(a, b);
                });
    }
    std::sort(result.common.begin(), result.common.end(),
              [&](const Candidate& a, const Candidate& b) {
                if (a.score != b.score) return a.score < b.score;
                return by_index(a, b);
              });
    if (result.common.empty()) {
      throw EmptySelectionError(
          "select: no candidate qualified in all cases; surrogates may be "
          "poor or the reference depths unreachable");
    }
    result.top_k.assign(
        result.common.begin(),
        result.common.begin() +
            std::min<std::size_t>(result.common.size(), cfg.top_k));
    return std::move(result);
  }
};

}  // namespace

InverseResult select(std::span<const Candidate> stream, const GridSpec& spec,
                     const std::array<double, 3>& refs, const SelectConfig& cfg) {
  Selector selector(spec, refs, cfg);
  selector.consume(stream);
  return selector.finish();
}

InverseResult run_inverse(const std::array<const MlpModel*, 3>& models,
                          const GridSpec& spec, const std::array<double, 3>& refs,
                          const SelectConfig& select_cfg,
                          const SweepConfig& sweep_cfg) {
  Selector selector(spec, refs, select_cfg);
  sweep(models, spec, refs, sweep_cfg,
        [&](std::span<const Candidate> chunk) { selector.consume(chunk); });
  return selector.finish();
}

namespace {

ValidationRow validate_one(const Candidate& c, std::span<const ImpactCase> cases,
                           const MaterialParams& base, const SolverConfig& solver,
                           const std::array<double, 3>& refs) {
  ValidationRow row;
  row.candidate = c;
  MaterialParams mat = base;
  mat.jc.B = c.params[0];
  mat.jc.n = c.params[1];
  mat.jc.C = c.params[2];
  try {
    double err_sum = 0.0;
    for (std::size_t k = 0; k < cases.size(); ++k) {
      const double depth = simulate(cases[k], mat, solver).depth_mm;
      row.solver_depths_mm[k] = depth;
      row.ann_abs_err_mm[k] = std::abs(c.predicted[k] - depth);
      row.rel_err_vs_ref[k] = std::abs(depth - refs[k]) / refs[k];
      err_sum += row.rel_err_vs_ref[k];
    }
    row.mean_rel_err = err_sum / static_cast<double>(cases.size());
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

ValidationReport validate(const InverseResult& result,
                          std::span<const ImpactCase> cases,
                          const MaterialParams& base, const SolverConfig& solver,
                          int jobs) {
  if (result.top_k.empty()) {
    throw EmptySelectionError("validate: empty top-k selection");
  }
  if (cases.size() != 3) {
    throw InvalidParameterError("validate: expected exactly 3 cases");
  }

  ValidationReport report;
  report.rows.resize(result.top_k.size());
  parallel_for(result.top_k.size(), jobs, [&](std::size_t i) {
    report.rows[i] =
        validate_one(result.top_k[i], cases, base, solver, result.refs);
  });

  // Baseline material, evaluated for the before/after contrast. Its
  // "predictions" are just its solver depths, so ann_abs_err is zero.
  Candidate base_candidate;
  base_candidate.params = {base.jc.B, base.jc.n, base.jc.C};
  {
    MaterialParams mat = base;
    for (std::size_t k = 0; k < cases.size(); ++k) {
      base_candidate.predicted[k] = simulate(cases[k], mat, solver).depth_mm;
    }
    base_candidate.score =
        objective(base_candidate.predicted[0], base_candidate.predicted[1],
                  base_candidate.predicted[2], result.refs);
  }
  report.baseline = validate_one(base_candidate, cases, base, solver, result.refs);

  bool found = false;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    if (!report.rows[i].ok()) continue;
    if (report.rows[i].mean_rel_err < best) {
      best = report.rows[i].mean_rel_err;
      report.best_index = i;
      found = true;
    }
  }
  if (!found) {
    throw EmptySelectionError("validate: every candidate failed in the solver");
  }
  return report;
}

AblationReport ablation(const SampleSet& data, std::span<const ImpactCase> cases,
                        const MaterialParams& base, const SolverConfig& solver,
                        const std::array<double, 3>& refs,
                        const AblationConfig& cfg) {
  for (double f : cfg.fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw InvalidParameterError("ablation: fractions must be in (0, 1]");
    }
  }
  if (cfg.repeats < 1) {
    throw InvalidParameterError("ablation: repeats must be >= 1");
  }

  AblationReport report;
  for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
    const double fraction = cfg.fractions[fi];
    for (int rep = 0; rep < cfg.repeats; ++rep) {
      AblationRepeat run;
      run.fraction = fraction;
      run.repeat = rep;
      run.seed = derive_seed(cfg.seed, fi * 1000 + rep);
      try {
        const SampleSet subset = subsample(data, fraction, run.seed);

        std::array<MlpModel, 3> models;
        for (int c = 0; c < 3; ++c) {
          TrainConfig tc = cfg.train;
          tc.seed = derive_seed(run.seed, static_cast<std::uint64_t>(c));
          models[c] = train(case_data(subset, c + 1), cfg.archs[c], tc).model;
        }
        const std::array<const MlpModel*, 3> model_ptrs = {
            &models[0], &models[1], &models[2]};

        const InverseResult inverse =
            run_inverse(model_ptrs, cfg.grid, refs, cfg.select_cfg, cfg.sweep_cfg);
        const ValidationReport validation =
            validate(inverse, cases, base, solver, cfg.sweep_cfg.jobs);

        // Prediction accuracy: how well the surrogates anticipated the
        // solver on the selected sets.
        double err_sum = 0.0;
        std::size_t count = 0;
        for (const ValidationRow& row : validation.rows) {
          if (!row.ok()) continue;
          for (int k = 0; k < 3; ++k) {
            err_sum += row.ann_abs_err_mm[k] / row.solver_depths_mm[k];
            ++count;
          }
        }
        if (count == 0) throw EmptySelectionError("no validated candidates");
        run.accuracy = 1.0 - err_sum / static_cast<double>(count);
      } catch (const std::exception& e) {
        run.error = e.what();
      }
      report.runs.push_back(std::move(run));
    }
  }

  for (double fraction : cfg.fractions) {
    double sum = 0.0;
    int count = 0;
    for (const AblationRepeat& run : report.runs) {
      if (run.fraction == fraction && run.ok()) {
        sum += run.accuracy;
        ++count;
      }
    }
    if (count > 0) report.mean_accuracy[fraction] = sum / count;
  }
  return report;
}

namespace {

nlohmann::json candidate_to_json(const Candidate& c) {
  return {{"idx", c.idx},
          {"params", c.params},
          {"predicted_mm", c.predicted},
          {"score_mm", c.score}};
}

Candidate candidate_from_json(const nlohmann::json& j) {
  Candidate c;
  c.idx = j.at("idx").get<std::array<int, 3>>();
  c.params = j.at("params").get<std::array<double, 3>>();
  c.predicted = j.at("predicted_mm").get<std::array<double, 3>>();
  c.score = j.at("score_mm").get<double>();
  return c;
}

}  // namespace

void write_inverse_json(std::ostream& out, const InverseResult& result,
                        const std::string& config_hash) {
  nlohmann::json j;
  j["format"] = "clayid-inverse";
  j["version"] = 1;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["grid"] = {{"mins", result.grid.mins},
               {"maxs", result.grid.maxs},
               {"levels", result.grid.levels}};
  j["refs_mm"] = result.refs;
  j["select"] = {{"per_case_cap", result.select_cfg.per_case_cap},
                 {"common_cap", result.select_cfg.common_cap},
                 {"top_k", result.select_cfg.top_k},
                 {"absolute_mm", result.select_cfg.absolute_mm}};
  j["per_case_counts"] = {result.per_case[0].size(), result.per_case[1].size(),
                          result.per_case[2].size()};
  j["common_count"] = result.common.size();
  nlohmann::json top = nlohmann::json::array();
  for (const Candidate& c : result.top_k) top.push_back(candidate_to_json(c));
  j["top_k"] = top;
  out << j.dump(2) << '\n';
}

InverseResult read_inverse_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "clayid-inverse") {
    throw SchemaError(path.string() + ": not an inverse result");
  }
  InverseResult result;
  result.grid.mins = j.at("grid").at("mins").get<std::array<double, 3>>();
  result.grid.maxs = j.at("grid").at("maxs").get<std::array<double, 3>>();
  result.grid.levels = j.at("grid").at("levels").get<int>();
  result.refs = j.at("refs_mm").get<std::array<double, 3>>();
  result.select_cfg.per_case_cap = j.at("select").at("per_case_cap").get<double>();
  result.select_cfg.common_cap = j.at("select").at("common_cap").get<double>();
  result.select_cfg.top_k = j.at("select").at("top_k").get<int>();
  result.select_cfg.absolute_mm = j.at("select").at("absolute_mm").get<bool>();
  for (const auto& c : j.at("top_k")) {
    result.top_k.push_back(candidate_from_json(c));
  }
  return result;
}

void write_common_csv(std::ostream& out, const InverseResult& result) {
  csv::Table table;
  table.header = {"i", "j", "k", "b_kpa", "n", "c",
                  "pred1_mm", "pred2_mm", "pred3_mm", "score_mm"};
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  for (const Candidate& c : result.common) {
    std::vector<std::string> row;
    for (int a = 0; a < 3; ++a) row.push_back(std::to_string(c.idx[a]));
    for (int a = 0; a < 3; ++a) row.push_back(num(c.params[a]));
    for (int a = 0; a < 3; ++a) row.push_back(num(c.predicted[a]));
    row.push_back(num(c.score));
    table.rows.push_back(std::move(row));
  }
  out << csv::to_string(table);
}

namespace {

nlohmann::json validation_row_to_json(const ValidationRow& row) {
  nlohmann::json j;
  j["params"] = row.candidate.params;
  j["surrogate_depths_mm"] = row.candidate.predicted;
  if (!row.ok()) {
    j["error"] = row.error;
    return j;
  }
  j["solver_depths_mm"] = row.solver_depths_mm;
  j["ann_abs_err_mm"] = row.ann_abs_err_mm;
  j["rel_err_vs_ref"] = row.rel_err_vs_ref;
  j["mean_rel_err"] = row.mean_rel_err;
  return j;
}

}  // namespace

void write_validation_json(std::ostream& out, const ValidationReport& report,
                           const std::array<double, 3>& refs,
                           const std::string& config_hash) {
  nlohmann::json j;
  j["format"] = "clayid-validation";
  j["version"] = 1;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["refs_mm"] = refs;
  nlohmann::json rows = nlohmann::json::array();
  for (const ValidationRow& row : report.rows) {
    rows.push_back(validation_row_to_json(row));
  }
  j["rows"] = rows;
  j["best_index"] = report.best_index;
  j["baseline"] = validation_row_to_json(report.baseline);
  const ValidationRow& best = report.rows[report.best_index];
  j["optimal"] = {{"b_kpa", best.candidate.params[0]},
                  {"n", best.candidate.params[1]},
                  {"c", best.candidate.params[2]},
                  {"mean_rel_err", best.mean_rel_err}};
  out << j.dump(2) << '\n';
}

void write_ablation_json(std::ostream& out, const AblationReport& report,
                         const std::string& config_hash) {
  nlohmann::json j;
  j["format"] = "clayid-ablation";
  j["version"] = 1;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  nlohmann::json runs = nlohmann::json::array();
  for (const AblationRepeat& run : report.runs) {
    nlohmann::json r = {{"fraction", run.fraction},
                        {"repeat", run.repeat},
                        {"seed", run.seed}};
    if (run.ok()) {
      r["accuracy"] = run.accuracy;
    } else {
      r["error"] = run.error;
    }
    runs.push_back(r);
  }
  j["runs"] = runs;
  nlohmann::json means = nlohmann::json::object();
  for (const auto& [fraction, acc] : report.mean_accuracy) {
    means[csv::format_number(fraction)] = acc;
  }
  j["mean_accuracy"] = means;
  out << j.dump(2) << '\n';
}

void write_ablation_csv(std::ostream& out, const AblationReport& report) {
  csv::Table table;
  table.header = {"fraction", "repeat", "accuracy", "failed"};
  for (const AblationRepeat& run : report.runs) {
    table.rows.push_back({csv::format_number(run.fraction),
                          std::to_string(run.repeat),
                          run.ok() ? csv::format_number(run.accuracy) : "nan",
                          run.ok() ? "0" : "1"});
  }
  out << csv::to_string(table);
}

}  // namespace clayid
