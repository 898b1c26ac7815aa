#include "clayid/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "clayid/csv.hpp"
#include "clayid/errors.hpp"
#include "clayid/rng.hpp"

namespace clayid {

namespace {

const std::vector<std::string> kSampleSetHeader = {
    "run_id", "a1_gpa", "a2_gpa", "a3_gpa", "b0", "b1", "rho0_kgm3",
    "a_kpa", "b_kpa", "n", "c", "m", "eps_dot_ref_s", "ise",
    "depth1_mm", "depth2_mm", "depth3_mm"};

const std::vector<std::string> kTableB1Header = {
    "run_id", "b_kpa", "n", "c",
    "ann_depth1_mm", "ann_depth2_mm", "ann_depth3_mm",
    "fem_depth1_mm", "fem_depth2_mm", "fem_depth3_mm"};

const std::vector<std::string> kCasesHeader = {
    "case_id", "diameter_mm", "mass_g", "v0_m_s", "ref_depth_mm", "ref_tol_mm"};

std::vector<std::string> params_to_cells(const MaterialParams& p) {
  std::vector<std::string> cells;
  for (double v : {p.eos.A1, p.eos.A2, p.eos.A3, p.eos.B0, p.eos.B1,
                   p.eos.rho0, p.jc.A, p.jc.B, p.jc.n, p.jc.C, p.jc.m,
                   p.jc.eps_dot_ref, p.ise}) {
    cells.push_back(csv::format_number(v));
  }
  return cells;
}

MaterialParams params_from_cells(const std::vector<std::string>& row,
                                 std::size_t offset) {
  MaterialParams p;
  std::size_t i = offset;
  auto next = [&](const char* name) {
    return csv::parse_number(row[i++], name);
  };
  p.eos.A1 = next("a1_gpa");
  p.eos.A2 = next("a2_gpa");
  p.eos.A3 = next("a3_gpa");
  p.eos.B0 = next("b0");
  p.eos.B1 = next("b1");
  p.eos.rho0 = next("rho0_kgm3");
  p.jc.A = next("a_kpa");
  p.jc.B = next("b_kpa");
  p.jc.n = next("n");
  p.jc.C = next("c");
  p.jc.m = next("m");
  p.jc.eps_dot_ref = next("eps_dot_ref_s");
  p.ise = next("ise");
  return p;
}

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::fixture_a1: return "fixture_a1";
    case Provenance::fixture_b1: return "fixture_b1";
    case Provenance::generated_oat: return "generated_oat";
    case Provenance::generated_factorial: return "generated_factorial";
    case Provenance::generated_subset: return "generated_subset";
  }
  return "unknown";
}

void SampleSet::validate(const std::vector<int>& case_ids) const {
  std::set<int> seen;
  for (const SampleRow& row : rows) {
    if (!seen.insert(row.run_id).second) {
      throw SchemaError("duplicate run_id " + std::to_string(row.run_id));
    }
    row.params.validate();
    for (int c : case_ids) {
      auto it = row.depths.find(c);
      if (it == row.depths.end()) {
        throw SchemaError("run " + std::to_string(row.run_id) +
                          " is missing case " + std::to_string(c));
      }
      if (!(it->second >= 0.0)) {
        throw SchemaError("run " + std::to_string(row.run_id) +
                          ": negative depth for case " + std::to_string(c));
      }
    }
  }
}

std::vector<double> SampleSet::depth_column(int case_id) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const SampleRow& row : rows) {
    auto it = row.depths.find(case_id);
    if (it == row.depths.end()) {
      throw SchemaError("run " + std::to_string(row.run_id) +
                        " is missing case " + std::to_string(case_id));
    }
    out.push_back(it->second);
  }
  return out;
}

std::string sample_set_to_csv(const SampleSet& set) {
  csv::Table table;
  table.header = kSampleSetHeader;
  for (const SampleRow& row : set.rows) {
    std::vector<std::string> cells;
    cells.push_back(std::to_string(row.run_id));
    auto params = params_to_cells(row.params);
    cells.insert(cells.end(), params.begin(), params.end());
    for (int c : {1, 2, 3}) {
      auto it = row.depths.find(c);
      if (it == row.depths.end()) {
        throw SchemaError("run " + std::to_string(row.run_id) +
                          " is missing case " + std::to_string(c));
      }
      cells.push_back(csv::format_number(it->second));
    }
    table.rows.push_back(std::move(cells));
  }
  return csv::to_string(table);
}

void save_sample_set(const SampleSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  out << sample_set_to_csv(set);
}

SampleSet sample_set_from_csv(const std::string& text, Provenance provenance) {
  const csv::Table table = csv::parse(text);
  csv::require_header(table, kSampleSetHeader, "sample set");

  SampleSet set;
  set.provenance = provenance;
  for (const auto& row : table.rows) {
    SampleRow sample;
    sample.run_id = static_cast<int>(csv::parse_integer(row[0], "run_id"));
    sample.params = params_from_cells(row, 1);
    sample.depths[1] = csv::parse_number(row[14], "depth1_mm");
    sample.depths[2] = csv::parse_number(row[15], "depth2_mm");
    sample.depths[3] = csv::parse_number(row[16], "depth3_mm");
    set.rows.push_back(std::move(sample));
  }
  set.validate();
  return set;
}

SampleSet load_sample_set(const std::filesystem::path& path,
                          Provenance provenance) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return sample_set_from_csv(buf.str(), provenance);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::vector<TableB1Row> load_table_b1(const std::filesystem::path& fixtures_dir) {
  const csv::Table table = csv::read(fixtures_dir / "table_b1.csv");
  csv::require_header(table, kTableB1Header, "table_b1");
  std::vector<TableB1Row> rows;
  for (const auto& row : table.rows) {
    TableB1Row r;
    r.run_id = static_cast<int>(csv::parse_integer(row[0], "run_id"));
    r.B = csv::parse_number(row[1], "b_kpa");
    r.n = csv::parse_number(row[2], "n");
    r.C = csv::parse_number(row[3], "c");
    for (int c = 0; c < 3; ++c) {
      r.ann_depths_mm[c] = csv::parse_number(row[4 + c], kTableB1Header[4 + c]);
      r.fem_depths_mm[c] = csv::parse_number(row[7 + c], kTableB1Header[7 + c]);
    }
    rows.push_back(r);
  }
  return rows;
}

SampleSet load_fixture(const std::string& name,
                       const std::filesystem::path& fixtures_dir) {
  if (name == "table_a1") {
    return load_sample_set(fixtures_dir / "table_a1.csv", Provenance::fixture_a1);
  }
  if (name == "table_b1_ann" || name == "table_b1_fem") {
    const bool ann = name == "table_b1_ann";
    const MaterialParams base = load_defaults(fixtures_dir);
    SampleSet set;
    set.provenance = Provenance::fixture_b1;
    for (const TableB1Row& r : load_table_b1(fixtures_dir)) {
      SampleRow row;
      row.run_id = r.run_id;
      row.params = base;
      row.params.jc.B = r.B;
      row.params.jc.n = r.n;
      row.params.jc.C = r.C;
      const auto& depths = ann ? r.ann_depths_mm : r.fem_depths_mm;
      for (int c = 0; c < 3; ++c) row.depths[c + 1] = depths[c];
      set.rows.push_back(std::move(row));
    }
    return set;
  }
  throw UnknownFixtureError("unknown fixture '" + name + "'");
}

std::vector<ImpactCase> load_cases(const std::filesystem::path& fixtures_dir) {
  const csv::Table table = csv::read(fixtures_dir / "cases.csv");
  csv::require_header(table, kCasesHeader, "cases");
  std::vector<ImpactCase> cases;
  for (const auto& row : table.rows) {
    ImpactCase c;
    c.id = static_cast<int>(csv::parse_integer(row[0], "case_id"));
    c.diameter_mm = csv::parse_number(row[1], "diameter_mm");
    c.mass_g = csv::parse_number(row[2], "mass_g");
    c.v0 = csv::parse_number(row[3], "v0_m_s");
    c.ref_depth_mm = csv::parse_number(row[4], "ref_depth_mm");
    c.ref_tol_mm = csv::parse_number(row[5], "ref_tol_mm");
    c.validate();
    cases.push_back(c);
  }
  return cases;
}

MaterialParams load_defaults(const std::filesystem::path& fixtures_dir) {
  const csv::Table table = csv::read(fixtures_dir / "defaults.csv");
  csv::require_header(table, {"name", "value"}, "defaults");
  std::map<std::string, double> kv;
  for (const auto& row : table.rows) {
    kv[row[0]] = csv::parse_number(row[1], row[0]);
  }
  auto get = [&kv](const std::string& name) {
    auto it = kv.find(name);
    if (it == kv.end()) throw SchemaError("defaults: missing key '" + name + "'");
    return it->second;
  };
  MaterialParams p;
  p.eos.A1 = get("a1_gpa");
  p.eos.A2 = get("a2_gpa");
  p.eos.A3 = get("a3_gpa");
  p.eos.B0 = get("b0");
  p.eos.B1 = get("b1");
  p.eos.rho0 = get("rho0_kgm3");
  p.jc.A = get("a_kpa");
  p.jc.B = get("b_kpa");
  p.jc.n = get("n");
  p.jc.C = get("c");
  p.jc.m = get("m");
  p.jc.eps_dot_ref = get("eps_dot_ref_s");
  p.ise = get("ise");
  p.jc.T0 = get("t0_k");
  p.jc.Tm = get("tm_k");
  p.validate();
  return p;
}

std::vector<MaterialParams> gen_oat_design(const MaterialParams& defaults) {
  defaults.validate();
  std::vector<MaterialParams> sets;
  sets.reserve(33);

  // Canonical sweep order of the published screening table: A1, A2, B,
  // n, C, eps_dot_ref, ISE, m, each at x1/4, x1/2, x2, x4.
  using FieldRef = double& (*)(MaterialParams&);
  const std::array<FieldRef, 8> fields = {
      [](MaterialParams& p) -> double& { return p.eos.A1; },
      [](MaterialParams& p) -> double& { return p.eos.A2; },
      [](MaterialParams& p) -> double& { return p.jc.B; },
      [](MaterialParams& p) -> double& { return p.jc.n; },
      [](MaterialParams& p) -> double& { return p.jc.C; },
      [](MaterialParams& p) -> double& { return p.jc.eps_dot_ref; },
      [](MaterialParams& p) -> double& { return p.ise; },
      [](MaterialParams& p) -> double& { return p.jc.m; },
  };

  for (auto field : fields) {
    for (double factor : {0.25, 0.5, 2.0, 4.0}) {
      MaterialParams p = defaults;
      field(p) *= factor;
      p.validate();
      sets.push_back(p);
    }
  }
  sets.push_back(defaults);
  return sets;
}

std::vector<MaterialParams> gen_factorial_design(const MaterialParams& defaults) {
  defaults.validate();
  const std::array<double, 5> factors = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<MaterialParams> sets;
  sets.reserve(125);
  for (double fb : factors) {
    for (double fn : factors) {
      for (double fc : factors) {
        MaterialParams p = defaults;
        p.jc.B = defaults.jc.B * fb;
        p.jc.n = defaults.jc.n * fn;
        p.jc.C = defaults.jc.C * fc;
        p.validate();
        sets.push_back(p);
      }
    }
  }
  return sets;
}

SampleSet subsample(const SampleSet& set, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidParameterError("subsample: fraction must be in (0, 1]");
  }
  const std::size_t count =
      static_cast<std::size_t>(std::llround(fraction * set.rows.size()));
  if (count == 0) {
    throw EmptyResultError("subsample: rounded row count is 0");
  }

  SplitMix64 rng(seed);
  std::vector<std::size_t> idx = rng.permutation(set.rows.size());
  idx.resize(count);
  std::sort(idx.begin(), idx.end());

  SampleSet out;
  out.provenance = Provenance::generated_subset;
  out.rows.reserve(count);
  for (std::size_t i : idx) out.rows.push_back(set.rows[i]);
  return out;
}

SampleSet sample_set_from_batch(std::span<const ImpactCase> cases,
                                std::span<const MaterialParams> mats,
                                std::span<const BatchRun> runs,
                                Provenance provenance) {
  SampleSet set;
  set.provenance = provenance;
  set.rows.resize(mats.size());
  for (std::size_t i = 0; i < mats.size(); ++i) {
    set.rows[i].run_id = static_cast<int>(i + 1);
    set.rows[i].params = mats[i];
  }
  for (const BatchRun& run : runs) {
    if (!run.ok()) continue;
    set.rows[run.mat_index].depths[cases[run.case_index].id] =
        run.result.depth_mm;
  }
  // Drop rows whose runs failed for any case.
  std::erase_if(set.rows,
                [&](const SampleRow& row) { return row.depths.size() != cases.size(); });
  return set;
}

}  // namespace clayid
