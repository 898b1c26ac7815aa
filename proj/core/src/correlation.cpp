#include "clayid/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "clayid/csv.hpp"
#include "clayid/errors.hpp"

namespace clayid {

const std::vector<std::string>& screened_parameter_names() {
  static const std::vector<std::string> names = {"A1", "A2", "B", "n",
                                                 "C", "eps_r", "m", "ISE"};
  return names;
}

double screened_parameter(const MaterialParams& p, const std::string& name) {
  if (name == "A1") return p.eos.A1;
  if (name == "A2") return p.eos.A2;
  if (name == "B") return p.jc.B;
  if (name == "n") return p.jc.n;
  if (name == "C") return p.jc.C;
  if (name == "eps_r") return p.jc.eps_dot_ref;
  if (name == "m") return p.jc.m;
  if (name == "ISE") return p.ise;
  throw InvalidParameterError("unknown screened parameter '" + name + "'");
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw InvalidParameterError("pearson: size mismatch");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

ScreeningReport screen(const SampleSet& set, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidParameterError("screen: threshold must be in (0, 1)");
  }
  if (set.rows.size() < 3) {
    throw InsufficientDataError("screen: need at least 3 rows, got " +
                                std::to_string(set.rows.size()));
  }

  ScreeningReport report;
  report.threshold = threshold;
  report.case_ids = {1, 2, 3};

  std::map<int, std::vector<double>> depths;
  for (int c : report.case_ids) {
    depths[c] = set.depth_column(c);
    const auto [lo, hi] = std::minmax_element(depths[c].begin(), depths[c].end());
    if (*lo == *hi) {
      throw DegenerateDataError("screen: depth column for case " +
                                std::to_string(c) + " is constant");
    }
  }

  for (const std::string& name : screened_parameter_names()) {
    std::vector<double> column;
    column.reserve(set.rows.size());
    for (const SampleRow& row : set.rows) {
      column.push_back(screened_parameter(row.params, name));
    }
    bool qualifies = true;
    for (int c : report.case_ids) {
      const double coeff = std::abs(pearson(column, depths[c]));
      report.coeffs[{name, c}] = coeff;
      qualifies = qualifies && coeff > threshold;
    }
    if (qualifies) report.selected.push_back(name);
  }
  return report;
}

std::vector<std::string> rank(const ScreeningReport& report, int case_id) {
  if (std::find(report.case_ids.begin(), report.case_ids.end(), case_id) ==
      report.case_ids.end()) {
    throw InvalidParameterError("rank: case " + std::to_string(case_id) +
                                " not present in report");
  }
  std::vector<std::string> names;
  for (const auto& [key, coeff] : report.coeffs) {
    if (key.second == case_id) names.push_back(key.first);
  }
  std::sort(names.begin(), names.end(),
            [&](const std::string& a, const std::string& b) {
              const double ca = report.coeffs.at({a, case_id});
              const double cb = report.coeffs.at({b, case_id});
              if (ca != cb) return ca > cb;
              return a < b;
            });
  return names;
}

void write_screening_json(std::ostream& out, const ScreeningReport& report,
                          const std::string& config_hash) {
  nlohmann::json j;
  j["format"] = "clayid-screening";
  j["version"] = 1;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["threshold"] = report.threshold;
  j["selected"] = report.selected;
  nlohmann::json coeffs;
  for (const auto& [key, value] : report.coeffs) {
    coeffs[key.first][std::to_string(key.second)] = value;
  }
  j["coefficients"] = coeffs;
  out << j.dump(2) << '\n';
}

void write_screening_csv(std::ostream& out, const ScreeningReport& report) {
  csv::Table table;
  table.header = {"parameter"};
  for (int c : report.case_ids) {
    table.header.push_back("abs_r_case" + std::to_string(c));
  }
  table.header.push_back("selected");
  for (const std::string& name : screened_parameter_names()) {
    std::vector<std::string> row = {name};
    for (int c : report.case_ids) {
      row.push_back(csv::format_number(report.coeffs.at({name, c})));
    }
    const bool selected = std::find(report.selected.begin(),
                                    report.selected.end(),
                                    name) != report.selected.end();
    row.push_back(selected ? "1" : "0");
    table.rows.push_back(std::move(row));
  }
  out << csv::to_string(table);
}

ScreeningReport read_screening_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "clayid-screening") {
    throw SchemaError(path.string() + ": field 'format' is not a screening report");
  }
  ScreeningReport report;
  report.threshold = j.at("threshold").get<double>();
  report.selected = j.at("selected").get<std::vector<std::string>>();
  for (const auto& [param, cases] : j.at("coefficients").items()) {
    for (const auto& [case_id, coeff] : cases.items()) {
      const int c = std::stoi(case_id);
      report.coeffs[{param, c}] = coeff.get<double>();
      if (std::find(report.case_ids.begin(), report.case_ids.end(), c) ==
          report.case_ids.end()) {
        report.case_ids.push_back(c);
      }
    }
  }
  std::sort(report.case_ids.begin(), report.case_ids.end());
  return report;
}

}  // namespace clayid
