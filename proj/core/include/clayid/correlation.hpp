#pragma once

#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "clayid/dataset.hpp"

namespace clayid {

/// Names of the eight screened parameters, in canonical sweep order.
const std::vector<std::string>& screened_parameter_names();

/// Value of a screened parameter by name.
double screened_parameter(const MaterialParams& p, const std::string& name);

/// Pearson correlation coefficient; returns 0 when either column is
/// constant.
double pearson(std::span<const double> x, std::span<const double> y);

struct ScreeningReport {
  /// (parameter, case id) -> |Pearson r| in [0, 1].
  std::map<std::pair<std::string, int>, double> coeffs;
  /// Parameters whose coefficient exceeds the threshold in every case.
  std::vector<std::string> selected;
  double threshold = 0.0;
  std::vector<int> case_ids;
};

/// Screens every parameter against every depth column of the set using
/// the absolute Pearson coefficient over all rows. Requires >= 3 rows;
/// throws DegenerateDataError if a depth column is constant.
ScreeningReport screen(const SampleSet& set, double threshold);

/// Parameters of one case sorted by descending coefficient, ties broken
/// alphabetically.
std::vector<std::string> rank(const ScreeningReport& report, int case_id);

void write_screening_json(std::ostream& out, const ScreeningReport& report,
                          const std::string& config_hash = {});
void write_screening_csv(std::ostream& out, const ScreeningReport& report);
ScreeningReport read_screening_json(const std::filesystem::path& path);

}  // namespace clayid
