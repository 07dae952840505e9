#include "nilgeo/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace nilgeo {

void ExperimentReport::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw InvariantViolation("report row width mismatch in " + name);
  rows.push_back(std::move(row));
}

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second; });
}

std::vector<double> ExperimentReport::column(const std::string& c) const {
  auto it = std::find(columns.begin(), columns.end(), c);
  if (it == columns.end()) throw SpecError("report has no column " + c);
  const auto idx = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[idx]);
  return out;
}

json ExperimentReport::to_json() const {
  json j;
  j["experiment"] = name;
  j["seed"] = seed;
  j["config"] = config;
  j["columns"] = columns;
  j["rows"] = rows;
  j["summary"] = summary;
  j["checks"] = checks;
  j["passed"] = passed();
  return j;
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  return os.str();
}

json envelope(const std::string& algebra_hash, const json& config) {
  json j;
  j["version"] = kVersion;
  j["algebra_hash"] = algebra_hash;
  j["config"] = config;
  return j;
}

}  // namespace nilgeo
