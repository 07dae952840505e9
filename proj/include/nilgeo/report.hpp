#pragma once

#include "nilgeo/spec_io.hpp"

#include <map>
#include <string>
#include <vector>

namespace nilgeo {

struct ExperimentReport {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  json summary = json::object();
  std::map<std::string, bool> checks;  // asserted signatures
  std::uint64_t seed = 0;
  json config = json::object();

  void add_row(std::vector<double> row);
  bool passed() const;
  json to_json() const;
  std::string to_csv() const;
  // column view
  std::vector<double> column(const std::string& c) const;
};

// shared envelope: tool version, algebra hash, config
json envelope(const std::string& algebra_hash, const json& config);

}  // namespace nilgeo
