#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hardylab::suite {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string summary;    // one line, tolerances included
  double seconds = 0.0;   // kept out of the report so reruns compare byte for byte
  nlohmann::json report;
};

struct SuiteOptions {
  std::uint64_t seed = 20240611;
  std::vector<int> criteria;  // empty runs 1-9
  // Called after each criterion, e.g. to print progress.
  std::function<void(const CriterionResult&)> on_result;
};

CriterionResult run_criterion(int id, std::uint64_t seed);
std::vector<CriterionResult> run_suite(const SuiteOptions& opt);

// Single criteria 1-8 bundled as one document (criterion 9 compares two of these).
nlohmann::json reports_document(const std::vector<CriterionResult>& results, std::uint64_t seed);

}  // namespace hardylab::suite
