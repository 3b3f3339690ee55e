#pragma once

// The repository's verification suite: twelve numbered checks with
// tolerances, seeds, and runtime budgets pinned in the implementation.
// Each check reports a pass/fail verdict plus the measured numbers.

#include <string>
#include <vector>

namespace hsl {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;  // measured values and the tolerances applied
};

// Runs the numbered checks (all, when `only` is empty), in order. `threads`
// affects wall time only, never values. `data_dir` locates golden reference
// files; when empty, ./data and ../data are searched.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& only = {},
                                            int threads = 1,
                                            const std::string& data_dir = "");

bool all_pass(const std::vector<CriterionResult>& results);
std::string acceptance_summary_json(const std::vector<CriterionResult>& results);
// "[PASS] 3 moment-asymptotics (1.2 s) ..." one line per result.
std::string format_result_line(const CriterionResult& r);

}  // namespace hsl
