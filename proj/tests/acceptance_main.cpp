// Standalone verification-suite runner: one line per numbered check,
// nonzero exit when any check fails. Optional arguments: check ids to run
// (default all) and --threads N (wall time only; values are unchanged).

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "hsl/acceptance.hpp"

int main(int argc, char** argv) {
  std::vector<int> only;
  int threads = 1;
  std::string data_dir;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads" && i + 1 < argc) {
      threads = std::atoi(argv[++i]);
    } else if (a == "--data-dir" && i + 1 < argc) {
      data_dir = argv[++i];
    } else {
      const int id = std::atoi(a.c_str());
      if (id < 1 || id > 12) {
        std::fprintf(stderr, "unknown argument '%s' (expected check id 1..12, "
                             "--threads N, or --data-dir PATH)\n", a.c_str());
        return 2;
      }
      only.push_back(id);
    }
  }
  if (only.empty())
    for (int id = 1; id <= 12; ++id) only.push_back(id);

  // One check at a time so each verdict prints as soon as it is known.
  std::vector<hsl::CriterionResult> results;
  for (const int id : only) {
    auto part = hsl::run_acceptance({id}, threads, data_dir);
    for (auto& r : part) {
      std::puts(hsl::format_result_line(r).c_str());
      std::fflush(stdout);
      results.push_back(std::move(r));
    }
  }
  int passed = 0;
  for (const auto& r : results)
    if (r.pass) ++passed;
  std::printf("%d/%zu checks passed\n", passed, results.size());
  return hsl::all_pass(results) ? 0 : 1;
}
