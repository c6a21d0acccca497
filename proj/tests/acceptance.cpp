// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any fails.

#include <cstdio>
#include <iostream>

#include "gravinst/gravinst.hpp"

int main() {
  using namespace gravinst;
  const ExperimentConfig cfg;
  const auto results = run_check_suite(cfg, [](const CriterionResult& r) {
    std::printf("%s (%.1f s)\n", format_result(r).c_str(), r.seconds);
    std::fflush(stdout);
  });
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::printf("%d of %zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
