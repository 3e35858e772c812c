// Acceptance suite: one line per criterion, exit 0 iff all pass.

#include <iostream>

#include "gflow/validation.hpp"

int main() {
  gflow::ValidationOptions opt;
  opt.progress = &std::cerr;
  const auto results = gflow::run_validation(opt);
  int failed = 0;
  for (const auto& r : results) {
    std::cout << gflow::format_check(r) << '\n';
    if (!r.pass) ++failed;
  }
  std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
