// Verification runner: executes the numbered acceptance criteria and prints
// one pass/fail line per criterion. An integer argument restricts the run to
// that criterion; --quick shrinks sample sizes for CI-speed runs (see
// README). Exit code 0 iff every executed criterion passed.

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "exitlim/acceptance.hpp"

int main(int argc, char** argv) {
  exitlim::acceptance::Options opt;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) {
      opt.quick = true;
    } else if (std::strncmp(argv[i], "--jobs=", 7) == 0) {
      opt.jobs = std::atoi(argv[i] + 7);
    } else {
      only = std::atoi(argv[i]);
    }
  }

  bool all_pass = true;
  try {
    if (only > 0) {
      const auto r = exitlim::acceptance::run_criterion(only, opt);
      std::printf("%s\n", exitlim::acceptance::format_line(r).c_str());
      all_pass = r.pass;
    } else {
      for (const auto& r : exitlim::acceptance::run_all(opt)) {
        std::printf("%s\n", exitlim::acceptance::format_line(r).c_str());
        std::fflush(stdout);
        all_pass = all_pass && r.pass;
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance run aborted: %s\n", e.what());
    return 1;
  }
  return all_pass ? 0 : 1;
}
