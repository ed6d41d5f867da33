// One PASS/FAIL line per acceptance criterion, decided by the asserted checks
// of the property suites that carry that criterion number.

#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "sandpile/verify.hpp"

namespace {

const std::map<int, std::string> kCriteria{
    {1, "penalty vanishes on feasible fields"},
    {2, "Newton derivative of the penalty is positive semidefinite"},
    {3, "Newton remainder ratio of P decays"},
    {4, "semismooth Newton converges along the gamma path"},
    {5, "Newton steps obey the eps^-1 step bound"},
    {6, "path feasibility is nonincreasing and small at gamma = 1e4"},
    {7, "path solution matches the ADMM oracle"},
    {8, "sensitivity is the Newton derivative of the solution map"},
    {9, "reduced gradient matches central differences"},
    {10, "gamma = 0 optimizer matches the dense normal equations"},
    {11, "tracking benchmark descends monotonically to the baseline"},
    {12, "benchmark runs are bit-reproducible"},
};

}  // namespace

int main(int argc, char** argv) {
  sandpile::VerifyOptions options;
  if (argc > 1) options.seed = std::strtoull(argv[1], nullptr, 10);
  const std::vector<sandpile::Check> checks = sandpile::run_suite("all", options);

  bool all = true;
  for (const auto& [id, title] : kCriteria) {
    int count = 0;
    bool ok = true;
    std::string worst;
    for (const auto& c : checks) {
      if (c.criterion != id || !c.asserted) continue;
      ++count;
      if (!c.passed) {
        ok = false;
        char buf[256];
        std::snprintf(buf, sizeof buf, " [%s: %.6e %s %.3e]", c.name.c_str(), c.measured, c.relation.c_str(),
                      c.threshold);
        worst += buf;
      }
    }
    ok = ok && count > 0;
    all = all && ok;
    std::printf("%s criterion %2d: %s (%d checks)%s\n", ok ? "PASS" : "FAIL", id, title.c_str(), count,
                count == 0 ? " [no checks]" : worst.c_str());
  }
  return all ? 0 : 1;
}
