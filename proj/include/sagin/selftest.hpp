// Fast invariant suites runnable from the command line.
#ifndef SAGIN_SELFTEST_HPP_
#define SAGIN_SELFTEST_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace sagin::exp {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<CheckResult> selftest(std::uint64_t seed);

}  // namespace sagin::exp

#endif  // SAGIN_SELFTEST_HPP_
