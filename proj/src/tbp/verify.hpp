#pragma once

#include <functional>
#include <string>

namespace tbp {

struct VerifyResult {
  int checks = 0;
  int failures = 0;
};

using VerifyLog = std::function<void(const std::string&)>;

// Runs the named property suite ("dynamics", "integrator", "autodiff" or
// "all"), logging one line per check with the measured value and tolerance.
VerifyResult verify_suite(const std::string& suite, const VerifyLog& log);

}  // namespace tbp
