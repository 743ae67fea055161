#pragma once

#include <string>
#include <vector>

#include "camera/losses.hpp"
#include "camera/model.hpp"

namespace camera {

struct GradCheckOptions {
  uint64_t seed = 7;
  int coordsPerTensor = 12;  // sampled coordinates per parameter tensor
  double step = 1e-5;        // central-difference step
  double tol = 1e-4;         // relative-error tolerance
  double absFloor = 1e-8;    // |analytic - fd| below this counts as agreement
};

struct GradCheckResult {
  double maxRelErr = 0.0;
  std::string worstCoord;
  int checked = 0;
  int failed = 0;
  std::vector<std::string> failures;
  bool pass() const { return failed == 0 && checked > 0; }
};

// Central-difference check of the full sequence loss against the analytic
// tape gradients, on the miniature model preset.
GradCheckResult checkModelGradients(const GradCheckOptions& opt = {});

}  // namespace camera
