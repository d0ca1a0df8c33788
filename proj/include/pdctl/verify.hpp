#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pdctl {

struct CheckResult {
  std::string name;
  bool pass = false;
  double statistic = 0.0;  // worst observed value
  double threshold = 0.0;
  std::string detail;
  bool informational = false;  // reported, never fails the suite
};

struct VerifyOptions {
  std::size_t n_samples = 100000;
  std::uint64_t seed = 0;
};

/// Empirical mean of PD1 against its exact expectation 2 g B'P w, per coordinate.
CheckResult verify_pd1_mean(const VerifyOptions& options);
/// Same draws against g B'P w, the scaling without the factor 2 (informational).
CheckResult verify_pd1_unit_scale(const VerifyOptions& options);
CheckResult verify_pd2_exact(const VerifyOptions& options);
CheckResult verify_pd3_exact(const VerifyOptions& options);
CheckResult verify_pd3_perturbed(const VerifyOptions& options);
/// Sphere-exploration estimate against central differences of the smoothed memory cost.
CheckResult verify_gradient_bias(const VerifyOptions& options);

std::vector<CheckResult> verify_lemmas(const VerifyOptions& options);
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace pdctl
