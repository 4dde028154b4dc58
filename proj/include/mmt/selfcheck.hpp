#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Finite-difference and brute-force consistency checks, runnable from the
// CLI (`selftest`) and reused by the test suites. The log-PDF evaluators
// here are written independently of the gradient/Hessian assembly they
// check.

namespace mmt::selfcheck {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Largest relative error between the analytic gradient and central finite
// differences of the modality log-PDF at theta = 0 over `configs` random
// configurations.
double max_texture_gradient_error(int configs, std::uint64_t seed);
double max_region_gradient_error(int configs, std::uint64_t seed);
double max_depth_gradient_error(int configs, std::uint64_t seed);

// w * r² == tukey(r) on (0, c); w == 0 on [c, 10c]. Largest absolute
// deviation over a residual sweep.
double max_tukey_consistency_error(double c);

// add/adds against an independent brute-force double loop; exact equality
// required. Returns the number of mismatching instances.
int metric_oracle_mismatches(int instances, int vertices, std::uint64_t seed);

// Scalar vs SIMD kernel variants on random inputs; exact equality required.
// Returns the number of mismatching batches across available backends.
int kernel_equivalence_mismatches(std::uint64_t seed);

std::vector<CheckResult> run_all(std::uint64_t seed);

}  // namespace mmt::selfcheck
