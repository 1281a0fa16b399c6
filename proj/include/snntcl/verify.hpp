#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace snntcl::verify {

struct CheckResult {
  std::string name;
  double max_err = 0.0;
  bool pass = false;
};

/// Analytic gradients of every differentiable primitive and every loss
/// family against central finite differences (step 1e-6, relative error
/// 1e-5). The spike nonlinearity is audited against its closed-form
/// surrogate derivative instead.
std::vector<CheckResult> gradient_checks(std::uint64_t seed);

/// Engine-vs-oracle agreement: contrastive losses on random banks
/// (absolute error 1e-10), LIF traces (bit-identical), cross-entropy.
std::vector<CheckResult> oracle_checks(std::uint64_t seed,
                                       std::size_t banks = 200);

bool all_pass(const std::vector<CheckResult>& results);

}  // namespace snntcl::verify
