#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lowrank {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 0;
    // weight shapes (rows x cols) for the theorem/corollary checks
    std::vector<std::pair<std::size_t, std::size_t>> sizes = {{8, 16}, {16, 32}, {32, 64}};
    std::size_t instances = 10;  // seeded instances per shape
};

// The executable proof battery: loss-equals-sigma exactness, tail-sum
// corollary, brute-force subset optimality, orthogonality of the whitened
// activations, closed-form update optimality and formulation equivalence,
// the diagonal-scaling loss formula, and its non-monotonicity witness.
std::vector<CheckResult> run_verification(const VerifyOptions& options);

bool all_pass(const std::vector<CheckResult>& results);

// Negative-control hook: with whitening disabled the loss-equals-sigma
// check must fail. Exposed so tests can assert the check has teeth.
CheckResult single_value_exactness_check(const VerifyOptions& options, bool use_whitening);

}  // namespace lowrank
