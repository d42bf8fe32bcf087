#pragma once

// Central finite-difference verification of every differentiable op and loss
// term. Shared by the cli diagnostic command and the test suites.

#include <cstdint>
#include <string>
#include <vector>

namespace dspnet::gradcheck {

struct OpResult {
    std::string op;
    double worst_rel_err = 0.0;
    bool pass = false;
};

struct SuiteOptions {
    std::size_t instances_per_op = 20;
    double fd_step = 1e-5;
    double tolerance = 1e-4;
    std::uint64_t seed = 0;
    // Negates the analytic gradient of the named op before comparison; used by
    // fault-injection tests to prove the checker actually bites.
    std::string inject_sign_flip;
};

std::vector<OpResult> run_suite(const SuiteOptions& opts = {});

}  // namespace dspnet::gradcheck
