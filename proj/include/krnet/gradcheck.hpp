#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "krnet/network.hpp"

namespace krnet {

struct GradCheckOptions {
    std::uint64_t seed = 1;
    double tolerance = 1e-4;
    int rounds = 1;
    // Test hook: adds a deliberate error to one analytic gradient so failure
    // detection itself can be exercised. Empty means no injection; otherwise
    // one of the class names below.
    std::string inject_error;
};

struct GradCheckEntry {
    std::string cls;      // conv, conv_transpose, batchnorm, prelu, eltwise_add, network
    std::string param;    // which tensor within the class
    double max_rel_err = 0.0;
    int checked = 0;
    bool pass = false;
};

struct GradCheckResult {
    std::vector<GradCheckEntry> entries;
    bool all_pass = false;
    double worst_rel_err = 0.0;
};

// Central-difference check of every backward implementation against its
// forward, on small random shapes, plus a whole-network check on the mini
// configuration. Relative error uses a floored denominator so finite-
// difference noise on near-zero gradients does not drown the comparison.
GradCheckResult run_gradcheck(const NetworkConfig& net_cfg, const GradCheckOptions& opts);

}  // namespace krnet
