#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heiv/rng.hpp"
#include "heiv/types.hpp"

namespace heiv {

// Random valid model point: coefficients from N(0,1)-ish draws, covariance
// blocks built as A A' + 0.5 I so they are safely positive definite.
Theta random_theta(Rng& rng, int v, int m);

// Random dataset simulated from `theta` with random PSD error covariances.
Dataset random_dataset(Rng& rng, const Theta& theta, int n);

struct VerifyCheck {
    std::string name;
    double tolerance = 0.0;
    double observed = 0.0;  // worst discrepancy seen
    bool pass = false;
};

struct VerifyOptions {
    std::uint64_t seed = 20260815;
    // Test hook: added to every analytic score component before the
    // finite-difference comparison, to prove the suite detects a broken
    // derivative. Zero in normal operation.
    double derivative_perturbation = 0.0;
};

// Cross-validation of every analytic path against an independent reference:
// finite differences for first/second derivatives of the moments and the
// log-likelihood, and the dense stacked materialization for the score,
// information, bias, and scoring step. Runs in seconds.
std::vector<VerifyCheck> run_verification(const VerifyOptions& opts = {});

bool all_passed(const std::vector<VerifyCheck>& checks);
std::string format_verification(const std::vector<VerifyCheck>& checks);

}  // namespace heiv
