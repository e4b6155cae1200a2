#pragma once

#include <optional>
#include <string>
#include <vector>

#include "heiv/bias.hpp"
#include "heiv/estimator.hpp"

namespace heiv {

// Fit report: one row per parameter with the MLE, its standard error, and —
// when a correction was computed — the bias estimate and corrected value,
// satisfying bce = mle - bias exactly. Rendered at 4 decimals for reading
// and at full precision as key=value pairs for machines.
struct Report {
    std::vector<std::string> names;
    Eigen::VectorXd mle;
    Eigen::VectorXd se;
    Eigen::VectorXd bias;  // empty when no correction was requested
    Eigen::VectorXd bce;   // empty when no correction was requested
    double loglik = 0.0;
    int n = 0;
    int iterations = 0;
    bool converged = false;
    bool pd_loss_sigma_x = false;
    bool pd_loss_sigma_q = false;
    std::optional<std::vector<PerObsBias>> per_obs;

    bool corrected() const { return bias.size() > 0; }
};

// bias == nullptr renders an uncorrected report.
Report make_report(const FitResult& fit, const BiasReport* bias, const Dataset& data);

std::string format_report(const Report& rep);      // aligned table, 4 decimals
std::string format_key_values(const Report& rep);  // full precision key=value lines

}  // namespace heiv
