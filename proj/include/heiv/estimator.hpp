#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "heiv/likelihood.hpp"
#include "heiv/types.hpp"

namespace heiv {

struct FitConfig {
    int max_iter = 200;
    double rel_tol = 1e-10;     // applied to both parameter change and loglik change
    int step_halving_max = 30;  // safeguard when a full step degrades the likelihood
};

struct IterationRecord {
    int iteration = 0;
    double loglik = 0.0;
    double step_norm = 0.0;   // relative norm of the accepted update
    int halvings = 0;         // step halvings needed at this iteration
};

struct FitResult {
    Theta theta_hat;
    Eigen::VectorXd se;          // sqrt(diag(cov_theta))
    Eigen::MatrixXd cov_theta;   // inverse Fisher information at theta_hat
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<IterationRecord> trace;
};

// Moment-based starting values: mu_x from the X sample mean, Sigma_x from the
// X sample covariance minus the average tau_x (eigenvalue-floored to stay PD),
// beta1 from the cross-covariance, beta0 from the Y mean, Sigma_q from the Y
// residual covariance (also floored). Throws DegenerateData when n < 2 or the
// moments do not identify the parameters.
Theta initial_theta(const Dataset& data);

// Maximum likelihood via Fisher scoring with step-halving. Starts from `init`
// when given, otherwise from initial_theta(data). Convergence requires both
// the relative parameter change and the relative loglik change to fall below
// cfg.rel_tol. Non-convergence after cfg.max_iter is reported through
// FitResult::converged, not an exception.
FitResult fit(const Dataset& data, const FitConfig& cfg = {},
              const std::optional<Theta>& init = std::nullopt);

// Standard errors from an information matrix: sqrt of the diagonal of K^{-1}.
// Throws SingularInformation if K cannot be inverted.
Eigen::VectorXd standard_errors(const Eigen::MatrixXd& fisher);

// Inverse of the information matrix (shared by fit and the bias machinery).
Eigen::MatrixXd invert_information(const Eigen::MatrixXd& fisher);

}  // namespace heiv
