#pragma once

#include <Eigen/Dense>

#include "heiv/model.hpp"
#include "heiv/types.hpp"

namespace heiv {

// Log-likelihood, score vector, and expected (Fisher) information for the
// heteroskedastic errors-in-variables Gaussian model, all evaluated at one
// parameter point. Additive constants (-n*q1/2 * log(2*pi)) are dropped from
// the log-likelihood; differences and derivatives are unaffected.
struct LikelihoodBundle {
    double loglik = 0.0;
    Eigen::VectorXd score;   // length p
    Eigen::MatrixXd fisher;  // p x p, symmetric positive semidefinite
};

// Log-likelihood only. Throws NonPDCovariance (with the 0-based observation
// index) if any per-observation covariance fails its Cholesky factorization.
double log_likelihood(const Theta& theta, const Dataset& data);

// Score (gradient of log_likelihood in packed-parameter order).
Eigen::VectorXd score(const Theta& theta, const Dataset& data);

// Expected information: K[s,r] = sum_i a_s' S^-1 a_r + tr(S^-1 C_r S^-1 C_s)/2.
Eigen::MatrixXd fisher_information(const Theta& theta, const Dataset& data);

// All three in one pass over the data (shared per-observation factorizations).
LikelihoodBundle evaluate_likelihood(const Theta& theta, const Dataset& data);

}  // namespace heiv
