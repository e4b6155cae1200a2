#pragma once

#include <Eigen/Dense>
#include <functional>

#include "heiv/types.hpp"

namespace heiv {

// Reference-only dense materialization of the stacked estimating equations.
// Everything here builds the full n*q1-dimensional objects, so sizes are
// guarded; the fast per-observation paths are validated against these.
struct DenseBundle {
    Eigen::VectorXd mu;     // N = n*q1 stacked means
    Eigen::MatrixXd Sigma;  // N x N block-diagonal covariance
    Eigen::MatrixXd F;      // (N + N^2) x p: stacked mean Jacobian over vec'd covariance Jacobian
    Eigen::MatrixXd H;      // (N + N^2) square weight: diag(Sigma^-1, (Sigma^-1 kron Sigma^-1)/2)
};

struct DenseResult {
    Eigen::VectorXd U;  // score
    Eigen::MatrixXd K;  // expected information
    Eigen::VectorXd B;  // second-order bias of the MLE
};

// Guarded at n <= 12 (H alone is (n*q1)^2 per side).
DenseBundle dense_bundle(const Theta& t, const Dataset& data);

// Literal stacked evaluation of the score U = F' H u_ext with
// u_ext = (z - mu; vec((z-mu)(z-mu)' - Sigma)), the information K = F' H F,
// and the bias B = K^-1 F' H xi, xi = sum_r Phi_r K^-1 e_r,
// Phi_r = -1/2 (G_r + J_r), J_r = (0; 2 (I_N kron a_r) Dstack).
DenseResult dense_score_info_bias(const Theta& t, const Dataset& data);

// One scoring update in weighted-least-squares form:
// theta+ = (F' H F)^-1 F' H (F theta + u_ext), identical to theta + K^-1 U.
Eigen::VectorXd dense_fisher_step(const Theta& t, const Dataset& data);

// Central differences with componentwise step h * max(1, |x_r|).
Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x, double h);
Eigen::MatrixXd finite_diff_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x, double h);

}  // namespace heiv
