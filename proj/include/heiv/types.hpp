#pragma once

#include <Eigen/Dense>
#include <vector>

#include "heiv/errors.hpp"

namespace heiv {

// Dimension bookkeeping for the errors-in-variables model
//   Y_i = beta0 + beta1 x_i + q_i + eta_y,  X_i = x_i + eta_x,
// where Y has dimension v, x has dimension m, and the observed record is
// z_i = (Y_i^T, X_i^T)^T of dimension q1 = v + m.
struct ModelDims {
    int v = 0;  // response dimension
    int m = 0;  // covariate dimension
    int n = 0;  // sample size

    int q1() const { return v + m; }
    int q2() const { return q1() * (q1() + 1) / 2; }
    // free parameters: beta0 (v), vec beta1 (vm), mu_x (m),
    // vech Sigma_x (m(m+1)/2), vech Sigma_q (v(v+1)/2)
    int p() const { return v * (m + 1) + m + m * (m + 1) / 2 + v * (v + 1) / 2; }

    void validate() const {
        if (v < 1 || m < 1) throw DimensionMismatch("model requires v >= 1 and m >= 1");
        if (n < 2) throw DimensionMismatch("model requires n >= 2");
    }
};

// Structured parameter point. sigma_x and sigma_q must be symmetric and are
// positive definite at a valid model point; validity is checked, not assumed,
// because Fisher-scoring iterates may leave the PD cone.
struct Theta {
    Eigen::VectorXd beta0;    // v
    Eigen::MatrixXd beta1;    // v x m
    Eigen::VectorXd mu_x;     // m
    Eigen::MatrixXd sigma_x;  // m x m symmetric
    Eigen::MatrixXd sigma_q;  // v x v symmetric

    int v() const { return static_cast<int>(beta0.size()); }
    int m() const { return static_cast<int>(mu_x.size()); }

    void check_dims() const;
    // Symmetry of sigma_x/sigma_q plus positive definiteness of both.
    bool valid() const;
};

// One measured record with its known error covariances.
struct Observation {
    Eigen::VectorXd z;      // q1 = v + m, Y stacked above X
    Eigen::MatrixXd tau_y;  // v x v symmetric PSD
    Eigen::MatrixXd tau_x;  // m x m symmetric PSD

    Eigen::VectorXd y(int v) const { return z.head(v); }
    Eigen::VectorXd x(int v) const { return z.tail(z.size() - v); }

    void validate(int v, int m) const;
};

struct Dataset {
    ModelDims dims;
    std::vector<Observation> observations;

    void validate() const;
};

// Checks symmetry up to roundoff scale and PSD with eigenvalue tolerance.
bool is_symmetric(const Eigen::MatrixXd& M, double tol = 1e-8);
bool is_psd(const Eigen::MatrixXd& M, double tol = 1e-10);
bool is_pd(const Eigen::MatrixXd& M);

}  // namespace heiv
