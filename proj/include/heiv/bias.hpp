#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "heiv/estimator.hpp"
#include "heiv/types.hpp"

namespace heiv {

// Second-order bias and variance of the per-observation fitted moments.
struct PerObsBias {
    Eigen::VectorXd bias_mu;     // q1: Taylor bias of mu_i(theta_hat)
    Eigen::VectorXd bias_sigma;  // q2 = q1(q1+1)/2: vech of the bias of Sigma_i(theta_hat)
    Eigen::MatrixXd var_mu;      // q1 x q1: first-order variance of mu_i(theta_hat)
};

struct BiasReport {
    Eigen::VectorXd bias_theta;  // p: O(1/n) bias of the MLE, evaluated at theta_hat
    Theta theta_hat;             // uncorrected estimate (retained alongside the correction)
    Theta theta_tilde;           // corrected: unpack(pack(theta_hat) - bias_theta)
    bool pd_loss_sigma_x = false;  // corrected Sigma_x left the PD cone
    bool pd_loss_sigma_q = false;  // corrected Sigma_q left the PD cone
    std::optional<std::vector<PerObsBias>> per_obs;
};

// One-pass bias analysis at a fixed parameter point: builds the information
// matrix, its inverse, the parameter bias vector, and enough per-observation
// state to answer the fitted-moment queries without re-traversing the data.
//
// The parameter bias accumulates per observation as
//   B = K^{-1} sum_i [ D_i' S_i^{-1} xi_mu_i + (tr(C_{r,i} W_i)/2)_r ],
//   W_i = S_i^{-1} Xi_i S_i^{-1},
//   xi_mu_i = -1/2 sum_{r,s} (K^{-1})_{rs} d2mu_i/dr ds,
//   Xi_i    = -1/2 [ sum_{r,s} (K^{-1})_{rs} d2Sigma_i/dr ds + 2 D_i K^{-1} D_i' ],
// which is the blockwise realization of the stacked weighted-least-squares
// bias formula (the dense oracle materializes that stacked form literally and
// the two are tested to agree to 1e-10).
class BiasAnalysis {
  public:
    BiasAnalysis(const Theta& theta, const Dataset& data);

    const Eigen::VectorXd& bias_theta() const { return bias_theta_; }
    const Eigen::MatrixXd& fisher() const { return fisher_; }
    const Eigen::MatrixXd& cov_theta() const { return cov_theta_; }

    // Taylor-series bias/variance of the fitted per-observation moments:
    //   B(mu_i)    = D_i B + 1/2 sum_{r,s} (K^{-1})_{rs} d2mu_i
    //   Var(mu_i)  = D_i K^{-1} D_i'
    //   B(Sigma_i) = sum_r B_r C_{r,i} + 1/2 sum_{r,s} (K^{-1})_{rs} d2Sigma_i, vech'd
    Eigen::VectorXd bias_mu(int i) const;
    Eigen::MatrixXd var_mu(int i) const;
    Eigen::VectorXd bias_sigma(int i) const;

    int n() const { return static_cast<int>(cache_.size()); }

  private:
    struct ObsCache {
        PerObsDerivatives der;
        Eigen::MatrixXd Sinv;
        Eigen::VectorXd half_ddmu;     // 1/2 sum_{r,s} (K^{-1})_{rs} d2mu
        Eigen::MatrixXd half_ddsigma;  // 1/2 sum_{r,s} (K^{-1})_{rs} d2Sigma
    };
    const ObsCache& at(int i) const;

    std::vector<ObsCache> cache_;
    Eigen::MatrixXd fisher_;
    Eigen::MatrixXd cov_theta_;
    Eigen::VectorXd bias_theta_;
};

// O(1/n) bias vector of the MLE, evaluated at t (normally theta_hat).
Eigen::VectorXd bias_vector(const Theta& t, const Dataset& data);

// Bias-corrected estimate theta_tilde = theta_hat - B(theta_hat), with the
// exact packed-arithmetic identity pack(theta_tilde) = pack(theta_hat) - B.
// Corrected covariance blocks are never projected back to the PD cone; loss
// of positive definiteness is flagged and the uncorrected estimate retained.
BiasReport correct(const FitResult& fit, const Dataset& data, bool with_per_obs = false);

// Standalone per-observation queries (each builds a fresh BiasAnalysis; use
// the class directly when querying many observations).
Eigen::VectorXd bias_mu_i(const Theta& t, const Dataset& data, int i);
Eigen::MatrixXd var_mu_i(const Theta& t, const Dataset& data, int i);
Eigen::VectorXd bias_sigma_i(const Theta& t, const Dataset& data, int i);

// A smooth functional Psi: R^p -> R^h of the packed parameters. jacobian and
// hessians are optional; when absent they are replaced by central finite
// differences of `value` with steps 1e-5 (first order) and 1e-4 (second
// order), each scaled by max(1, |theta_r|).
struct PsiSpec {
    int h = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> value;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;  // h x p
    std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)> hessians;  // h of p x p
};

// Second-order bias of Psi(theta_hat):
//   B(Psi)_l = (J B)_l + 1/2 tr(H_l K^{-1}).
Eigen::VectorXd bias_psi(const Theta& t, const Dataset& data, const PsiSpec& psi);

}  // namespace heiv
