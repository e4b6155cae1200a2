#pragma once

#include <string>
#include <utility>
#include <vector>

#include "heiv/types.hpp"

namespace heiv {

// vech stacks the columns of the lower triangle, diagonal included,
// column-major: (0,0),(1,0),...,(d-1,0),(1,1),... This single convention is
// used everywhere (packing, symmetric derivative directions, vech outputs).
Eigen::VectorXd vech(const Eigen::MatrixXd& S);
Eigen::MatrixXd unvech(const Eigen::VectorXd& x, int d);
// (row, col) pairs with row >= col in vech order.
std::vector<std::pair<int, int>> vech_pairs(int d);
// Elementary symmetric direction for vech element k: a unit at the diagonal
// position, or units at both (r,c) and (c,r) for an off-diagonal element.
Eigen::MatrixXd sym_unit(int d, int row, int col);

// Index layout of the packed parameter vector
// (beta0^T, vec(beta1)^T, mu_x^T, vech(Sigma_x)^T, vech(Sigma_q)^T).
struct ThetaLayout {
    int v = 0, m = 0;
    int beta0_begin = 0;
    int beta1_begin = 0;
    int mux_begin = 0;
    int sigx_begin = 0;
    int sigq_begin = 0;
    int p = 0;

    ThetaLayout() = default;
    ThetaLayout(int v_, int m_);

    enum class Block { Beta0, Beta1, MuX, SigmaX, SigmaQ };
    Block block(int r) const;
    // (row, col) of vec(beta1) index, column-major.
    std::pair<int, int> beta1_coords(int r) const;
    std::pair<int, int> sigx_coords(int r) const;  // vech pair of Sigma_x
    std::pair<int, int> sigq_coords(int r) const;  // vech pair of Sigma_q
};

Eigen::VectorXd pack_theta(const Theta& t);
Theta unpack_theta(const Eigen::VectorXd& x, const ModelDims& dims);

// mu_i(theta) = ((beta0 + beta1 mu_x)^T, mu_x^T)^T and
// Sigma_i(theta) = [[beta1 Sigma_x beta1^T + Sigma_q + tau_y, beta1 Sigma_x],
//                   [Sigma_x beta1^T,                         Sigma_x + tau_x]].
struct MomentPair {
    Eigen::VectorXd mu;     // q1
    Eigen::MatrixXd sigma;  // q1 x q1, symmetric by construction
};
MomentPair mean_and_cov(const Theta& t, const Observation& obs);

// All first and second derivatives of (mu_i, Sigma_i) with respect to the
// packed parameter vector, exploiting their sparsity:
//   columns of D are zero on the vech(Sigma_x)/vech(Sigma_q) ranges,
//   columns of V are zero on the beta0 and mu_x ranges,
//   ddmu is nonzero only for (beta1, mu_x) pairs,
//   ddsigma only for (beta1, beta1) and (beta1, vech Sigma_x) pairs.
struct PerObsDerivatives {
    Eigen::VectorXd mu;     // q1
    Eigen::MatrixXd sigma;  // q1 x q1
    Eigen::MatrixXd D;      // q1 x p, column r = d mu / d theta_r
    Eigen::MatrixXd V;      // q1^2 x p, column r = vec(d Sigma / d theta_r)

    struct MuEntry {
        int r, s;  // canonical r <= s
        Eigen::VectorXd value;  // q1
    };
    struct SigmaEntry {
        int r, s;  // canonical r <= s
        Eigen::MatrixXd value;  // q1 x q1, symmetric
    };
    std::vector<MuEntry> ddmu;
    std::vector<SigmaEntry> ddsigma;

    // Column r of V reshaped back to q1 x q1.
    Eigen::MatrixXd C(int r) const;
    // Symmetric lookups; null when the second derivative vanishes.
    const Eigen::VectorXd* ddmu_at(int r, int s) const;
    const Eigen::MatrixXd* ddsigma_at(int r, int s) const;
};

PerObsDerivatives moment_derivatives(const Theta& t, const Observation& obs);

// Display names for the packed parameters; the univariate model uses the
// conventional beta0, beta1, mu_x, sigma_x2, sigma2.
std::vector<std::string> parameter_names(int v, int m);

}  // namespace heiv
