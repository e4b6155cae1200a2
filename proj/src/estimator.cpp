#include "heiv/estimator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace heiv {

namespace {

// Clamp the eigenvalues of a symmetric matrix from below so the result is PD.
Eigen::MatrixXd eigen_floor(const Eigen::MatrixXd& S, double floor_value) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor_value);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

bool theta_is_usable(const Theta& t, const Dataset& data) {
    if (!t.valid()) return false;
    for (const auto& obs : data.observations) {
        if (!is_pd(mean_and_cov(t, obs).sigma)) return false;
    }
    return true;
}

}  // namespace

Theta initial_theta(const Dataset& data) {
    data.validate();
    const int v = data.dims.v, m = data.dims.m, n = data.dims.n;
    if (n < 2) throw DegenerateData("need at least 2 observations for starting values");

    Eigen::MatrixXd Y(n, v), X(n, m);
    Eigen::MatrixXd mean_tau_y = Eigen::MatrixXd::Zero(v, v);
    Eigen::MatrixXd mean_tau_x = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < n; ++i) {
        const auto& obs = data.observations[static_cast<size_t>(i)];
        Y.row(i) = obs.y(v).transpose();
        X.row(i) = obs.x(v).transpose();
        mean_tau_y += obs.tau_y;
        mean_tau_x += obs.tau_x;
    }
    mean_tau_y /= n;
    mean_tau_x /= n;

    const Eigen::VectorXd ybar = Y.colwise().mean();
    const Eigen::VectorXd xbar = X.colwise().mean();
    const Eigen::MatrixXd Yc = Y.rowwise() - ybar.transpose();
    const Eigen::MatrixXd Xc = X.rowwise() - xbar.transpose();
    const Eigen::MatrixXd Sxx = (Xc.transpose() * Xc) / (n - 1);
    const Eigen::MatrixXd Syy = (Yc.transpose() * Yc) / (n - 1);
    const Eigen::MatrixXd Syx = (Yc.transpose() * Xc) / (n - 1);

    const double x_scale = std::max(1.0, X.cwiseAbs().maxCoeff());
    if (Sxx.cwiseAbs().maxCoeff() <= 1e-12 * x_scale * x_scale)
        throw DegenerateData("covariates have no sample variation");

    constexpr double kFloor = 1e-6;
    Theta t;
    t.mu_x = xbar;
    t.sigma_x = eigen_floor(Sxx - mean_tau_x, kFloor);

    // Regression of Y on the observed X: Cov(Y,X) = beta1 * Cov(X_obs), where
    // Cov(X_obs) is approximated by Sigma_x + mean(tau_x).
    const Eigen::MatrixXd cov_xobs = t.sigma_x + mean_tau_x;
    Eigen::LLT<Eigen::MatrixXd> llt(cov_xobs);
    if (llt.info() != Eigen::Success)
        throw DegenerateData("observed covariate covariance is not positive definite");
    t.beta1 = llt.solve(Syx.transpose()).transpose();
    t.beta0 = ybar - t.beta1 * xbar;
    t.sigma_q =
        eigen_floor(Syy - t.beta1 * t.sigma_x * t.beta1.transpose() - mean_tau_y, kFloor);
    t.check_dims();
    return t;
}

FitResult fit(const Dataset& data, const FitConfig& cfg, const std::optional<Theta>& init) {
    data.validate();
    Theta theta = init ? *init : initial_theta(data);
    theta.check_dims();
    if (theta.v() != data.dims.v || theta.m() != data.dims.m)
        throw DimensionMismatch("starting values inconsistent with dataset dimensions");
    if (!theta_is_usable(theta, data))
        throw DegenerateData("starting values do not give positive definite covariances");

    const ModelDims dims = data.dims;
    Eigen::VectorXd x = pack_theta(theta);
    LikelihoodBundle cur = evaluate_likelihood(theta, data);

    FitResult res;
    res.trace.reserve(static_cast<size_t>(cfg.max_iter));

    for (int it = 1; it <= cfg.max_iter; ++it) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.fisher);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw SingularInformation("information matrix is not positive definite");
        const Eigen::VectorXd delta = ldlt.solve(cur.score);

        // Step halving: accept the first scaled step that keeps every
        // covariance PD and does not decrease the log-likelihood.
        double scale = 1.0;
        int halvings = 0;
        bool accepted = false;
        Theta cand;
        LikelihoodBundle cand_eval;
        while (halvings <= cfg.step_halving_max) {
            cand = unpack_theta(x + scale * delta, dims);
            if (theta_is_usable(cand, data)) {
                cand_eval = evaluate_likelihood(cand, data);
                if (cand_eval.loglik >= cur.loglik - 1e-12 * (1.0 + std::abs(cur.loglik))) {
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
            ++halvings;
        }

        const double rel_step =
            (scale * delta).norm() / std::max(1.0, x.norm());
        if (!accepted) {
            // The full Newton direction is degenerate at machine precision;
            // treat a vanishing proposed step as convergence.
            if (delta.norm() / std::max(1.0, x.norm()) < cfg.rel_tol) {
                res.converged = true;
                res.iterations = it - 1;
                break;
            }
            res.converged = false;
            res.iterations = it;
            break;
        }

        const double rel_ll =
            std::abs(cand_eval.loglik - cur.loglik) / std::max(1.0, std::abs(cur.loglik));
        x += scale * delta;
        theta = std::move(cand);
        cur = std::move(cand_eval);
        res.trace.push_back({it, cur.loglik, rel_step, halvings});
        res.iterations = it;

        if (rel_step < cfg.rel_tol && rel_ll < cfg.rel_tol) {
            res.converged = true;
            break;
        }
    }

    res.theta_hat = theta;
    res.loglik = cur.loglik;
    res.cov_theta = invert_information(cur.fisher);
    res.se = res.cov_theta.diagonal().cwiseMax(0.0).cwiseSqrt();
    return res;
}

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& fisher) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(fisher);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw SingularInformation("information matrix is not invertible");
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (!(dmax > 0.0) || d.minCoeff() <= dmax * 1e-14)
        throw SingularInformation("information matrix is numerically singular");
    const int p = static_cast<int>(fisher.rows());
    Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    return 0.5 * (inv + inv.transpose());
}

Eigen::VectorXd standard_errors(const Eigen::MatrixXd& fisher) {
    return invert_information(fisher).diagonal().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace heiv
