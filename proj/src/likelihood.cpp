#include "heiv/likelihood.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace heiv {

namespace {

struct ObsWork {
    Eigen::VectorXd u;        // residual z - mu
    Eigen::MatrixXd Sinv;     // Sigma_i^{-1}
    Eigen::VectorXd Sinv_u;   // Sigma_i^{-1} u
    double log_det = 0.0;     // log |Sigma_i|
};

ObsWork factorize(const Eigen::VectorXd& z, const MomentPair& mom, int index) {
    Eigen::LLT<Eigen::MatrixXd> llt(mom.sigma);
    if (llt.info() != Eigen::Success) throw NonPDCovariance(index);
    ObsWork w;
    w.u = z - mom.mu;
    const int q1 = static_cast<int>(z.size());
    w.Sinv = llt.solve(Eigen::MatrixXd::Identity(q1, q1));
    w.Sinv_u = llt.solve(w.u);
    w.log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return w;
}

}  // namespace

double log_likelihood(const Theta& theta, const Dataset& data) {
    data.validate();
    theta.check_dims();
    double ll = 0.0;
    for (int i = 0; i < data.dims.n; ++i) {
        const auto& obs = data.observations[static_cast<size_t>(i)];
        const auto w = factorize(obs.z, mean_and_cov(theta, obs), i);
        ll += -0.5 * w.log_det - 0.5 * w.u.dot(w.Sinv_u);
    }
    return ll;
}

Eigen::VectorXd score(const Theta& theta, const Dataset& data) {
    return evaluate_likelihood(theta, data).score;
}

Eigen::MatrixXd fisher_information(const Theta& theta, const Dataset& data) {
    return evaluate_likelihood(theta, data).fisher;
}

LikelihoodBundle evaluate_likelihood(const Theta& theta, const Dataset& data) {
    data.validate();
    theta.check_dims();
    const ThetaLayout lay(theta.v(), theta.m());
    const int p = lay.p;

    LikelihoodBundle out;
    out.score = Eigen::VectorXd::Zero(p);
    out.fisher = Eigen::MatrixXd::Zero(p, p);

    std::vector<Eigen::MatrixXd> SinvC(static_cast<size_t>(p));
    for (int i = 0; i < data.dims.n; ++i) {
        const auto& obs = data.observations[static_cast<size_t>(i)];
        const auto der = moment_derivatives(theta, obs);
        const auto w = factorize(obs.z, {der.mu, der.sigma}, i);

        out.loglik += -0.5 * w.log_det - 0.5 * w.u.dot(w.Sinv_u);

        for (int r = 0; r < p; ++r) SinvC[static_cast<size_t>(r)] = w.Sinv * der.C(r);

        for (int r = 0; r < p; ++r) {
            const Eigen::VectorXd a_r = der.D.col(r);
            const auto& SC_r = SinvC[static_cast<size_t>(r)];
            out.score(r) += a_r.dot(w.Sinv_u) - 0.5 * SC_r.trace() +
                            0.5 * w.Sinv_u.dot(der.C(r) * w.Sinv_u);
            for (int s = r; s < p; ++s) {
                const double val = der.D.col(s).dot(w.Sinv * a_r) +
                                   0.5 * (SinvC[static_cast<size_t>(s)] * SC_r).trace();
                out.fisher(s, r) += val;
                if (s != r) out.fisher(r, s) += val;
            }
        }
    }
    return out;
}

}  // namespace heiv
