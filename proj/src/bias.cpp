#include "heiv/bias.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace heiv {

BiasAnalysis::BiasAnalysis(const Theta& theta, const Dataset& data) {
    data.validate();
    theta.check_dims();
    if (theta.v() != data.dims.v || theta.m() != data.dims.m)
        throw DimensionMismatch("theta inconsistent with dataset dimensions");

    const ThetaLayout lay(theta.v(), theta.m());
    const int p = lay.p;
    const int q1 = data.dims.q1();
    const int n = data.dims.n;

    // Pass 1: per-observation derivatives, factorizations, information.
    cache_.resize(static_cast<size_t>(n));
    fisher_ = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < n; ++i) {
        auto& c = cache_[static_cast<size_t>(i)];
        c.der = moment_derivatives(theta, data.observations[static_cast<size_t>(i)]);
        Eigen::LLT<Eigen::MatrixXd> llt(c.der.sigma);
        if (llt.info() != Eigen::Success) throw NonPDCovariance(i);
        c.Sinv = llt.solve(Eigen::MatrixXd::Identity(q1, q1));

        for (int r = 0; r < p; ++r) {
            const Eigen::MatrixXd SC_r = c.Sinv * c.der.C(r);
            for (int s = r; s < p; ++s) {
                const double val = c.der.D.col(s).dot(c.Sinv * c.der.D.col(r)) +
                                   0.5 * (c.Sinv * c.der.C(s) * SC_r).trace();
                fisher_(s, r) += val;
                if (s != r) fisher_(r, s) += val;
            }
        }
    }
    cov_theta_ = invert_information(fisher_);

    // Pass 2: contract the cached second derivatives against K^{-1} and
    // accumulate the score-space bias contribution of each observation.
    Eigen::VectorXd accum = Eigen::VectorXd::Zero(p);
    for (auto& c : cache_) {
        c.half_ddmu = Eigen::VectorXd::Zero(q1);
        for (const auto& e : c.der.ddmu) {
            const double w = (e.r == e.s) ? 1.0 : 2.0;  // canonical entry counts both orders
            c.half_ddmu += 0.5 * w * cov_theta_(e.r, e.s) * e.value;
        }
        c.half_ddsigma = Eigen::MatrixXd::Zero(q1, q1);
        for (const auto& e : c.der.ddsigma) {
            const double w = (e.r == e.s) ? 1.0 : 2.0;
            c.half_ddsigma += 0.5 * w * cov_theta_(e.r, e.s) * e.value;
        }

        const Eigen::VectorXd xi_mu = -c.half_ddmu;
        const Eigen::MatrixXd Xi =
            -(c.half_ddsigma + c.der.D * cov_theta_ * c.der.D.transpose());
        const Eigen::MatrixXd W = c.Sinv * Xi * c.Sinv;
        accum += c.der.D.transpose() * (c.Sinv * xi_mu) +
                 0.5 * c.der.V.transpose() * Eigen::Map<const Eigen::VectorXd>(W.data(), q1 * q1);
    }
    bias_theta_ = cov_theta_ * accum;
}

const BiasAnalysis::ObsCache& BiasAnalysis::at(int i) const {
    if (i < 0 || i >= n()) throw IndexOutOfRange("observation index out of range");
    return cache_[static_cast<size_t>(i)];
}

Eigen::VectorXd BiasAnalysis::bias_mu(int i) const {
    const auto& c = at(i);
    return c.der.D * bias_theta_ + c.half_ddmu;
}

Eigen::MatrixXd BiasAnalysis::var_mu(int i) const {
    const auto& c = at(i);
    return c.der.D * cov_theta_ * c.der.D.transpose();
}

Eigen::VectorXd BiasAnalysis::bias_sigma(int i) const {
    const auto& c = at(i);
    const int q1 = static_cast<int>(c.der.mu.size());
    const Eigen::VectorXd first = c.der.V * bias_theta_;
    const Eigen::MatrixXd M =
        Eigen::Map<const Eigen::MatrixXd>(first.data(), q1, q1) + c.half_ddsigma;
    return vech(M);
}

Eigen::VectorXd bias_vector(const Theta& t, const Dataset& data) {
    return BiasAnalysis(t, data).bias_theta();
}

BiasReport correct(const FitResult& fit, const Dataset& data, bool with_per_obs) {
    const BiasAnalysis analysis(fit.theta_hat, data);

    BiasReport rep;
    rep.bias_theta = analysis.bias_theta();
    rep.theta_hat = fit.theta_hat;
    rep.theta_tilde = unpack_theta(pack_theta(fit.theta_hat) - rep.bias_theta, data.dims);
    rep.pd_loss_sigma_x = !is_pd(rep.theta_tilde.sigma_x);
    rep.pd_loss_sigma_q = !is_pd(rep.theta_tilde.sigma_q);

    if (with_per_obs) {
        std::vector<PerObsBias> per;
        per.reserve(static_cast<size_t>(data.dims.n));
        for (int i = 0; i < data.dims.n; ++i)
            per.push_back({analysis.bias_mu(i), analysis.bias_sigma(i), analysis.var_mu(i)});
        rep.per_obs = std::move(per);
    }
    return rep;
}

Eigen::VectorXd bias_mu_i(const Theta& t, const Dataset& data, int i) {
    return BiasAnalysis(t, data).bias_mu(i);
}

Eigen::MatrixXd var_mu_i(const Theta& t, const Dataset& data, int i) {
    return BiasAnalysis(t, data).var_mu(i);
}

Eigen::VectorXd bias_sigma_i(const Theta& t, const Dataset& data, int i) {
    return BiasAnalysis(t, data).bias_sigma(i);
}

Eigen::VectorXd bias_psi(const Theta& t, const Dataset& data, const PsiSpec& psi) {
    if (!psi.value) throw DimensionMismatch("bias_psi requires a value callback");
    const BiasAnalysis analysis(t, data);
    const Eigen::VectorXd x = pack_theta(t);
    const int p = static_cast<int>(x.size());
    const int h = psi.h;

    Eigen::MatrixXd J;
    if (psi.jacobian) {
        J = psi.jacobian(x);
        if (J.rows() != h || J.cols() != p)
            throw DimensionMismatch("psi jacobian must be h x p");
    } else {
        J.resize(h, p);
        for (int r = 0; r < p; ++r) {
            const double step = 1e-5 * std::max(1.0, std::abs(x(r)));
            Eigen::VectorXd xp = x, xm = x;
            xp(r) += step;
            xm(r) -= step;
            J.col(r) = (psi.value(xp) - psi.value(xm)) / (2.0 * step);
        }
    }

    std::vector<Eigen::MatrixXd> H;
    if (psi.hessians) {
        H = psi.hessians(x);
        if (static_cast<int>(H.size()) != h)
            throw DimensionMismatch("psi hessians must supply h matrices");
    } else {
        H.assign(static_cast<size_t>(h), Eigen::MatrixXd::Zero(p, p));
        const Eigen::VectorXd f0 = psi.value(x);
        Eigen::VectorXd steps(p);
        for (int r = 0; r < p; ++r) steps(r) = 1e-4 * std::max(1.0, std::abs(x(r)));
        for (int r = 0; r < p; ++r) {
            Eigen::VectorXd xp = x, xm = x;
            xp(r) += steps(r);
            xm(r) -= steps(r);
            const Eigen::VectorXd diag =
                (psi.value(xp) - 2.0 * f0 + psi.value(xm)) / (steps(r) * steps(r));
            for (int l = 0; l < h; ++l) H[static_cast<size_t>(l)](r, r) = diag(l);
            for (int s = r + 1; s < p; ++s) {
                Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
                xpp(r) += steps(r); xpp(s) += steps(s);
                xpm(r) += steps(r); xpm(s) -= steps(s);
                xmp(r) -= steps(r); xmp(s) += steps(s);
                xmm(r) -= steps(r); xmm(s) -= steps(s);
                const Eigen::VectorXd mixed =
                    (psi.value(xpp) - psi.value(xpm) - psi.value(xmp) + psi.value(xmm)) /
                    (4.0 * steps(r) * steps(s));
                for (int l = 0; l < h; ++l) {
                    H[static_cast<size_t>(l)](r, s) = mixed(l);
                    H[static_cast<size_t>(l)](s, r) = mixed(l);
                }
            }
        }
    }

    Eigen::VectorXd out = J * analysis.bias_theta();
    for (int l = 0; l < h; ++l)
        out(l) += 0.5 * (H[static_cast<size_t>(l)] * analysis.cov_theta()).trace();
    return out;
}

}  // namespace heiv
