#include "heiv/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "heiv/bias.hpp"
#include "heiv/estimator.hpp"
#include "heiv/likelihood.hpp"
#include "heiv/model.hpp"
#include "heiv/montecarlo.hpp"
#include "heiv/oracle.hpp"

namespace heiv {

Theta random_theta(Rng& rng, int v, int m) {
    Theta t;
    t.beta0.resize(v);
    for (int i = 0; i < v; ++i) t.beta0(i) = rng.normal();
    t.beta1.resize(v, m);
    for (int i = 0; i < v; ++i)
        for (int j = 0; j < m; ++j) t.beta1(i, j) = 0.8 * rng.normal();
    t.mu_x.resize(m);
    for (int i = 0; i < m; ++i) t.mu_x(i) = 1.5 * rng.normal();

    auto pd_block = [&rng](int d) {
        Eigen::MatrixXd A(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
        return (A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d)).eval();
    };
    t.sigma_x = pd_block(m);
    t.sigma_q = pd_block(v);
    return t;
}

Dataset random_dataset(Rng& rng, const Theta& theta, int n) {
    const int v = theta.v(), m = theta.m();
    auto psd_block = [&rng](int d) {
        Eigen::MatrixXd A(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) A(i, j) = 0.5 * rng.normal();
        return (A * A.transpose()).eval();
    };
    TauList taus;
    taus.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) taus.emplace_back(psd_block(v), psd_block(m));
    return simulate_from_model(theta, taus, rng);
}

bool all_passed(const std::vector<VerifyCheck>& checks) {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string format_verification(const std::vector<VerifyCheck>& checks) {
    std::string out;
    char line[256];
    for (const auto& c : checks) {
        std::snprintf(line, sizeof(line), "%-4s %-44s max discrepancy %10.3e (tolerance %.0e)\n",
                      c.pass ? "ok" : "FAIL", c.name.c_str(), c.observed, c.tolerance);
        out += line;
    }
    out += all_passed(checks) ? "verification passed\n" : "verification FAILED\n";
    return out;
}

namespace {

double rel_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

double rel_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

struct Instance {
    Theta theta;
    Dataset data;
};

Instance make_instance(Rng& rng, int v, int m, int n) {
    Instance inst;
    inst.theta = random_theta(rng, v, m);
    inst.data = random_dataset(rng, inst.theta, n);
    return inst;
}

}  // namespace

std::vector<VerifyCheck> run_verification(const VerifyOptions& opts) {
    std::vector<VerifyCheck> checks;
    Rng rng(opts.seed, 0);

    // 1. Analytic score against central differences of the log-likelihood.
    {
        VerifyCheck c{"score vs differenced log-likelihood", 1e-6, 0.0, false};
        for (int k = 0; k < 8; ++k) {
            const int v = 1 + static_cast<int>(rng.next_u64() % 2);
            const int m = 1 + static_cast<int>(rng.next_u64() % 2);
            const auto inst = make_instance(rng, v, m, 25);
            Eigen::VectorXd U = score(inst.theta, inst.data);
            U.array() += opts.derivative_perturbation;
            const auto f = [&](const Eigen::VectorXd& x) {
                return log_likelihood(unpack_theta(x, inst.data.dims), inst.data);
            };
            const Eigen::VectorXd U_fd =
                finite_diff_gradient(f, pack_theta(inst.theta), 1e-6);
            c.observed = std::max(c.observed, (U - U_fd).norm() / std::max(1.0, U_fd.norm()));
        }
        c.pass = c.observed < c.tolerance;
        checks.push_back(c);
    }

    // 2. Analytic moment Jacobians (D, V) against central differences.
    {
        VerifyCheck c{"moment Jacobians vs finite differences", 1e-8, 0.0, false};
        for (int k = 0; k < 8; ++k) {
            const int v = 1 + static_cast<int>(rng.next_u64() % 2);
            const int m = 1 + static_cast<int>(rng.next_u64() % 2);
            const auto inst = make_instance(rng, v, m, 3);
            const auto& obs = inst.data.observations[0];
            const auto der = moment_derivatives(inst.theta, obs);
            const Eigen::VectorXd x = pack_theta(inst.theta);
            const auto mu_of = [&](const Eigen::VectorXd& y) {
                return Eigen::VectorXd(mean_and_cov(unpack_theta(y, inst.data.dims), obs).mu);
            };
            const auto vecsig_of = [&](const Eigen::VectorXd& y) {
                const Eigen::MatrixXd S = mean_and_cov(unpack_theta(y, inst.data.dims), obs).sigma;
                return Eigen::VectorXd(
                    Eigen::Map<const Eigen::VectorXd>(S.data(), S.size()));
            };
            c.observed = std::max(c.observed,
                                  rel_gap(der.D, finite_diff_jacobian(mu_of, x, 1e-6)));
            c.observed = std::max(c.observed,
                                  rel_gap(der.V, finite_diff_jacobian(vecsig_of, x, 1e-6)));
        }
        c.pass = c.observed < c.tolerance;
        checks.push_back(c);
    }

    // 3. Analytic moment Hessians against differenced analytic Jacobians
    //    (differencing the exact first derivatives avoids compounding two
    //    finite-difference truncation errors).
    {
        VerifyCheck c{"moment Hessians vs differenced Jacobians", 1e-8, 0.0, false};
        for (int k = 0; k < 6; ++k) {
            const int v = 1 + static_cast<int>(rng.next_u64() % 2);
            const int m = 1 + static_cast<int>(rng.next_u64() % 2);
            const auto inst = make_instance(rng, v, m, 3);
            const auto& obs = inst.data.observations[0];
            const auto der = moment_derivatives(inst.theta, obs);
            const Eigen::VectorXd x = pack_theta(inst.theta);
            const ThetaLayout lay(v, m);
            const int q1 = v + m;
            for (int r = 0; r < lay.p; ++r) {
                const auto D_col = [&](const Eigen::VectorXd& y) {
                    return Eigen::VectorXd(
                        moment_derivatives(unpack_theta(y, inst.data.dims), obs).D.col(r));
                };
                const auto V_col = [&](const Eigen::VectorXd& y) {
                    return Eigen::VectorXd(
                        moment_derivatives(unpack_theta(y, inst.data.dims), obs).V.col(r));
                };
                const Eigen::MatrixXd ddmu_fd = finite_diff_jacobian(D_col, x, 1e-6);
                const Eigen::MatrixXd ddsig_fd = finite_diff_jacobian(V_col, x, 1e-6);
                for (int s = 0; s < lay.p; ++s) {
                    Eigen::VectorXd mu_rs = Eigen::VectorXd::Zero(q1);
                    if (const auto* e = der.ddmu_at(r, s)) mu_rs = *e;
                    Eigen::VectorXd sig_rs = Eigen::VectorXd::Zero(q1 * q1);
                    if (const auto* e = der.ddsigma_at(r, s))
                        sig_rs = Eigen::Map<const Eigen::VectorXd>(e->data(), q1 * q1);
                    c.observed = std::max(c.observed,
                                          rel_gap(mu_rs, Eigen::VectorXd(ddmu_fd.col(s))));
                    c.observed = std::max(c.observed,
                                          rel_gap(sig_rs, Eigen::VectorXd(ddsig_fd.col(s))));
                }
            }
        }
        c.pass = c.observed < c.tolerance;
        checks.push_back(c);
    }

    // 4. Dense stacked materialization vs the per-observation paths.
    {
        VerifyCheck c{"dense stacked score/information/bias", 1e-10, 0.0, false};
        for (int k = 0; k < 12; ++k) {
            const int v = 1 + static_cast<int>(rng.next_u64() % 2);
            const int m = 1 + static_cast<int>(rng.next_u64() % 2);
            const int n = 3 + static_cast<int>(rng.next_u64() % 8);
            const auto inst = make_instance(rng, v, m, n);
            const auto dense = dense_score_info_bias(inst.theta, inst.data);
            const auto fast = evaluate_likelihood(inst.theta, inst.data);
            const Eigen::VectorXd B = bias_vector(inst.theta, inst.data);
            c.observed = std::max(c.observed, rel_gap(fast.score, dense.U));
            c.observed = std::max(c.observed, rel_gap(fast.fisher, dense.K));
            c.observed = std::max(c.observed, rel_gap(B, dense.B));
        }
        c.pass = c.observed < c.tolerance;
        checks.push_back(c);
    }

    // 5. Weighted-least-squares form of the scoring step.
    {
        VerifyCheck c{"scoring step vs weighted regression form", 1e-10, 0.0, false};
        for (int k = 0; k < 6; ++k) {
            const int v = 1 + static_cast<int>(rng.next_u64() % 2);
            const int m = 1 + static_cast<int>(rng.next_u64() % 2);
            const int n = 4 + static_cast<int>(rng.next_u64() % 7);
            const auto inst = make_instance(rng, v, m, n);
            const auto bundle = evaluate_likelihood(inst.theta, inst.data);
            const Eigen::VectorXd step =
                pack_theta(inst.theta) + invert_information(bundle.fisher) * bundle.score;
            c.observed =
                std::max(c.observed, rel_gap(dense_fisher_step(inst.theta, inst.data), step));
        }
        c.pass = c.observed < c.tolerance;
        checks.push_back(c);
    }

    // 6. Generic functional bias with the identity map reproduces the
    //    parameter bias.
    {
        VerifyCheck c{"functional bias of identity map", 1e-12, 0.0, false};
        for (int k = 0; k < 4; ++k) {
            const int v = 1 + static_cast<int>(rng.next_u64() % 2);
            const int m = 1 + static_cast<int>(rng.next_u64() % 2);
            const auto inst = make_instance(rng, v, m, 12);
            const ThetaLayout lay(v, m);
            PsiSpec psi;
            psi.h = lay.p;
            psi.value = [](const Eigen::VectorXd& x) { return x; };
            psi.jacobian = [&lay](const Eigen::VectorXd&) {
                return Eigen::MatrixXd(Eigen::MatrixXd::Identity(lay.p, lay.p));
            };
            psi.hessians = [&lay](const Eigen::VectorXd&) {
                return std::vector<Eigen::MatrixXd>(static_cast<size_t>(lay.p),
                                                    Eigen::MatrixXd::Zero(lay.p, lay.p));
            };
            c.observed = std::max(c.observed, rel_gap(bias_psi(inst.theta, inst.data, psi),
                                                      bias_vector(inst.theta, inst.data)));
        }
        c.pass = c.observed < c.tolerance;
        checks.push_back(c);
    }

    return checks;
}

}  // namespace heiv
