#include "heiv/montecarlo.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "heiv/bias.hpp"

namespace heiv {

namespace {

// Square root factor A with A A' = M for a symmetric PSD M (eigenvalue
// clamped at zero so exactly-singular error variances are acceptable).
Eigen::MatrixXd sqrt_factor(const Eigen::MatrixXd& M) {
    if (M.rows() == 1) return Eigen::MatrixXd::Constant(1, 1, std::sqrt(std::max(0.0, M(0, 0))));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Eigen::VectorXd draw_normal(Rng& rng, int d) {
    Eigen::VectorXd out(d);
    for (int i = 0; i < d; ++i) out(i) = rng.normal();
    return out;
}

std::string scenario_name(ScenarioKind kind) {
    return kind == ScenarioKind::UniformHetero ? "uniform" : "covariate";
}

}  // namespace

Theta default_theta_true() {
    Theta t;
    t.beta0 = Eigen::VectorXd::Constant(1, -2.0);
    t.beta1 = Eigen::MatrixXd::Constant(1, 1, 0.5);
    t.mu_x = Eigen::VectorXd::Constant(1, -2.0);
    t.sigma_x = Eigen::MatrixXd::Constant(1, 1, 4.0);
    t.sigma_q = Eigen::MatrixXd::Constant(1, 1, 10.0);
    return t;
}

ScenarioDesign make_design(const Scenario& scn) {
    scn.theta_true.check_dims();
    if (scn.theta_true.v() != 1 || scn.theta_true.m() != 1)
        throw DimensionMismatch("shipped scenario generators are univariate; supply tau lists for general v, m");
    if (scn.n < 10) throw DimensionMismatch("scenario requires n >= 10");

    Rng rng(scn.seed, 0);  // stream 0 is reserved for the fixed design
    ScenarioDesign design;
    design.taus.reserve(static_cast<size_t>(scn.n));
    if (scn.kind == ScenarioKind::UniformHetero) {
        // Per observation: sqrt(tau_x) first, then sqrt(tau_y).
        for (int i = 0; i < scn.n; ++i) {
            const double sd_x = rng.uniform(0.5, 1.5);
            const double sd_y = rng.uniform(0.5, 4.0);
            design.taus.emplace_back(Eigen::MatrixXd::Constant(1, 1, sd_y * sd_y),
                                     Eigen::MatrixXd::Constant(1, 1, sd_x * sd_x));
        }
    } else {
        // One-time latent covariate draw x0_i, fixed ever after, defines the
        // variances sqrt(tau_x) = 0.1 |x0|, sqrt(tau_y) = 0.1 |beta0 + c x0|.
        const double beta0 = scn.theta_true.beta0(0);
        const double c =
            std::isnan(scn.tauy_slope) ? scn.theta_true.beta1(0, 0) : scn.tauy_slope;
        const double mu = scn.theta_true.mu_x(0);
        const double sd = std::sqrt(scn.theta_true.sigma_x(0, 0));
        design.x0.resize(scn.n);
        for (int i = 0; i < scn.n; ++i) {
            const double x0 = mu + sd * rng.normal();
            design.x0(i) = x0;
            const double sd_x = 0.1 * std::abs(x0);
            const double sd_y = 0.1 * std::abs(beta0 + c * x0);
            design.taus.emplace_back(Eigen::MatrixXd::Constant(1, 1, sd_y * sd_y),
                                     Eigen::MatrixXd::Constant(1, 1, sd_x * sd_x));
        }
    }
    return design;
}

TauList generate_taus(const Scenario& scn) { return make_design(scn).taus; }

Dataset simulate_from_model(const Theta& theta, const TauList& taus, Rng& rng) {
    theta.check_dims();
    const int v = theta.v(), m = theta.m();
    const int n = static_cast<int>(taus.size());

    const Eigen::MatrixXd Lx = sqrt_factor(theta.sigma_x);
    const Eigen::MatrixXd Lq = sqrt_factor(theta.sigma_q);

    Dataset data;
    data.dims = {v, m, n};
    data.observations.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& [tau_y, tau_x] = taus[static_cast<size_t>(i)];
        // Draw order per observation: latent x, equation error q, then the
        // measurement errors on Y and on X.
        const Eigen::VectorXd x = theta.mu_x + Lx * draw_normal(rng, m);
        const Eigen::VectorXd q = Lq * draw_normal(rng, v);
        const Eigen::VectorXd eta_y = sqrt_factor(tau_y) * draw_normal(rng, v);
        const Eigen::VectorXd eta_x = sqrt_factor(tau_x) * draw_normal(rng, m);

        Observation obs;
        obs.z.resize(v + m);
        obs.z.head(v) = theta.beta0 + theta.beta1 * x + q + eta_y;
        obs.z.tail(m) = x + eta_x;
        obs.tau_y = tau_y;
        obs.tau_x = tau_x;
        data.observations.push_back(std::move(obs));
    }
    return data;
}

Dataset simulate_dataset(const Scenario& scn, const ScenarioDesign& design, int rep_index) {
    if (rep_index < 0) throw IndexOutOfRange("replication index must be nonnegative");
    if (static_cast<int>(design.taus.size()) != scn.n)
        throw DimensionMismatch("design tau list length does not match scenario n");
    Rng rng(scn.seed, static_cast<std::uint64_t>(rep_index) + 1);
    if (scn.kind == ScenarioKind::UniformHetero) {
        return simulate_from_model(scn.theta_true, design.taus, rng);
    }

    // Covariate design: the latent covariates are the fixed x0 draw; only
    // the equation and measurement errors are fresh per replication.
    if (design.x0.size() != scn.n)
        throw DimensionMismatch("covariate design requires the fixed x0 vector");
    const Theta& t = scn.theta_true;
    Dataset data;
    data.dims = {1, 1, scn.n};
    data.observations.reserve(static_cast<size_t>(scn.n));
    const double sq = std::sqrt(t.sigma_q(0, 0));
    for (int i = 0; i < scn.n; ++i) {
        const auto& [tau_y, tau_x] = design.taus[static_cast<size_t>(i)];
        // Draw order per observation: equation error q, then eta_y, eta_x.
        const double q = sq * rng.normal();
        const double eta_y = std::sqrt(std::max(0.0, tau_y(0, 0))) * rng.normal();
        const double eta_x = std::sqrt(std::max(0.0, tau_x(0, 0))) * rng.normal();

        Observation obs;
        obs.z.resize(2);
        obs.z(0) = t.beta0(0) + t.beta1(0, 0) * design.x0(i) + q + eta_y;
        obs.z(1) = design.x0(i) + eta_x;
        obs.tau_y = tau_y;
        obs.tau_x = tau_x;
        data.observations.push_back(std::move(obs));
    }
    return data;
}

SimSummary run_study(const Scenario& scn, int reps, const FitConfig& cfg, int threads) {
    if (reps < 100) throw DimensionMismatch("a study needs at least 100 replications");
    const ScenarioDesign design = make_design(scn);
    const Eigen::VectorXd truth = pack_theta(scn.theta_true);
    const int p = static_cast<int>(truth.size());

    struct RepResult {
        bool ok = false;
        Eigen::VectorXd mle, bce;
    };
    std::vector<RepResult> slots(static_cast<size_t>(reps));

    auto run_one = [&](int k) {
        auto& slot = slots[static_cast<size_t>(k)];
        try {
            const Dataset data = simulate_dataset(scn, design, k);
            const FitResult fr = fit(data, cfg);
            if (!fr.converged) return;
            slot.mle = pack_theta(fr.theta_hat);
            slot.bce = slot.mle - bias_vector(fr.theta_hat, data);
            slot.ok = true;
        } catch (const Error&) {
            slot.ok = false;  // counted as discarded
        }
    };

    if (threads <= 1) {
        for (int k = 0; k < reps; ++k) run_one(k);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(threads));
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (int k = next.fetch_add(1); k < reps; k = next.fetch_add(1)) run_one(k);
            });
        for (auto& th : pool) th.join();
    }

    // Deterministic reduction: always in replication-index order.
    SimSummary s;
    s.scenario_name = scenario_name(scn.kind);
    s.n = scn.n;
    s.param_names = parameter_names(scn.theta_true.v(), scn.theta_true.m());
    s.theta_true = truth;
    s.requested = reps;

    Eigen::VectorXd sum_mle = Eigen::VectorXd::Zero(p), sum_bce = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd sq_mle = Eigen::VectorXd::Zero(p), sq_bce = Eigen::VectorXd::Zero(p);
    for (const auto& slot : slots) {
        if (!slot.ok) continue;
        ++s.converged;
        sum_mle += slot.mle;
        sum_bce += slot.bce;
        sq_mle += (slot.mle - truth).cwiseAbs2();
        sq_bce += (slot.bce - truth).cwiseAbs2();
    }
    s.discarded = s.requested - s.converged;
    if (s.discarded > reps / 100)
        throw TooManyFailures("more than 1% of replications failed to converge (" +
                              std::to_string(s.discarded) + " of " + std::to_string(reps) + ")");

    const double cnt = s.converged;
    s.mean_mle = sum_mle / cnt;
    s.mean_bce = sum_bce / cnt;
    s.rmse_mle = (sq_mle / cnt).cwiseSqrt();
    s.rmse_bce = (sq_bce / cnt).cwiseSqrt();

    s.sd_mle.resize(p);
    s.sd_bce.resize(p);
    s.rel_bias_mle.resize(p);
    s.rel_bias_bce.resize(p);
    Eigen::VectorXd css_mle = Eigen::VectorXd::Zero(p), css_bce = Eigen::VectorXd::Zero(p);
    for (const auto& slot : slots) {
        if (!slot.ok) continue;
        css_mle += (slot.mle - s.mean_mle).cwiseAbs2();
        css_bce += (slot.bce - s.mean_bce).cwiseAbs2();
    }
    for (int r = 0; r < p; ++r) {
        s.sd_mle(r) = std::sqrt(css_mle(r) / (cnt - 1.0));
        s.sd_bce(r) = std::sqrt(css_bce(r) / (cnt - 1.0));
        // Relative bias (mean - true)/true; absolute when the truth is zero.
        const double denom = truth(r) != 0.0 ? truth(r) : 1.0;
        s.rel_bias_mle(r) = (s.mean_mle(r) - truth(r)) / denom;
        s.rel_bias_bce(r) = (s.mean_bce(r) - truth(r)) / denom;
    }
    return s;
}

std::string format_table(const SimSummary& s) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "scenario %s, n = %d, converged %d / %d\n",
                  s.scenario_name.c_str(), s.n, s.converged, s.requested);
    out += line;
    std::snprintf(line, sizeof(line), "%-12s %14s %14s %14s %14s\n", "parameter",
                  "MLE rel bias", "MLE sqrt(MSE)", "BCE rel bias", "BCE sqrt(MSE)");
    out += line;
    for (size_t r = 0; r < s.param_names.size(); ++r) {
        std::snprintf(line, sizeof(line), "%-12s %14.4f %14.4f %14.4f %14.4f\n",
                      s.param_names[r].c_str(), s.rel_bias_mle(static_cast<int>(r)),
                      s.rmse_mle(static_cast<int>(r)), s.rel_bias_bce(static_cast<int>(r)),
                      s.rmse_bce(static_cast<int>(r)));
        out += line;
    }
    return out;
}

std::string format_records(const SimSummary& s) {
    std::string out = "scenario,n,param,est,rel_bias,rmse\n";
    char line[256];
    for (size_t r = 0; r < s.param_names.size(); ++r) {
        const int i = static_cast<int>(r);
        std::snprintf(line, sizeof(line), "%s,%d,%s,mle,%.17g,%.17g\n", s.scenario_name.c_str(),
                      s.n, s.param_names[r].c_str(), s.rel_bias_mle(i), s.rmse_mle(i));
        out += line;
        std::snprintf(line, sizeof(line), "%s,%d,%s,bce,%.17g,%.17g\n", s.scenario_name.c_str(),
                      s.n, s.param_names[r].c_str(), s.rel_bias_bce(i), s.rmse_bce(i));
        out += line;
    }
    return out;
}

}  // namespace heiv
