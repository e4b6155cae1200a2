#include "heiv/report.hpp"

#include <cstdio>

namespace heiv {

Report make_report(const FitResult& fit, const BiasReport* bias, const Dataset& data) {
    Report rep;
    rep.names = parameter_names(data.dims.v, data.dims.m);
    rep.mle = pack_theta(fit.theta_hat);
    rep.se = fit.se;
    rep.loglik = fit.loglik;
    rep.n = data.dims.n;
    rep.iterations = fit.iterations;
    rep.converged = fit.converged;
    if (bias != nullptr) {
        rep.bias = bias->bias_theta;
        rep.bce = rep.mle - rep.bias;
        rep.pd_loss_sigma_x = bias->pd_loss_sigma_x;
        rep.pd_loss_sigma_q = bias->pd_loss_sigma_q;
        rep.per_obs = bias->per_obs;
    }
    return rep;
}

std::string format_report(const Report& rep) {
    std::string out;
    char line[256];
    if (rep.corrected())
        std::snprintf(line, sizeof(line), "%-12s %12s %12s %12s %12s\n", "parameter", "MLE",
                      "S.E.", "Bias", "BCE");
    else
        std::snprintf(line, sizeof(line), "%-12s %12s %12s\n", "parameter", "MLE", "S.E.");
    out += line;
    for (size_t r = 0; r < rep.names.size(); ++r) {
        const int i = static_cast<int>(r);
        if (rep.corrected())
            std::snprintf(line, sizeof(line), "%-12s %12.4f %12.4f %12.4f %12.4f\n",
                          rep.names[r].c_str(), rep.mle(i), rep.se(i), rep.bias(i), rep.bce(i));
        else
            std::snprintf(line, sizeof(line), "%-12s %12.4f %12.4f\n", rep.names[r].c_str(),
                          rep.mle(i), rep.se(i));
        out += line;
    }
    std::snprintf(line, sizeof(line),
                  "n = %d, loglik = %.4f, iterations = %d, converged = %s\n", rep.n, rep.loglik,
                  rep.iterations, rep.converged ? "yes" : "no");
    out += line;
    if (rep.pd_loss_sigma_x)
        out += "warning: corrected sigma_x is not positive definite; uncorrected block retained in the MLE column\n";
    if (rep.pd_loss_sigma_q)
        out += "warning: corrected sigma_q is not positive definite; uncorrected block retained in the MLE column\n";
    if (rep.per_obs) {
        out += "\nper-observation fitted-moment diagnostics\n";
        std::snprintf(line, sizeof(line), "%-6s %-10s %14s %14s %14s\n", "obs", "block", "index",
                      "bias", "variance");
        out += line;
        for (size_t i = 0; i < rep.per_obs->size(); ++i) {
            const auto& po = (*rep.per_obs)[i];
            for (Eigen::Index k = 0; k < po.bias_mu.size(); ++k) {
                std::snprintf(line, sizeof(line), "%-6zu %-10s %14lld %14.6f %14.6f\n", i + 1,
                              "mu", static_cast<long long>(k + 1), po.bias_mu(k),
                              po.var_mu(k, k));
                out += line;
            }
            for (Eigen::Index k = 0; k < po.bias_sigma.size(); ++k) {
                std::snprintf(line, sizeof(line), "%-6zu %-10s %14lld %14.6f %14s\n", i + 1,
                              "sigma", static_cast<long long>(k + 1), po.bias_sigma(k), "-");
                out += line;
            }
        }
    }
    return out;
}

std::string format_key_values(const Report& rep) {
    std::string out;
    char line[256];
    for (size_t r = 0; r < rep.names.size(); ++r) {
        const int i = static_cast<int>(r);
        std::snprintf(line, sizeof(line), "param.%s.mle=%.17g\n", rep.names[r].c_str(),
                      rep.mle(i));
        out += line;
        std::snprintf(line, sizeof(line), "param.%s.se=%.17g\n", rep.names[r].c_str(), rep.se(i));
        out += line;
        if (rep.corrected()) {
            std::snprintf(line, sizeof(line), "param.%s.bias=%.17g\n", rep.names[r].c_str(),
                          rep.bias(i));
            out += line;
            std::snprintf(line, sizeof(line), "param.%s.bce=%.17g\n", rep.names[r].c_str(),
                          rep.bce(i));
            out += line;
        }
    }
    std::snprintf(line, sizeof(line), "loglik=%.17g\n", rep.loglik);
    out += line;
    std::snprintf(line, sizeof(line), "n=%d\n", rep.n);
    out += line;
    std::snprintf(line, sizeof(line), "iterations=%d\n", rep.iterations);
    out += line;
    std::snprintf(line, sizeof(line), "converged=%s\n", rep.converged ? "true" : "false");
    out += line;
    if (rep.corrected()) {
        std::snprintf(line, sizeof(line), "pd_loss_sigma_x=%s\n",
                      rep.pd_loss_sigma_x ? "true" : "false");
        out += line;
        std::snprintf(line, sizeof(line), "pd_loss_sigma_q=%s\n",
                      rep.pd_loss_sigma_q ? "true" : "false");
        out += line;
    }
    if (rep.per_obs) {
        for (size_t i = 0; i < rep.per_obs->size(); ++i) {
            const auto& po = (*rep.per_obs)[i];
            for (Eigen::Index k = 0; k < po.bias_mu.size(); ++k) {
                std::snprintf(line, sizeof(line), "obs.%zu.bias_mu.%lld=%.17g\n", i + 1,
                              static_cast<long long>(k + 1), po.bias_mu(k));
                out += line;
                std::snprintf(line, sizeof(line), "obs.%zu.var_mu.%lld=%.17g\n", i + 1,
                              static_cast<long long>(k + 1), po.var_mu(k, k));
                out += line;
            }
            for (Eigen::Index k = 0; k < po.bias_sigma.size(); ++k) {
                std::snprintf(line, sizeof(line), "obs.%zu.bias_sigma.%lld=%.17g\n", i + 1,
                              static_cast<long long>(k + 1), po.bias_sigma(k));
                out += line;
            }
        }
    }
    return out;
}

}  // namespace heiv
