#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "heiv/bias.hpp"
#include "heiv/csv.hpp"
#include "heiv/estimator.hpp"
#include "heiv/montecarlo.hpp"
#include "heiv/report.hpp"
#include "heiv/verify.hpp"

namespace {

// Exit codes shared with the invocation tests: 0 success, 2 malformed input,
// 3 non-convergence, 4 verification failure, 1 any other error.
constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitParse = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitVerifyFailed = 4;

void emit(const std::string& text, const std::string& out_path) {
    std::cout << text;
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw heiv::ParseError(0, "file", "cannot open '" + out_path + "' for writing");
        out << text;
    }
}

struct FitArgs {
    std::string data_path;
    int v = 1, m = 1;
    bool no_correct = false;
    bool per_obs = false;
    int max_iter = 200;
    std::string out_path;
};

int run_fit(const FitArgs& args) {
    const heiv::Dataset data = heiv::read_csv(args.data_path, args.v, args.m);
    heiv::FitConfig cfg;
    cfg.max_iter = args.max_iter;
    const heiv::FitResult fr = heiv::fit(data, cfg);

    std::string text;
    if (fr.converged && !args.no_correct) {
        const heiv::BiasReport bias = heiv::correct(fr, data, args.per_obs);
        const heiv::Report rep = heiv::make_report(fr, &bias, data);
        text = heiv::format_report(rep) + "\n" + heiv::format_key_values(rep);
    } else {
        const heiv::Report rep = heiv::make_report(fr, nullptr, data);
        text = heiv::format_report(rep) + "\n" + heiv::format_key_values(rep);
    }
    emit(text, args.out_path);
    if (!fr.converged) {
        std::cerr << "fit did not converge in " << fr.iterations << " iterations\n";
        return kExitNonConvergence;
    }
    return kExitOk;
}

struct SimArgs {
    std::string scenario = "uniform";
    int n = 40;
    int reps = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_path;
    double beta0 = -2.0, beta1 = 0.5, mux = -2.0, sigx2 = 4.0, sig2 = 10.0;
    double tauy_slope = std::numeric_limits<double>::quiet_NaN();
};

int run_simulate(const SimArgs& args) {
    heiv::Scenario scn;
    scn.kind = args.scenario == "uniform" ? heiv::ScenarioKind::UniformHetero
                                          : heiv::ScenarioKind::CovariateHetero;
    scn.theta_true = heiv::default_theta_true();
    scn.theta_true.beta0(0) = args.beta0;
    scn.theta_true.beta1(0, 0) = args.beta1;
    scn.theta_true.mu_x(0) = args.mux;
    scn.theta_true.sigma_x(0, 0) = args.sigx2;
    scn.theta_true.sigma_q(0, 0) = args.sig2;
    scn.n = args.n;
    scn.seed = args.seed;
    scn.tauy_slope = args.tauy_slope;

    const heiv::SimSummary s = heiv::run_study(scn, args.reps, {}, args.threads);
    emit(heiv::format_table(s) + "\n" + heiv::format_records(s), args.out_path);
    return kExitOk;
}

int run_verify(std::uint64_t seed, double perturb) {
    heiv::VerifyOptions opts;
    opts.seed = seed;
    opts.derivative_perturbation = perturb;
    const auto checks = heiv::run_verification(opts);
    std::cout << heiv::format_verification(checks);
    return heiv::all_passed(checks) ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"maximum likelihood and bias-corrected estimation for "
                 "heteroskedastic errors-in-variables regression"};
    app.require_subcommand(1);

    FitArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a CSV dataset and report estimates");
    fit_cmd->add_option("--data", fit_args.data_path, "input CSV path")->required();
    fit_cmd->add_option("--v", fit_args.v, "response dimension")->required();
    fit_cmd->add_option("--m", fit_args.m, "covariate dimension")->required();
    fit_cmd->add_flag("--no-correct", fit_args.no_correct, "skip the bias correction");
    fit_cmd->add_flag("--per-obs", fit_args.per_obs,
                      "append per-observation fitted-moment biases and variances");
    fit_cmd->add_option("--max-iter", fit_args.max_iter, "Fisher scoring iteration cap");
    fit_cmd->add_option("--out", fit_args.out_path, "also write the report to this file");

    SimArgs sim_args;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "run a simulation study");
    sim_cmd->add_option("--scenario", sim_args.scenario, "heteroskedasticity design")
        ->check(CLI::IsMember({"uniform", "covariate"}))
        ->required();
    sim_cmd->add_option("--n", sim_args.n, "sample size per replication")->required();
    sim_cmd->add_option("--reps", sim_args.reps, "number of replications")->required();
    sim_cmd->add_option("--seed", sim_args.seed, "study seed");
    sim_cmd->add_option("--threads", sim_args.threads, "worker threads");
    sim_cmd->add_option("--out", sim_args.out_path, "also write the tables to this file");
    sim_cmd->add_option("--beta0", sim_args.beta0, "true intercept");
    sim_cmd->add_option("--beta1", sim_args.beta1, "true slope");
    sim_cmd->add_option("--mux", sim_args.mux, "true latent mean");
    sim_cmd->add_option("--sigx2", sim_args.sigx2, "true latent variance");
    sim_cmd->add_option("--sig2", sim_args.sig2, "true equation-error variance");
    sim_cmd->add_option("--tauy-slope", sim_args.tauy_slope,
                        "slope inside the covariate-design tau_y (default: the true slope)");

    std::uint64_t verify_seed = 20260815;
    double verify_perturb = 0.0;
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "cross-check analytic formulas against references");
    verify_cmd->add_option("--seed", verify_seed, "verification seed");
    verify_cmd->add_option("--perturb", verify_perturb,
                           "test hook: offset added to the analytic score")
        ->group("");  // hidden

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit_cmd->parsed()) return run_fit(fit_args);
        if (sim_cmd->parsed()) return run_simulate(sim_args);
        if (verify_cmd->parsed()) return run_verify(verify_seed, verify_perturb);
    } catch (const heiv::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const heiv::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOther;
    }
    return kExitOther;
}
