#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "heiv/csv.hpp"
#include "heiv/model.hpp"
#include "heiv/montecarlo.hpp"
#include "heiv/rng.hpp"
#include "heiv/verify.hpp"

using namespace heiv;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout, plus stderr when the command redirects it
};

std::string cli_path() {
    const char* p = std::getenv("HEIV_CLI");
    REQUIRE_MESSAGE(p != nullptr, "HEIV_CLI must point at the built binary");
    return p;
}

std::string data_dir() {
    const char* dir = std::getenv("HEIV_DATA_DIR");
    return dir ? dir : "data";
}

RunResult run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args;
    RunResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    size_t got = 0;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
        res.output.append(buf.data(), got);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

double parsed_value(const std::string& text, const std::string& key) {
    const auto pos = text.find(key + "=");
    REQUIRE_MESSAGE(pos != std::string::npos, ("missing key " + key).c_str());
    const auto start = pos + key.size() + 1;
    const auto eol = text.find('\n', start);
    return std::stod(text.substr(start, eol - start));
}

}  // namespace

TEST_CASE("verify runs clean and reports every check") {
    const RunResult res = run("verify");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("verification passed") != std::string::npos);
    CHECK(res.output.find("FAIL") == std::string::npos);
    // several independent checks, each rendered with its tolerance
    CHECK(std::count(res.output.begin(), res.output.end(), '\n') >= 6);
}

TEST_CASE("a perturbed score is caught by verification") {
    const RunResult res = run("verify --perturb 1e-3 2>/dev/null");
    CHECK(res.exit_code == 4);
    CHECK(res.output.find("FAIL") != std::string::npos);
}

TEST_CASE("fit renders the five parameter report for the bundled fixture") {
    const RunResult res = run("fit --data " + data_dir() + "/synthetic_men.csv --v 1 --m 1");
    CHECK(res.exit_code == 0);
    for (const char* name : {"beta0", "beta1", "mu_x", "sigma_x2", "sigma2"})
        CHECK(res.output.find(name) != std::string::npos);
    CHECK(res.output.find("BCE") != std::string::npos);
    CHECK(res.output.find("n = 38") != std::string::npos);
    CHECK(res.output.find("converged = yes") != std::string::npos);

    // machine block: bce = mle - bias to full precision
    for (const char* name : {"beta0", "beta1", "mu_x", "sigma_x2", "sigma2"}) {
        const std::string k = std::string("param.") + name;
        const double mle = parsed_value(res.output, k + ".mle");
        const double bias = parsed_value(res.output, k + ".bias");
        const double bce = parsed_value(res.output, k + ".bce");
        CHECK(bce == doctest::Approx(mle - bias).epsilon(1e-15));
    }
}

TEST_CASE("fit without correction omits the corrected columns") {
    const RunResult res =
        run("fit --data " + data_dir() + "/synthetic_men.csv --v 1 --m 1 --no-correct");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("MLE") != std::string::npos);
    CHECK(res.output.find("BCE") == std::string::npos);
    CHECK(res.output.find("param.beta0.bias") == std::string::npos);
}

TEST_CASE("fit with per observation diagnostics") {
    const RunResult res =
        run("fit --data " + data_dir() + "/synthetic_men.csv --v 1 --m 1 --per-obs");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("per-observation") != std::string::npos);
    CHECK(res.output.find("obs.1.bias_mu.1=") != std::string::npos);
    CHECK(res.output.find("obs.38.bias_sigma.") != std::string::npos);
}

TEST_CASE("fit writes the same text to the out file") {
    const std::string out_path = "/tmp/heiv_cli_fit_out.txt";
    const RunResult res = run("fit --data " + data_dir() +
                              "/synthetic_men.csv --v 1 --m 1 --out " + out_path);
    CHECK(res.exit_code == 0);
    std::ifstream in(out_path);
    std::stringstream file_text;
    file_text << in.rdbuf();
    CHECK(file_text.str() == res.output);
    std::remove(out_path.c_str());
}

TEST_CASE("missing and malformed inputs exit with the parse code") {
    CHECK(run("fit --data /nonexistent.csv --v 1 --m 1 2>/dev/null").exit_code == 2);

    // corrupt row 7, column X1
    const std::string path = "/tmp/heiv_cli_bad.csv";
    {
        std::ofstream out(path);
        out << "Y1,X1,TY_1_1,TX_1_1\n";
        for (int i = 1; i <= 10; ++i) {
            if (i == 7)
                out << "1.0,oops,0.5,0.5\n";
            else
                out << i * 0.5 << "," << i * 0.25 << ",0.5,0.5\n";
        }
    }
    const RunResult res = run("fit --data " + path + " --v 1 --m 1 2>&1");
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("row 7") != std::string::npos);
    CHECK(res.output.find("X1") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("an exhausted iteration budget exits with the non convergence code") {
    const RunResult res = run("fit --data " + data_dir() +
                              "/synthetic_men.csv --v 1 --m 1 --max-iter 1 2>/dev/null");
    CHECK(res.exit_code == 3);
    // the partial report is still rendered
    CHECK(res.output.find("converged = no") != std::string::npos);
}

TEST_CASE("multivariate fits work through the command line") {
    Rng rng(97);
    const Theta t = random_theta(rng, 2, 1);
    const Dataset data = random_dataset(rng, t, 300);
    const std::string path = "/tmp/heiv_cli_multi.csv";
    write_csv(path, data);
    const RunResult res = run("fit --data " + path + " --v 2 --m 1");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("beta0_1") != std::string::npos);
    CHECK(res.output.find("beta1_2_1") != std::string::npos);
    CHECK(res.output.find("sigma_q_2_2") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("a large simulated dataset is recovered within three standard errors") {
    Scenario scn;
    scn.kind = ScenarioKind::UniformHetero;
    scn.theta_true = default_theta_true();
    scn.n = 5000;
    scn.seed = 2026;
    const Dataset data = simulate_dataset(scn, make_design(scn), 0);
    const std::string path = "/tmp/heiv_cli_big.csv";
    write_csv(path, data);
    const RunResult res = run("fit --data " + path + " --v 1 --m 1");
    REQUIRE(res.exit_code == 0);
    const Eigen::VectorXd truth = pack_theta(scn.theta_true);
    const char* names[] = {"beta0", "beta1", "mu_x", "sigma_x2", "sigma2"};
    for (int r = 0; r < 5; ++r) {
        const std::string k = std::string("param.") + names[r];
        const double mle = parsed_value(res.output, k + ".mle");
        const double se = parsed_value(res.output, k + ".se");
        CAPTURE(names[r]);
        CHECK(std::abs(mle - truth(r)) < 3.0 * se);
    }
    std::remove(path.c_str());
}

TEST_CASE("simulation studies are byte identical across runs and thread counts") {
    const std::string args = "simulate --scenario uniform --n 40 --reps 120 --seed 135";
    const RunResult a = run(args + " --threads 1");
    const RunResult b = run(args + " --threads 1");
    const RunResult c = run(args + " --threads 4");
    CHECK(a.exit_code == 0);
    CHECK(a.output == b.output);
    CHECK(a.output == c.output);
    CHECK(a.output.find("rel bias") != std::string::npos);
    CHECK(a.output.find("uniform,40,beta1,bce,") != std::string::npos);
}

TEST_CASE("the covariate scenario runs end to end") {
    const RunResult res =
        run("simulate --scenario covariate --n 100 --reps 120 --seed 919 --threads 4");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("covariate,100,sigma_x2,mle,") != std::string::npos);
}

TEST_CASE("bad invocations are rejected") {
    CHECK(run("simulate --scenario nope --n 40 --reps 120 2>/dev/null").exit_code != 0);
    CHECK(run("fit --v 1 --m 1 2>/dev/null").exit_code != 0);       // --data missing
    CHECK(run("frobnicate 2>/dev/null").exit_code != 0);            // unknown subcommand
    CHECK(run("2>/dev/null").exit_code != 0);                       // subcommand required
}
