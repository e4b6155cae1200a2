#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>

#include "heiv/model.hpp"
#include "heiv/oracle.hpp"
#include "heiv/rng.hpp"
#include "heiv/verify.hpp"

using namespace heiv;

namespace {

Theta univariate_theta() {
    Theta t;
    t.beta0 = Eigen::VectorXd::Constant(1, -2.0);
    t.beta1 = Eigen::MatrixXd::Constant(1, 1, 0.5);
    t.mu_x = Eigen::VectorXd::Constant(1, -2.0);
    t.sigma_x = Eigen::MatrixXd::Constant(1, 1, 4.0);
    t.sigma_q = Eigen::MatrixXd::Constant(1, 1, 10.0);
    return t;
}

Observation zero_tau_obs(int v, int m) {
    Observation obs;
    obs.z = Eigen::VectorXd::Zero(v + m);
    obs.tau_y = Eigen::MatrixXd::Zero(v, v);
    obs.tau_x = Eigen::MatrixXd::Zero(m, m);
    return obs;
}

}  // namespace

TEST_CASE("parameter count by dimension") {
    CHECK(ModelDims{1, 1, 10}.p() == 5);
    CHECK(ModelDims{2, 1, 10}.p() == 9);
    CHECK(ModelDims{1, 2, 10}.p() == 9);
    CHECK(ModelDims{2, 2, 10}.p() == 14);
    CHECK(ModelDims{2, 1, 10}.q1() == 3);
    CHECK(ModelDims{2, 1, 10}.q2() == 6);
}

TEST_CASE("vech round trip and ordering") {
    Eigen::MatrixXd S(3, 3);
    S << 1, 2, 3, 2, 4, 5, 3, 5, 6;
    const Eigen::VectorXd x = vech(S);
    REQUIRE(x.size() == 6);
    // lower triangle, column-major
    CHECK(x(0) == 1);
    CHECK(x(1) == 2);
    CHECK(x(2) == 3);
    CHECK(x(3) == 4);
    CHECK(x(4) == 5);
    CHECK(x(5) == 6);
    CHECK((unvech(x, 3) - S).norm() == 0.0);
    CHECK_THROWS_AS(unvech(x, 2), DimensionMismatch);
}

TEST_CASE("symmetric unit directions") {
    const Eigen::MatrixXd Ed = sym_unit(2, 0, 0);
    CHECK(Ed(0, 0) == 1.0);
    CHECK(Ed(1, 1) == 0.0);
    const Eigen::MatrixXd Eo = sym_unit(2, 1, 0);
    CHECK(Eo(1, 0) == 1.0);
    CHECK(Eo(0, 1) == 1.0);
    // perturbing vech element k by h moves the matrix by h * sym_unit
    Eigen::VectorXd x = vech(Eigen::MatrixXd::Identity(2, 2).eval());
    x(1) += 0.25;
    CHECK((unvech(x, 2) - (Eigen::MatrixXd::Identity(2, 2) + 0.25 * sym_unit(2, 1, 0))).norm() ==
          0.0);
}

TEST_CASE("packing layout and round trip") {
    const Theta t = univariate_theta();
    const Eigen::VectorXd x = pack_theta(t);
    REQUIRE(x.size() == 5);
    CHECK(x(0) == -2.0);
    CHECK(x(1) == 0.5);
    CHECK(x(2) == -2.0);
    CHECK(x(3) == 4.0);
    CHECK(x(4) == 10.0);

    Rng rng(7);
    for (int v = 1; v <= 2; ++v)
        for (int m = 1; m <= 2; ++m) {
            const Theta r = random_theta(rng, v, m);
            const Eigen::VectorXd packed = pack_theta(r);
            const Theta back = unpack_theta(packed, {v, m, 10});
            CHECK((pack_theta(back) - packed).norm() == 0.0);
            CHECK((back.beta1 - r.beta1).norm() == 0.0);
            CHECK((back.sigma_x - r.sigma_x).norm() == 0.0);
        }
}

TEST_CASE("layout block classification") {
    const ThetaLayout lay(2, 2);  // p = 14
    CHECK(lay.p == 14);
    CHECK(lay.block(0) == ThetaLayout::Block::Beta0);
    CHECK(lay.block(2) == ThetaLayout::Block::Beta1);
    CHECK(lay.block(6) == ThetaLayout::Block::MuX);
    CHECK(lay.block(8) == ThetaLayout::Block::SigmaX);
    CHECK(lay.block(12) == ThetaLayout::Block::SigmaQ);
    CHECK_THROWS_AS(lay.block(14), IndexOutOfRange);
    // vec(beta1) is column-major: index 3 is entry (1, 0)
    CHECK(lay.beta1_coords(3) == std::pair<int, int>{1, 0});
    CHECK(lay.beta1_coords(4) == std::pair<int, int>{0, 1});
}

TEST_CASE("model moments at the reference point") {
    const Theta t = univariate_theta();
    const auto mom = mean_and_cov(t, zero_tau_obs(1, 1));
    CHECK(mom.mu(0) == doctest::Approx(-3.0).epsilon(1e-15));
    CHECK(mom.mu(1) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(mom.sigma(0, 0) == doctest::Approx(11.0).epsilon(1e-15));
    CHECK(mom.sigma(0, 1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(mom.sigma(1, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(mom.sigma(1, 1) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("error variances shift only the diagonal blocks") {
    const Theta t = univariate_theta();
    Observation obs = zero_tau_obs(1, 1);
    obs.tau_y(0, 0) = 1.5;
    obs.tau_x(0, 0) = 0.75;
    const auto mom = mean_and_cov(t, obs);
    CHECK(mom.sigma(0, 0) == doctest::Approx(12.5).epsilon(1e-15));
    CHECK(mom.sigma(1, 1) == doctest::Approx(4.75).epsilon(1e-15));
    CHECK(mom.sigma(0, 1) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("univariate derivative slices match the closed forms") {
    const Theta t = univariate_theta();
    Observation obs = zero_tau_obs(1, 1);
    obs.tau_y(0, 0) = 2.0;
    obs.tau_x(0, 0) = 1.0;
    const auto der = moment_derivatives(t, obs);
    const double b = t.beta1(0, 0), sx = t.sigma_x(0, 0);

    // mean derivatives: (1,0), (mu_x,0), (beta1,1), 0, 0
    CHECK(der.D(0, 0) == 1.0);
    CHECK(der.D(1, 0) == 0.0);
    CHECK(der.D(0, 1) == t.mu_x(0));
    CHECK(der.D(0, 2) == b);
    CHECK(der.D(1, 2) == 1.0);
    CHECK(der.D.col(3).norm() == 0.0);
    CHECK(der.D.col(4).norm() == 0.0);

    // covariance derivatives
    Eigen::MatrixXd C1 = der.C(1), C3 = der.C(3), C4 = der.C(4);
    CHECK(C1(0, 0) == doctest::Approx(2 * b * sx));
    CHECK(C1(0, 1) == doctest::Approx(sx));
    CHECK(C1(1, 1) == 0.0);
    CHECK(C3(0, 0) == doctest::Approx(b * b));
    CHECK(C3(0, 1) == doctest::Approx(b));
    CHECK(C3(1, 1) == 1.0);
    CHECK(C4(0, 0) == 1.0);
    CHECK(C4(0, 1) == 0.0);
    CHECK(C4(1, 1) == 0.0);
    CHECK(der.C(0).norm() == 0.0);
    CHECK(der.C(2).norm() == 0.0);

    // second derivatives: d2mu/(dbeta1 dmu_x) = e_1 in the response slot,
    // d2Sigma/(dbeta1 dbeta1) = [[2 sx, 0], [0, 0]],
    // d2Sigma/(dbeta1 dsigma_x) = [[2 b, 1], [1, 0]]
    const auto* mu12 = der.ddmu_at(1, 2);
    REQUIRE(mu12 != nullptr);
    CHECK((*mu12)(0) == 1.0);
    CHECK((*mu12)(1) == 0.0);
    CHECK(der.ddmu_at(0, 1) == nullptr);
    const auto* s11 = der.ddsigma_at(1, 1);
    REQUIRE(s11 != nullptr);
    CHECK((*s11)(0, 0) == doctest::Approx(2 * sx));
    CHECK((*s11)(1, 1) == 0.0);
    const auto* s13 = der.ddsigma_at(3, 1);  // symmetric lookup
    REQUIRE(s13 != nullptr);
    CHECK((*s13)(0, 0) == doctest::Approx(2 * b));
    CHECK((*s13)(0, 1) == 1.0);
    CHECK(der.ddsigma_at(4, 4) == nullptr);
}

TEST_CASE("derivatives match finite differences in every dimension mix") {
    Rng rng(20260815);
    for (int v = 1; v <= 2; ++v)
        for (int m = 1; m <= 2; ++m) {
            const Theta t = random_theta(rng, v, m);
            const Dataset data = random_dataset(rng, t, 2);
            const auto& obs = data.observations[0];
            const auto der = moment_derivatives(t, obs);
            const Eigen::VectorXd x = pack_theta(t);
            const ModelDims dims{v, m, 2};

            const auto mu_of = [&](const Eigen::VectorXd& y) {
                return Eigen::VectorXd(mean_and_cov(unpack_theta(y, dims), obs).mu);
            };
            const auto sig_of = [&](const Eigen::VectorXd& y) {
                const Eigen::MatrixXd S = mean_and_cov(unpack_theta(y, dims), obs).sigma;
                return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(S.data(), S.size()));
            };
            CHECK((der.D - finite_diff_jacobian(mu_of, x, 1e-6)).cwiseAbs().maxCoeff() < 1e-8);
            CHECK((der.V - finite_diff_jacobian(sig_of, x, 1e-6)).cwiseAbs().maxCoeff() < 1e-7);
        }
}

TEST_CASE("second derivative entries are canonically ordered and symmetric") {
    Rng rng(11);
    const Theta t = random_theta(rng, 2, 2);
    const auto der = moment_derivatives(t, zero_tau_obs(2, 2));
    for (const auto& e : der.ddmu) CHECK(e.r <= e.s);
    for (const auto& e : der.ddsigma) {
        CHECK(e.r <= e.s);
        CHECK((e.value - e.value.transpose()).norm() < 1e-14);
    }
    // lookup is symmetric in its arguments
    const ThetaLayout lay(2, 2);
    for (int r = 0; r < lay.p; ++r)
        for (int s = r; s < lay.p; ++s) {
            const auto* a = der.ddsigma_at(r, s);
            const auto* b = der.ddsigma_at(s, r);
            CHECK(a == b);
        }
}

TEST_CASE("dimension validation raises the right errors") {
    Theta t = univariate_theta();
    t.beta1.resize(2, 1);
    CHECK_THROWS_AS(t.check_dims(), DimensionMismatch);

    Dataset data;
    data.dims = {1, 1, 3};
    data.observations.resize(2);
    CHECK_THROWS_AS(data.validate(), DimensionMismatch);

    Observation obs = zero_tau_obs(1, 1);
    obs.tau_x(0, 0) = -0.5;  // negative variance
    CHECK_THROWS_AS(obs.validate(1, 1), DimensionMismatch);
}

TEST_CASE("parameter names for display") {
    const auto uni = parameter_names(1, 1);
    REQUIRE(uni.size() == 5);
    CHECK(uni[0] == "beta0");
    CHECK(uni[1] == "beta1");
    CHECK(uni[2] == "mu_x");
    CHECK(uni[3] == "sigma_x2");
    CHECK(uni[4] == "sigma2");
    const auto multi = parameter_names(2, 1);
    REQUIRE(multi.size() == 9);
    CHECK(multi[2] == "beta1_1_1");
    CHECK(multi[8] == "sigma_q_2_2");
}
