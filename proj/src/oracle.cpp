#include "heiv/oracle.hpp"

#include <Eigen/Cholesky>

#include "heiv/estimator.hpp"
#include "heiv/model.hpp"

namespace heiv {

namespace {

constexpr int kMaxDenseN = 12;

Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

struct DenseWork {
    DenseBundle bundle;
    Eigen::VectorXd u_ext;                          // (N + N^2) extended residual
    std::vector<PerObsDerivatives> der;             // per observation
    int N = 0, p = 0, q1 = 0;
};

DenseWork build(const Theta& t, const Dataset& data) {
    data.validate();
    t.check_dims();
    if (data.dims.n > kMaxDenseN)
        throw SizeGuard("dense reference path limited to n <= " + std::to_string(kMaxDenseN));

    DenseWork w;
    const ThetaLayout lay(t.v(), t.m());
    w.q1 = data.dims.q1();
    w.p = lay.p;
    w.N = data.dims.n * w.q1;
    const int N = w.N, p = w.p, q1 = w.q1;

    w.bundle.mu.resize(N);
    w.bundle.Sigma = Eigen::MatrixXd::Zero(N, N);
    w.bundle.F = Eigen::MatrixXd::Zero(N + N * N, p);

    Eigen::VectorXd z(N);
    w.der.reserve(static_cast<size_t>(data.dims.n));
    for (int i = 0; i < data.dims.n; ++i) {
        const auto& obs = data.observations[static_cast<size_t>(i)];
        w.der.push_back(moment_derivatives(t, obs));
        const auto& d = w.der.back();
        const int off = i * q1;
        z.segment(off, q1) = obs.z;
        w.bundle.mu.segment(off, q1) = d.mu;
        w.bundle.Sigma.block(off, off, q1, q1) = d.sigma;
        w.bundle.F.block(off, 0, q1, p) = d.D;
        for (int r = 0; r < p; ++r) {
            const Eigen::MatrixXd Cr = d.C(r);
            // rows of vec(C_stack_r): entry (row, col) of the N x N stacked
            // matrix sits at N + col*N + row
            for (int cc = 0; cc < q1; ++cc)
                w.bundle.F.block(N + (off + cc) * N + off, r, q1, 1) = Cr.col(cc);
        }
    }

    Eigen::LLT<Eigen::MatrixXd> llt(w.bundle.Sigma);
    if (llt.info() != Eigen::Success)
        throw NonPDCovariance(0);  // block index irrecoverable from the stacked factorization
    const Eigen::MatrixXd Sinv = llt.solve(Eigen::MatrixXd::Identity(N, N));

    w.bundle.H = Eigen::MatrixXd::Zero(N + N * N, N + N * N);
    w.bundle.H.topLeftCorner(N, N) = Sinv;
    w.bundle.H.bottomRightCorner(N * N, N * N) = 0.5 * kron(Sinv, Sinv);

    const Eigen::VectorXd u = z - w.bundle.mu;
    const Eigen::MatrixXd resid = u * u.transpose() - w.bundle.Sigma;
    w.u_ext.resize(N + N * N);
    w.u_ext.head(N) = u;
    w.u_ext.tail(N * N) = Eigen::Map<const Eigen::VectorXd>(resid.data(), N * N);
    return w;
}

// Column s of the stacked second-derivative matrix G_r: the per-observation
// d2 mu blocks stacked over vec of the block-diagonal d2 Sigma.
Eigen::VectorXd g_column(const DenseWork& w, int r, int s) {
    const int N = w.N, q1 = w.q1;
    Eigen::VectorXd col = Eigen::VectorXd::Zero(N + N * N);
    Eigen::MatrixXd dd = Eigen::MatrixXd::Zero(N, N);
    bool any_sigma = false;
    for (size_t i = 0; i < w.der.size(); ++i) {
        const int off = static_cast<int>(i) * q1;
        if (const auto* v = w.der[i].ddmu_at(r, s)) col.segment(off, q1) = *v;
        if (const auto* M = w.der[i].ddsigma_at(r, s)) {
            dd.block(off, off, q1, q1) = *M;
            any_sigma = true;
        }
    }
    if (any_sigma) col.tail(N * N) = Eigen::Map<const Eigen::VectorXd>(dd.data(), N * N);
    return col;
}

}  // namespace

DenseBundle dense_bundle(const Theta& t, const Dataset& data) { return build(t, data).bundle; }

DenseResult dense_score_info_bias(const Theta& t, const Dataset& data) {
    const DenseWork w = build(t, data);
    const int N = w.N, p = w.p;

    DenseResult out;
    const Eigen::MatrixXd FtH = w.bundle.F.transpose() * w.bundle.H;
    out.U = FtH * w.u_ext;
    out.K = FtH * w.bundle.F;
    const Eigen::MatrixXd Kinv = invert_information(out.K);

    const Eigen::MatrixXd Dstack = w.bundle.F.topRows(N);  // stacked mean Jacobian
    const Eigen::MatrixXd I_N = Eigen::MatrixXd::Identity(N, N);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(N + N * N);
    for (int r = 0; r < p; ++r) {
        Eigen::MatrixXd Phi(N + N * N, p);
        const Eigen::MatrixXd J_low = 2.0 * kron(I_N, Dstack.col(r)) * Dstack;
        for (int s = 0; s < p; ++s) {
            Phi.col(s) = g_column(w, r, s);
            Phi.col(s).tail(N * N) += J_low.col(s);
        }
        Phi *= -0.5;
        xi += Phi * Kinv.col(r);
    }
    out.B = Kinv * (FtH * xi);
    return out;
}

Eigen::VectorXd dense_fisher_step(const Theta& t, const Dataset& data) {
    const DenseWork w = build(t, data);
    const Eigen::VectorXd x = pack_theta(t);
    const Eigen::MatrixXd FtH = w.bundle.F.transpose() * w.bundle.H;
    const Eigen::MatrixXd K = FtH * w.bundle.F;
    const Eigen::VectorXd rhs = FtH * (w.bundle.F * x + w.u_ext);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw SingularInformation("stacked information matrix is not positive definite");
    return ldlt.solve(rhs);
}

Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x, double h) {
    const int p = static_cast<int>(x.size());
    Eigen::VectorXd g(p);
    for (int r = 0; r < p; ++r) {
        const double step = h * std::max(1.0, std::abs(x(r)));
        Eigen::VectorXd xp = x, xm = x;
        xp(r) += step;
        xm(r) -= step;
        g(r) = (f(xp) - f(xm)) / (2.0 * step);
    }
    return g;
}

Eigen::MatrixXd finite_diff_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x, double h) {
    const int p = static_cast<int>(x.size());
    Eigen::MatrixXd J;
    for (int r = 0; r < p; ++r) {
        const double step = h * std::max(1.0, std::abs(x(r)));
        Eigen::VectorXd xp = x, xm = x;
        xp(r) += step;
        xm(r) -= step;
        const Eigen::VectorXd col = (f(xp) - f(xm)) / (2.0 * step);
        if (J.size() == 0) J.resize(col.size(), p);
        J.col(r) = col;
    }
    return J;
}

}  // namespace heiv
