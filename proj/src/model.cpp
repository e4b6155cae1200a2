#include "heiv/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace heiv {

bool is_symmetric(const Eigen::MatrixXd& M, double tol) {
    if (M.rows() != M.cols()) return false;
    const double scale = 1.0 + M.cwiseAbs().maxCoeff();
    return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_psd(const Eigen::MatrixXd& M, double tol) {
    if (!is_symmetric(M)) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    return es.eigenvalues().minCoeff() >= -tol * top;
}

bool is_pd(const Eigen::MatrixXd& M) {
    if (!is_symmetric(M)) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    return llt.info() == Eigen::Success;
}

void Theta::check_dims() const {
    const int vv = v(), mm = m();
    if (vv < 1 || mm < 1) throw DimensionMismatch("theta requires v >= 1 and m >= 1");
    if (beta1.rows() != vv || beta1.cols() != mm)
        throw DimensionMismatch("beta1 must be v x m");
    if (sigma_x.rows() != mm || sigma_x.cols() != mm)
        throw DimensionMismatch("sigma_x must be m x m");
    if (sigma_q.rows() != vv || sigma_q.cols() != vv)
        throw DimensionMismatch("sigma_q must be v x v");
}

bool Theta::valid() const {
    return is_symmetric(sigma_x) && is_symmetric(sigma_q) && is_pd(sigma_x) && is_pd(sigma_q);
}

void Observation::validate(int v, int m) const {
    if (z.size() != v + m) throw DimensionMismatch("observation z must have length v + m");
    if (tau_y.rows() != v || tau_y.cols() != v)
        throw DimensionMismatch("tau_y must be v x v");
    if (tau_x.rows() != m || tau_x.cols() != m)
        throw DimensionMismatch("tau_x must be m x m");
    if (!is_psd(tau_y)) throw DimensionMismatch("tau_y must be symmetric PSD");
    if (!is_psd(tau_x)) throw DimensionMismatch("tau_x must be symmetric PSD");
}

void Dataset::validate() const {
    dims.validate();
    if (static_cast<int>(observations.size()) != dims.n)
        throw DimensionMismatch("dataset size does not match dims.n");
    for (const auto& obs : observations) obs.validate(dims.v, dims.m);
}

Eigen::VectorXd vech(const Eigen::MatrixXd& S) {
    const int d = static_cast<int>(S.rows());
    Eigen::VectorXd out(d * (d + 1) / 2);
    int k = 0;
    for (int c = 0; c < d; ++c)
        for (int r = c; r < d; ++r) out(k++) = S(r, c);
    return out;
}

Eigen::MatrixXd unvech(const Eigen::VectorXd& x, int d) {
    if (x.size() != d * (d + 1) / 2) throw DimensionMismatch("unvech: wrong length");
    Eigen::MatrixXd S(d, d);
    int k = 0;
    for (int c = 0; c < d; ++c)
        for (int r = c; r < d; ++r) {
            S(r, c) = x(k);
            S(c, r) = x(k);
            ++k;
        }
    return S;
}

std::vector<std::pair<int, int>> vech_pairs(int d) {
    std::vector<std::pair<int, int>> out;
    out.reserve(d * (d + 1) / 2);
    for (int c = 0; c < d; ++c)
        for (int r = c; r < d; ++r) out.emplace_back(r, c);
    return out;
}

Eigen::MatrixXd sym_unit(int d, int row, int col) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(d, d);
    E(row, col) = 1.0;
    E(col, row) = 1.0;  // no-op on the diagonal
    return E;
}

ThetaLayout::ThetaLayout(int v_, int m_) : v(v_), m(m_) {
    beta0_begin = 0;
    beta1_begin = v;
    mux_begin = v * (m + 1);
    sigx_begin = mux_begin + m;
    sigq_begin = sigx_begin + m * (m + 1) / 2;
    p = sigq_begin + v * (v + 1) / 2;
}

ThetaLayout::Block ThetaLayout::block(int r) const {
    if (r < 0 || r >= p) throw IndexOutOfRange("parameter index out of range");
    if (r < beta1_begin) return Block::Beta0;
    if (r < mux_begin) return Block::Beta1;
    if (r < sigx_begin) return Block::MuX;
    if (r < sigq_begin) return Block::SigmaX;
    return Block::SigmaQ;
}

std::pair<int, int> ThetaLayout::beta1_coords(int r) const {
    const int b = r - beta1_begin;
    return {b % v, b / v};
}

std::pair<int, int> ThetaLayout::sigx_coords(int r) const {
    return vech_pairs(m)[static_cast<size_t>(r - sigx_begin)];
}

std::pair<int, int> ThetaLayout::sigq_coords(int r) const {
    return vech_pairs(v)[static_cast<size_t>(r - sigq_begin)];
}

Eigen::VectorXd pack_theta(const Theta& t) {
    t.check_dims();
    const ThetaLayout lay(t.v(), t.m());
    Eigen::VectorXd x(lay.p);
    x.segment(lay.beta0_begin, t.v()) = t.beta0;
    x.segment(lay.beta1_begin, t.v() * t.m()) =
        Eigen::Map<const Eigen::VectorXd>(t.beta1.data(), t.v() * t.m());
    x.segment(lay.mux_begin, t.m()) = t.mu_x;
    x.segment(lay.sigx_begin, lay.sigq_begin - lay.sigx_begin) = vech(t.sigma_x);
    x.segment(lay.sigq_begin, lay.p - lay.sigq_begin) = vech(t.sigma_q);
    return x;
}

Theta unpack_theta(const Eigen::VectorXd& x, const ModelDims& dims) {
    const ThetaLayout lay(dims.v, dims.m);
    if (x.size() != lay.p) throw DimensionMismatch("packed theta has wrong length");
    Theta t;
    t.beta0 = x.segment(lay.beta0_begin, dims.v);
    t.beta1 = Eigen::Map<const Eigen::MatrixXd>(x.data() + lay.beta1_begin, dims.v, dims.m);
    t.mu_x = x.segment(lay.mux_begin, dims.m);
    t.sigma_x = unvech(x.segment(lay.sigx_begin, lay.sigq_begin - lay.sigx_begin), dims.m);
    t.sigma_q = unvech(x.segment(lay.sigq_begin, lay.p - lay.sigq_begin), dims.v);
    return t;
}

MomentPair mean_and_cov(const Theta& t, const Observation& obs) {
    t.check_dims();
    const int v = t.v(), m = t.m(), q1 = v + m;
    if (obs.z.size() != q1) throw DimensionMismatch("observation inconsistent with theta");

    MomentPair out;
    out.mu.resize(q1);
    out.mu.head(v) = t.beta0 + t.beta1 * t.mu_x;
    out.mu.tail(m) = t.mu_x;

    out.sigma.resize(q1, q1);
    const Eigen::MatrixXd bsx = t.beta1 * t.sigma_x;  // v x m
    out.sigma.topLeftCorner(v, v) = bsx * t.beta1.transpose() + t.sigma_q + obs.tau_y;
    out.sigma.topRightCorner(v, m) = bsx;
    out.sigma.bottomLeftCorner(m, v) = bsx.transpose();
    out.sigma.bottomRightCorner(m, m) = t.sigma_x + obs.tau_x;
    // enforce exact symmetry of the top-left block
    out.sigma.topLeftCorner(v, v) =
        0.5 * (out.sigma.topLeftCorner(v, v) + out.sigma.topLeftCorner(v, v).transpose()).eval();
    return out;
}

Eigen::MatrixXd PerObsDerivatives::C(int r) const {
    const int q1 = static_cast<int>(mu.size());
    return Eigen::Map<const Eigen::MatrixXd>(V.col(r).data(), q1, q1);
}

const Eigen::VectorXd* PerObsDerivatives::ddmu_at(int r, int s) const {
    const int lo = std::min(r, s), hi = std::max(r, s);
    for (const auto& e : ddmu)
        if (e.r == lo && e.s == hi) return &e.value;
    return nullptr;
}

const Eigen::MatrixXd* PerObsDerivatives::ddsigma_at(int r, int s) const {
    const int lo = std::min(r, s), hi = std::max(r, s);
    for (const auto& e : ddsigma)
        if (e.r == lo && e.s == hi) return &e.value;
    return nullptr;
}

namespace {

// Assembles the q1 x q1 covariance derivative from its blocks.
Eigen::MatrixXd blocks(int v, int m, const Eigen::MatrixXd& tl, const Eigen::MatrixXd& tr,
                       const Eigen::MatrixXd& br) {
    Eigen::MatrixXd out(v + m, v + m);
    out.topLeftCorner(v, v) = tl;
    out.topRightCorner(v, m) = tr;
    out.bottomLeftCorner(m, v) = tr.transpose();
    out.bottomRightCorner(m, m) = br;
    return out;
}

}  // namespace

PerObsDerivatives moment_derivatives(const Theta& t, const Observation& obs) {
    const int v = t.v(), m = t.m(), q1 = v + m;
    const ThetaLayout lay(v, m);
    const auto mom = mean_and_cov(t, obs);

    PerObsDerivatives d;
    d.mu = mom.mu;
    d.sigma = mom.sigma;
    d.D = Eigen::MatrixXd::Zero(q1, lay.p);
    d.V = Eigen::MatrixXd::Zero(q1 * q1, lay.p);

    const Eigen::MatrixXd zvv = Eigen::MatrixXd::Zero(v, v);
    const Eigen::MatrixXd zvm = Eigen::MatrixXd::Zero(v, m);
    const Eigen::MatrixXd zmm = Eigen::MatrixXd::Zero(m, m);

    auto set_C = [&](int r, const Eigen::MatrixXd& Cr) {
        d.V.col(r) = Eigen::Map<const Eigen::VectorXd>(Cr.data(), q1 * q1);
    };

    // beta0 directions: a_r = (e_r; 0), C_r = 0
    for (int j = 0; j < v; ++j) d.D(j, lay.beta0_begin + j) = 1.0;

    // beta1 directions: a_s = (F^(s) mu_x; 0),
    // C_s = [[F Sx b1' + b1 Sx F', F Sx], [Sx F', 0]]
    for (int s = lay.beta1_begin; s < lay.mux_begin; ++s) {
        const auto [j, k] = lay.beta1_coords(s);
        Eigen::MatrixXd F = zvm;
        F(j, k) = 1.0;
        d.D(j, s) = t.mu_x(k);
        const Eigen::MatrixXd FSx = F * t.sigma_x;  // v x m
        set_C(s, blocks(v, m, FSx * t.beta1.transpose() + t.beta1 * FSx.transpose(), FSx, zmm));
    }

    // mu_x directions: a_t = (beta1 e_t; e_t), C_t = 0
    for (int tt = 0; tt < m; ++tt) {
        const int r = lay.mux_begin + tt;
        d.D.col(r).head(v) = t.beta1.col(tt);
        d.D(v + tt, r) = 1.0;
    }

    // vech(Sigma_x) directions: a = 0,
    // C = [[b1 E b1', b1 E], [E b1', E]] with symmetrized unit E
    for (int r = lay.sigx_begin; r < lay.sigq_begin; ++r) {
        const auto [rr, cc] = lay.sigx_coords(r);
        const Eigen::MatrixXd E = sym_unit(m, rr, cc);
        const Eigen::MatrixXd bE = t.beta1 * E;  // v x m
        set_C(r, blocks(v, m, bE * t.beta1.transpose(), bE, E));
    }

    // vech(Sigma_q) directions: a = 0, C = [[E, 0], [0, 0]]
    for (int r = lay.sigq_begin; r < lay.p; ++r) {
        const auto [rr, cc] = lay.sigq_coords(r);
        set_C(r, blocks(v, m, sym_unit(v, rr, cc), zvm, zmm));
    }

    // d2 mu: nonzero only for beta1 x mu_x pairs, (F^(s) e_t; 0)
    for (int s = lay.beta1_begin; s < lay.mux_begin; ++s) {
        const auto [j, k] = lay.beta1_coords(s);
        Eigen::VectorXd val = Eigen::VectorXd::Zero(q1);
        val(j) = 1.0;
        d.ddmu.push_back({s, lay.mux_begin + k, std::move(val)});
    }

    // d2 Sigma, (beta1, beta1) pairs: [[Fs Sx Fr' + Fr Sx Fs', 0], [0, 0]]
    for (int s = lay.beta1_begin; s < lay.mux_begin; ++s) {
        const auto [js, ks] = lay.beta1_coords(s);
        for (int r = s; r < lay.mux_begin; ++r) {
            const auto [jr, kr] = lay.beta1_coords(r);
            Eigen::MatrixXd tl = zvv;
            tl(js, jr) += t.sigma_x(ks, kr);
            tl(jr, js) += t.sigma_x(kr, ks);
            d.ddsigma.push_back({s, r, blocks(v, m, tl, zvm, zmm)});
        }
    }

    // d2 Sigma, (beta1, vech Sigma_x) pairs: [[F E b1' + b1 E F', F E], [E F', 0]]
    for (int s = lay.beta1_begin; s < lay.mux_begin; ++s) {
        const auto [j, k] = lay.beta1_coords(s);
        Eigen::MatrixXd F = zvm;
        F(j, k) = 1.0;
        for (int r = lay.sigx_begin; r < lay.sigq_begin; ++r) {
            const auto [rr, cc] = lay.sigx_coords(r);
            const Eigen::MatrixXd E = sym_unit(m, rr, cc);
            const Eigen::MatrixXd FE = F * E;  // v x m
            d.ddsigma.push_back(
                {s, r, blocks(v, m, FE * t.beta1.transpose() + t.beta1 * FE.transpose(), FE, zmm)});
        }
    }

    return d;
}

std::vector<std::string> parameter_names(int v, int m) {
    if (v == 1 && m == 1) return {"beta0", "beta1", "mu_x", "sigma_x2", "sigma2"};
    std::vector<std::string> names;
    const ThetaLayout lay(v, m);
    names.reserve(lay.p);
    for (int j = 0; j < v; ++j) names.push_back("beta0_" + std::to_string(j + 1));
    for (int r = lay.beta1_begin; r < lay.mux_begin; ++r) {
        const auto [j, k] = lay.beta1_coords(r);
        names.push_back("beta1_" + std::to_string(j + 1) + "_" + std::to_string(k + 1));
    }
    for (int j = 0; j < m; ++j) names.push_back("mu_x_" + std::to_string(j + 1));
    for (const auto& [r, c] : vech_pairs(m))
        names.push_back("sigma_x_" + std::to_string(r + 1) + "_" + std::to_string(c + 1));
    for (const auto& [r, c] : vech_pairs(v))
        names.push_back("sigma_q_" + std::to_string(r + 1) + "_" + std::to_string(c + 1));
    return names;
}

}  // namespace heiv
