#pragma once

// Two-site DMRG for the TFIM on an open-chain MPS. Periodic boundaries are
// carried by one extra MPO channel that transports Z from site 0 to site n-1.
//
// Layout: an MPS site tensor is a pair of Dl x Dr real matrices, one per
// physical state (0 = spin up). An MPO site holds dl x dr blocks of 2x2
// operators, op(out, in).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magicbench/core.hpp"
#include "magicbench/error.hpp"
#include "magicbench/random.hpp"

namespace magicbench::dmrg {

using SiteTensor = std::array<Eigen::MatrixXd, 2>;

struct MpoSite {
    int dl = 1;
    int dr = 1;
    std::vector<Eigen::Matrix2d> ops; // row-major over (left, right)
    std::vector<bool> nonzero;

    MpoSite() = default;
    MpoSite(int l, int r)
        : dl(l), dr(r), ops(static_cast<std::size_t>(l * r), Eigen::Matrix2d::Zero()),
          nonzero(static_cast<std::size_t>(l * r), false) {}
    const Eigen::Matrix2d& op(int a, int b) const { return ops[static_cast<std::size_t>(a * dr + b)]; }
    void set(int a, int b, const Eigen::Matrix2d& m) {
        ops[static_cast<std::size_t>(a * dr + b)] = m;
        nonzero[static_cast<std::size_t>(a * dr + b)] = !m.isZero(0.0);
    }
    bool has(int a, int b) const { return nonzero[static_cast<std::size_t>(a * dr + b)]; }
};

struct Mpo {
    std::vector<MpoSite> sites;
    int num_sites() const { return static_cast<int>(sites.size()); }
    int max_bond() const {
        int d = 1;
        for (const auto& s : sites)
            d = std::max({d, s.dl, s.dr});
        return d;
    }
};

struct Mps {
    std::vector<SiteTensor> tensors;
    int center = 0;

    int num_sites() const { return static_cast<int>(tensors.size()); }
    // Bond k sits between sites k-1 and k; bonds 0 and n are the boundaries.
    std::vector<int> bond_dims() const {
        std::vector<int> d;
        if (tensors.empty())
            return d;
        d.push_back(static_cast<int>(tensors.front()[0].rows()));
        for (const auto& t : tensors)
            d.push_back(static_cast<int>(t[0].cols()));
        return d;
    }
    int max_bond() const {
        const auto d = bond_dims();
        return d.empty() ? 0 : *std::max_element(d.begin(), d.end());
    }
};

struct DmrgConfig {
    int max_bond = 32;
    double svd_cutoff = 1e-12;
    int max_sweeps = 50;
    double energy_tol = 1e-10;
    int local_solver_iters = 30;
    double local_tol = 1e-12;
    std::uint64_t seed = 0x5EED;

    void validate() const {
        if (max_bond < 2)
            throw ConfigError("DMRG max_bond must be at least 2");
        if (!(energy_tol > 0.0))
            throw ConfigError("DMRG energy_tol must be positive");
        if (max_sweeps < 1 || local_solver_iters < 2 || !(svd_cutoff >= 0.0))
            throw ConfigError("invalid DMRG configuration");
    }
};

struct DmrgDiagnostics {
    int sweeps = 0;
    bool converged = false;
    bool non_monotone = false;         // a sweep raised the energy beyond solver noise
    std::vector<double> sweep_energies;
    std::vector<double> discarded_weights; // per split, in sweep order
    double max_discarded_weight = 0.0;
    int max_bond_used = 0;
};

struct DmrgResult {
    double energy = 0.0;
    Mps mps;
    DmrgDiagnostics diagnostics;
};

namespace detail {

inline Eigen::Matrix2d op_identity() { return Eigen::Matrix2d::Identity(); }
inline Eigen::Matrix2d op_z() { return Eigen::Vector2d(1.0, -1.0).asDiagonal(); }
inline Eigen::Matrix2d op_x() {
    Eigen::Matrix2d m;
    m << 0, 1, 1, 0;
    return m;
}

} // namespace detail

// Channels: 0 = nothing placed yet, 1 = Z waiting for its neighbor,
// 2 = Z from site 0 waiting for site n-1 (periodic only), last = complete.
inline Mpo build_tfim_mpo(const TfimModel& model) {
    model.validate();
    using namespace detail;
    const int n = model.n;
    const Eigen::Matrix2d I = op_identity(), Z = op_z(), X = op_x();
    const Eigen::Matrix2d field = -model.h * X;
    Mpo mpo;
    if (n == 1) {
        MpoSite s(1, 1);
        s.set(0, 0, field);
        mpo.sites.push_back(s);
        return mpo;
    }
    const bool wrap = model.periodic;
    const int d = wrap ? 4 : 3;
    const int done = d - 1;
    auto bulk = [&] {
        MpoSite s(d, d);
        s.set(0, 0, I);
        s.set(0, 1, Z);
        s.set(0, done, field);
        s.set(1, done, model.J * Z);
        if (wrap)
            s.set(2, 2, I);
        s.set(done, done, I);
        return s;
    }();
    for (int i = 0; i < n; ++i) {
        if (i == 0) {
            MpoSite s(1, d);
            s.set(0, 0, I);
            s.set(0, 1, Z);
            if (wrap)
                s.set(0, 2, Z);
            s.set(0, done, field);
            mpo.sites.push_back(s);
        } else if (i == n - 1) {
            MpoSite s(d, 1);
            s.set(0, 0, field);
            s.set(1, 0, model.J * Z);
            if (wrap)
                s.set(2, 0, model.J * Z);
            s.set(done, 0, I);
            mpo.sites.push_back(s);
        } else {
            mpo.sites.push_back(bulk);
        }
    }
    return mpo;
}

// Full contraction to a 2^n x 2^n matrix (little-endian basis).
inline Eigen::MatrixXd mpo_to_dense(const Mpo& mpo) {
    const int n = mpo.num_sites();
    if (n > 10)
        throw CapabilityError("mpo_to_dense limited to n <= 10");
    // blocks[b] = partial operator on sites [0, i] ending in MPO channel b.
    std::vector<Eigen::MatrixXd> blocks(1, Eigen::MatrixXd::Identity(1, 1));
    for (int i = 0; i < n; ++i) {
        const auto& w = mpo.sites[static_cast<std::size_t>(i)];
        const Eigen::Index dim = blocks[0].rows();
        std::vector<Eigen::MatrixXd> next(static_cast<std::size_t>(w.dr), Eigen::MatrixXd::Zero(2 * dim, 2 * dim));
        for (int a = 0; a < w.dl; ++a) {
            for (int b = 0; b < w.dr; ++b) {
                if (!w.has(a, b))
                    continue;
                const auto& o = w.op(a, b);
                // new qubit is the high bit: kron(o, block)
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 2; ++c)
                        if (o(r, c) != 0.0)
                            next[static_cast<std::size_t>(b)].block(r * dim, c * dim, dim, dim) +=
                                o(r, c) * blocks[static_cast<std::size_t>(a)];
            }
        }
        blocks = std::move(next);
    }
    return blocks[0];
}

namespace detail {

using Env = std::vector<Eigen::MatrixXd>; // one (bra, ket) matrix per MPO channel

inline Env left_boundary() { return Env(1, Eigen::MatrixXd::Ones(1, 1)); }
inline Env right_boundary() { return Env(1, Eigen::MatrixXd::Ones(1, 1)); }

inline Env extend_left(const Env& L, const SiteTensor& A, const MpoSite& w) {
    const Eigen::Index D = A[0].cols();
    Env out(static_cast<std::size_t>(w.dr), Eigen::MatrixXd::Zero(D, D));
    for (int a = 0; a < w.dl; ++a) {
        std::array<Eigen::MatrixXd, 2> LA;
        for (int s = 0; s < 2; ++s)
            LA[static_cast<std::size_t>(s)] = L[static_cast<std::size_t>(a)] * A[static_cast<std::size_t>(s)];
        for (int b = 0; b < w.dr; ++b) {
            if (!w.has(a, b))
                continue;
            const auto& o = w.op(a, b);
            for (int t = 0; t < 2; ++t)
                for (int s = 0; s < 2; ++s)
                    if (o(t, s) != 0.0)
                        out[static_cast<std::size_t>(b)].noalias() +=
                            o(t, s) * A[static_cast<std::size_t>(t)].transpose() * LA[static_cast<std::size_t>(s)];
        }
    }
    return out;
}

inline Env extend_right(const Env& R, const SiteTensor& B, const MpoSite& w) {
    const Eigen::Index D = B[0].rows();
    Env out(static_cast<std::size_t>(w.dl), Eigen::MatrixXd::Zero(D, D));
    for (int b = 0; b < w.dr; ++b) {
        std::array<Eigen::MatrixXd, 2> BR;
        for (int s = 0; s < 2; ++s)
            BR[static_cast<std::size_t>(s)] = B[static_cast<std::size_t>(s)] * R[static_cast<std::size_t>(b)].transpose();
        for (int a = 0; a < w.dl; ++a) {
            if (!w.has(a, b))
                continue;
            const auto& o = w.op(a, b);
            for (int t = 0; t < 2; ++t)
                for (int s = 0; s < 2; ++s)
                    if (o(t, s) != 0.0)
                        out[static_cast<std::size_t>(a)].noalias() +=
                            o(t, s) * B[static_cast<std::size_t>(t)] * BR[static_cast<std::size_t>(s)].transpose();
        }
    }
    return out;
}

// Two-site wavefunction theta[s1 + 2 s2] of size Dl x Dr.
using Theta = std::array<Eigen::MatrixXd, 4>;

struct TwoSiteOperator {
    const Env* L;
    const Env* R;
    // For every (a, c) with a nonzero combined operator: 4x4 matrix K(t, s)
    // with t = t1 + 2 t2, s = s1 + 2 s2.
    struct Entry {
        int a, c;
        Eigen::Matrix4d K;
    };
    std::vector<Entry> entries;

    TwoSiteOperator(const Env& left, const Env& right, const MpoSite& w1, const MpoSite& w2)
        : L(&left), R(&right) {
        for (int a = 0; a < w1.dl; ++a) {
            for (int c = 0; c < w2.dr; ++c) {
                Eigen::Matrix4d K = Eigen::Matrix4d::Zero();
                for (int b = 0; b < w1.dr; ++b) {
                    if (!w1.has(a, b) || !w2.has(b, c))
                        continue;
                    const auto& o1 = w1.op(a, b);
                    const auto& o2 = w2.op(b, c);
                    for (int t1 = 0; t1 < 2; ++t1)
                        for (int t2 = 0; t2 < 2; ++t2)
                            for (int s1 = 0; s1 < 2; ++s1)
                                for (int s2 = 0; s2 < 2; ++s2)
                                    K(t1 + 2 * t2, s1 + 2 * s2) += o1(t1, s1) * o2(t2, s2);
                }
                if (!K.isZero(0.0))
                    entries.push_back({a, c, K});
            }
        }
    }

    void apply(const Theta& in, Theta& out) const {
        const Eigen::Index Dl = in[0].rows(), Dr = in[0].cols();
        for (auto& o : out)
            o.setZero(Dl, Dr);
        Eigen::MatrixXd tmp(Dl, Dr);
        for (const auto& e : entries) {
            const auto& La = (*L)[static_cast<std::size_t>(e.a)];
            const auto& Rc = (*R)[static_cast<std::size_t>(e.c)];
            for (int s = 0; s < 4; ++s) {
                if (e.K.col(s).isZero(0.0))
                    continue;
                tmp.noalias() = La * in[static_cast<std::size_t>(s)] * Rc.transpose();
                for (int t = 0; t < 4; ++t)
                    if (e.K(t, s) != 0.0)
                        out[static_cast<std::size_t>(t)] += e.K(t, s) * tmp;
            }
        }
    }
};

inline double theta_dot(const Theta& a, const Theta& b) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k)
        s += (a[static_cast<std::size_t>(k)].array() * b[static_cast<std::size_t>(k)].array()).sum();
    return s;
}
inline void theta_axpy(double alpha, const Theta& x, Theta& y) {
    for (int k = 0; k < 4; ++k)
        y[static_cast<std::size_t>(k)] += alpha * x[static_cast<std::size_t>(k)];
}
inline void theta_scale(Theta& x, double alpha) {
    for (auto& m : x)
        m *= alpha;
}

// Lanczos on the effective two-site operator, warm-started from `theta`.
// Returns the lowest Ritz value; `theta` is overwritten with the normalized Ritz vector.
inline double local_ground_state(const TwoSiteOperator& H, Theta& theta, int max_iter, double tol) {
    const Eigen::Index dim = 4 * theta[0].size();
    max_iter = static_cast<int>(std::min<Eigen::Index>(max_iter, dim));
    double nrm = std::sqrt(theta_dot(theta, theta));
    if (!(nrm > 0.0))
        throw NumericalError("DMRG local start vector vanished");
    theta_scale(theta, 1.0 / nrm);

    std::vector<Theta> basis;
    std::vector<double> alpha, beta;
    basis.push_back(theta);
    Theta w;
    double ritz = 0.0;
    Eigen::VectorXd coeffs;
    for (int k = 0; k < max_iter; ++k) {
        H.apply(basis.back(), w);
        const double ak = theta_dot(basis.back(), w);
        alpha.push_back(ak);
        // full reorthogonalization, twice
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& v : basis)
                theta_axpy(-theta_dot(v, w), v, w);
        const double bk = std::sqrt(theta_dot(w, w));

        const int m = static_cast<int>(alpha.size());
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < m)
                T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        ritz = es.eigenvalues()(0);
        coeffs = es.eigenvectors().col(0);
        const double residual = std::abs(bk * coeffs(m - 1));
        if (residual <= tol || bk <= 1e-14 || k + 1 == max_iter)
            break;
        beta.push_back(bk);
        theta_scale(w, 1.0 / bk);
        basis.push_back(w);
    }
    for (auto& t : theta)
        t.setZero();
    for (std::size_t i = 0; i < static_cast<std::size_t>(coeffs.size()); ++i)
        theta_axpy(coeffs(static_cast<Eigen::Index>(i)), basis[i], theta);
    nrm = std::sqrt(theta_dot(theta, theta));
    theta_scale(theta, 1.0 / nrm);
    return ritz;
}

struct Split {
    SiteTensor left, right;
    double discarded = 0.0;
};

// SVD of theta reshaped to (s1, l) x (s2, r). With `move_right` the singular
// values go to the right tensor (left becomes left-orthonormal), otherwise to the left.
inline Split split_theta(const Theta& th, int max_bond, double cutoff, bool move_right) {
    const Eigen::Index Dl = th[0].rows(), Dr = th[0].cols();
    Eigen::MatrixXd M(2 * Dl, 2 * Dr);
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2)
            M.block(s1 * Dl, s2 * Dr, Dl, Dr) = th[static_cast<std::size_t>(s1 + 2 * s2)];
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw NumericalError("SVD failed during DMRG split");
    const Eigen::VectorXd& sv = svd.singularValues();
    const double total = sv.squaredNorm();
    Eigen::Index keep = std::min<Eigen::Index>(sv.size(), max_bond);
    double discarded = 0.0;
    for (Eigen::Index k = keep; k < sv.size(); ++k)
        discarded += sv(k) * sv(k);
    while (keep > 1) {
        const double w = sv(keep - 1) * sv(keep - 1);
        if ((discarded + w) / total > cutoff)
            break;
        discarded += w;
        --keep;
    }
    Split out;
    out.discarded = discarded / total;
    Eigen::MatrixXd U = svd.matrixU().leftCols(keep);
    Eigen::MatrixXd Vt = svd.matrixV().leftCols(keep).transpose();
    const Eigen::VectorXd s = sv.head(keep) / std::sqrt(sv.head(keep).squaredNorm());
    if (move_right)
        Vt = s.asDiagonal() * Vt;
    else
        U = U * s.asDiagonal();
    for (int p = 0; p < 2; ++p) {
        out.left[static_cast<std::size_t>(p)] = U.middleRows(p * Dl, Dl);
        out.right[static_cast<std::size_t>(p)] = Vt.middleCols(p * Dr, Dr);
    }
    return out;
}

// Makes site i right-orthonormal, pushing the remainder into site i-1.
inline void right_orthonormalize_site(Mps& mps, int i) {
    auto& T = mps.tensors[static_cast<std::size_t>(i)];
    const Eigen::Index Dl = T[0].rows(), Dr = T[0].cols();
    Eigen::MatrixXd M(Dl, 2 * Dr);
    M << T[0], T[1];
    // M = R Q with Q having orthonormal rows, via QR of M^T.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M.transpose());
    const Eigen::Index k = std::min(Dl, 2 * Dr);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(2 * Dr, k);
    Eigen::MatrixXd Rt = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    // M^T = Q R  =>  M = R^T Q^T
    T[0] = Q.transpose().leftCols(Dr);
    T[1] = Q.transpose().rightCols(Dr);
    if (i > 0) {
        auto& P = mps.tensors[static_cast<std::size_t>(i - 1)];
        for (auto& m : P)
            m = m * Rt.transpose();
    }
}

} // namespace detail

// Random MPS with bond dimensions min(bond, 2^i, 2^(n-i)), right-canonical with center 0.
inline Mps random_mps(int n, int bond, Rng& rng) {
    if (n < 1 || n > 30)
        throw SizeError("MPS length out of range");
    std::vector<int> dims(static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k) {
        const int edge = std::min(k, n - k);
        dims[static_cast<std::size_t>(k)] = edge >= 20 ? bond : std::min(bond, 1 << edge);
    }
    std::normal_distribution<double> nd(0.0, 1.0);
    Mps mps;
    mps.tensors.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int s = 0; s < 2; ++s) {
            auto& m = mps.tensors[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)];
            m.resize(dims[static_cast<std::size_t>(i)], dims[static_cast<std::size_t>(i + 1)]);
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                for (Eigen::Index r = 0; r < m.rows(); ++r)
                    m(r, c) = nd(rng);
        }
    for (int i = n - 1; i >= 1; --i)
        detail::right_orthonormalize_site(mps, i);
    auto& first = mps.tensors[0];
    const double nrm = std::sqrt(first[0].squaredNorm() + first[1].squaredNorm());
    for (auto& m : first)
        m /= nrm;
    mps.center = 0;
    return mps;
}

// Product-state MPS (bond 1) for a computational basis index.
inline Mps product_mps(int n, std::uint64_t index) {
    Mps mps;
    mps.tensors.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int s = static_cast<int>((index >> i) & 1u);
        mps.tensors[static_cast<std::size_t>(i)][0] = Eigen::MatrixXd::Constant(1, 1, s == 0 ? 1.0 : 0.0);
        mps.tensors[static_cast<std::size_t>(i)][1] = Eigen::MatrixXd::Constant(1, 1, s == 1 ? 1.0 : 0.0);
    }
    return mps;
}

// Max deviation from identity of the left (sites < center) and right (sites >
// center) orthonormality contractions.
inline double orthogonality_error(const Mps& mps) {
    double err = 0.0;
    for (int i = 0; i < mps.num_sites(); ++i) {
        const auto& T = mps.tensors[static_cast<std::size_t>(i)];
        if (i < mps.center) {
            const Eigen::MatrixXd g = T[0].transpose() * T[0] + T[1].transpose() * T[1];
            err = std::max(err, (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
        } else if (i > mps.center) {
            const Eigen::MatrixXd g = T[0] * T[0].transpose() + T[1] * T[1].transpose();
            err = std::max(err, (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
        }
    }
    return err;
}

inline StateVector mps_statevector(const Mps& mps) {
    const int n = mps.num_sites();
    if (n > 14)
        throw CapabilityError("mps_statevector limited to n <= 14");
    if (n < 1)
        throw SizeError("empty MPS");
    // rows[s] = 1 x D row vector for the partial configuration s on sites [0, i].
    std::vector<Eigen::RowVectorXd> rows(1, Eigen::RowVectorXd::Ones(1));
    for (int i = 0; i < n; ++i) {
        const auto& T = mps.tensors[static_cast<std::size_t>(i)];
        std::vector<Eigen::RowVectorXd> next(rows.size() * 2);
        for (std::size_t s = 0; s < rows.size(); ++s) {
            next[s] = rows[s] * T[0];
            next[s | (std::size_t{1} << i)] = rows[s] * T[1];
        }
        rows = std::move(next);
    }
    std::vector<Complex> amps(rows.size());
    for (std::size_t s = 0; s < rows.size(); ++s)
        amps[s] = Complex{rows[s](0), 0.0};
    StateVector v(n, std::move(amps));
    if (!(v.norm() > 0.0))
        throw NumericalError("MPS contracts to the zero vector");
    v.normalize();
    return v;
}

// <psi|H|psi> / <psi|psi> by exact contraction with the MPO.
inline double mps_energy(const Mps& mps, const Mpo& mpo) {
    if (mps.num_sites() != mpo.num_sites())
        throw SizeError("MPS and MPO lengths differ");
    detail::Env L = detail::left_boundary();
    detail::Env N = detail::left_boundary();
    MpoSite id(1, 1);
    id.set(0, 0, Eigen::Matrix2d::Identity());
    for (int i = 0; i < mps.num_sites(); ++i) {
        L = detail::extend_left(L, mps.tensors[static_cast<std::size_t>(i)], mpo.sites[static_cast<std::size_t>(i)]);
        N = detail::extend_left(N, mps.tensors[static_cast<std::size_t>(i)], id);
    }
    return L[0](0, 0) / N[0](0, 0);
}

inline DmrgResult dmrg_ground_state(const Mpo& mpo, const DmrgConfig& config) {
    config.validate();
    const int n = mpo.num_sites();
    if (n < 2)
        throw ContractError("two-site DMRG needs at least two sites");
    using namespace detail;

    Rng rng(config.seed);
    DmrgResult res;
    Mps& mps = res.mps;
    mps = random_mps(n, std::min(config.max_bond, 8), rng);

    // R[i] = environment of sites [i, n); L[i] = environment of sites [0, i).
    std::vector<Env> L(static_cast<std::size_t>(n + 1)), R(static_cast<std::size_t>(n + 1));
    L[0] = left_boundary();
    R[static_cast<std::size_t>(n)] = right_boundary();
    for (int i = n - 1; i >= 1; --i)
        R[static_cast<std::size_t>(i)] = extend_right(R[static_cast<std::size_t>(i + 1)],
                                                      mps.tensors[static_cast<std::size_t>(i)],
                                                      mpo.sites[static_cast<std::size_t>(i)]);

    auto optimize = [&](int i, bool move_right) {
        auto& A = mps.tensors[static_cast<std::size_t>(i)];
        auto& B = mps.tensors[static_cast<std::size_t>(i + 1)];
        Theta th;
        for (int s1 = 0; s1 < 2; ++s1)
            for (int s2 = 0; s2 < 2; ++s2)
                th[static_cast<std::size_t>(s1 + 2 * s2)] = A[static_cast<std::size_t>(s1)] * B[static_cast<std::size_t>(s2)];
        TwoSiteOperator H(L[static_cast<std::size_t>(i)], R[static_cast<std::size_t>(i + 2)],
                          mpo.sites[static_cast<std::size_t>(i)], mpo.sites[static_cast<std::size_t>(i + 1)]);
        const double e = local_ground_state(H, th, config.local_solver_iters, config.local_tol);
        Split sp = split_theta(th, config.max_bond, config.svd_cutoff, move_right);
        A = std::move(sp.left);
        B = std::move(sp.right);
        res.diagnostics.discarded_weights.push_back(sp.discarded);
        res.diagnostics.max_discarded_weight = std::max(res.diagnostics.max_discarded_weight, sp.discarded);
        if (move_right) {
            L[static_cast<std::size_t>(i + 1)] =
                extend_left(L[static_cast<std::size_t>(i)], A, mpo.sites[static_cast<std::size_t>(i)]);
            mps.center = i + 1;
        } else {
            R[static_cast<std::size_t>(i + 1)] =
                extend_right(R[static_cast<std::size_t>(i + 2)], B, mpo.sites[static_cast<std::size_t>(i + 1)]);
            mps.center = i;
        }
        return e;
    };

    double prev = std::numeric_limits<double>::infinity();
    double energy = prev;
    for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
        for (int i = 0; i + 1 < n; ++i)
            energy = optimize(i, true);
        for (int i = n - 2; i >= 0; --i)
            energy = optimize(i, false);
        res.diagnostics.sweeps = sweep + 1;
        res.diagnostics.sweep_energies.push_back(energy);
        if (energy > prev + 1e-10 * std::max(1.0, std::abs(prev)))
            res.diagnostics.non_monotone = true;
        if (std::abs(energy - prev) < config.energy_tol) {
            res.diagnostics.converged = true;
            break;
        }
        prev = energy;
    }
    res.energy = energy;
    res.diagnostics.max_bond_used = mps.max_bond();
    return res;
}

inline DmrgResult dmrg_ground_state(const TfimModel& model, const DmrgConfig& config) {
    return dmrg_ground_state(build_tfim_mpo(model), config);
}

// One JSON header line, then every tensor entry as a little-endian double:
// site-major, physical index next, column-major within each matrix.
inline void write_mps(std::ostream& os, const Mps& mps) {
    const nlohmann::json header = {{"format", "magicbench-mps v1"},
                                   {"n", mps.num_sites()},
                                   {"bond_dims", mps.bond_dims()},
                                   {"center", mps.center}};
    os << header.dump() << '\n';
    static_assert(std::endian::native == std::endian::little, "MPS payload assumes a little-endian host");
    for (const auto& T : mps.tensors)
        for (const auto& m : T)
            os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!os)
        throw IoError("failed writing MPS");
}

inline Mps read_mps(std::istream& is) {
    std::string line;
    if (!std::getline(is, line))
        throw IoError("missing MPS header");
    const auto header = nlohmann::json::parse(line);
    if (header.value("format", "") != "magicbench-mps v1")
        throw IoError("unrecognized MPS format");
    const int n = header.at("n").get<int>();
    const auto dims = header.at("bond_dims").get<std::vector<int>>();
    if (n < 1 || dims.size() != static_cast<std::size_t>(n + 1))
        throw IoError("MPS header inconsistent");
    Mps mps;
    mps.center = header.at("center").get<int>();
    mps.tensors.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (auto& m : mps.tensors[static_cast<std::size_t>(i)]) {
            m.resize(dims[static_cast<std::size_t>(i)], dims[static_cast<std::size_t>(i + 1)]);
            is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
        }
    if (!is)
        throw IoError("truncated MPS payload");
    return mps;
}

} // namespace magicbench::dmrg
