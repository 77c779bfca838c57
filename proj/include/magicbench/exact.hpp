#pragma once

// Exact diagonalization reference for the transverse-field Ising chain.
//
// n <= 10 uses a dense symmetric eigensolver; larger chains use a Lanczos
// iteration with full reorthogonalization and a matrix-free Hamiltonian.
// The two lowest levels are always computed. When they are closer than
// kDegeneracyThreshold the returned vector is the even-parity member of the
// ground space, so repeated runs always report the same representative.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magicbench/core.hpp"
#include "magicbench/random.hpp"

namespace magicbench {

inline constexpr int kMaxDenseQubits = 14;
inline constexpr int kMaxDenseSolverQubits = 10;
inline constexpr double kDegeneracyThreshold = 1e-10;
inline constexpr double kEdResidualTarget = 1e-10;

enum class EigenSolverKind { automatic, dense, lanczos };

struct EdOptions {
    EigenSolverKind solver = EigenSolverKind::automatic;
    double tolerance = 1e-12;
    int max_krylov = 300;
    int max_restarts = 20;
    std::uint64_t seed = 0x5EEDull;
};

struct EdResult {
    double energy = 0.0;
    double first_excited = 0.0;
    double gap = 0.0;
    StateVector state;
    // True when the lowest two levels were degenerate and the even-parity
    // representative was selected.
    bool parity_projected = false;
    std::string solver;
    int iterations = 0;
    double residual = 0.0;
};

// Real, matrix-free form of a Pauli-term Hamiltonian whose terms all have real
// matrix elements (even number of Y factors), as is the case for the TFIM.
class RealTermOperator {
  public:
    explicit RealTermOperator(std::span<const PauliTerm> terms, int n) : n_(n) {
        check_terms(terms, n);
        for (const auto& t : terms) {
            const Complex ph = detail::i_power(t.op.y_count());
            if (ph.imag() != 0.0)
                throw ContractError("RealTermOperator needs real matrix elements");
            entries_.push_back({t.op.x_mask, t.op.z_mask, ph.real() * t.coefficient});
        }
    }

    int num_qubits() const { return n_; }
    std::size_t dim() const { return std::size_t{1} << n_; }

    void apply(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
        out.setZero(in.size());
        for (const auto& e : entries_) {
            for (std::uint64_t s = 0; s < in.size(); ++s) {
                const double a = e.coeff * in[static_cast<Eigen::Index>(s)];
                out[static_cast<Eigen::Index>(s ^ e.x)] += detail::odd_parity(e.z & s) ? -a : a;
            }
        }
    }

  private:
    struct Entry {
        std::uint64_t x, z;
        double coeff;
    };
    int n_;
    std::vector<Entry> entries_;
};

inline Eigen::MatrixXd dense_hamiltonian(const TfimModel& model) {
    model.validate();
    if (model.n > kMaxDenseQubits)
        throw CapabilityError("dense Hamiltonian limited to n <= " +
                              std::to_string(kMaxDenseQubits) +
                              "; use the matrix-free Lanczos path");
    const auto terms = tfim_terms(model);
    const Eigen::Index dim = Eigen::Index{1} << model.n;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& t : terms) {
        const double c = detail::i_power(t.op.y_count()).real() * t.coefficient;
        for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(dim); ++s) {
            const double v = detail::odd_parity(t.op.z_mask & s) ? -c : c;
            H(static_cast<Eigen::Index>(s ^ t.op.x_mask), static_cast<Eigen::Index>(s)) += v;
        }
    }
    return H;
}

namespace detail {

struct LanczosResult {
    double value = 0.0;
    Eigen::VectorXd vector;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

inline void project_out(Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& basis) {
    for (const auto& b : basis)
        w -= b.dot(w) * b;
}

// Lowest eigenpair of a symmetric operator restricted to the orthogonal
// complement of `deflate`. Thick restarts reuse the current Ritz vector.
template <typename Apply>
LanczosResult lanczos_lowest(Apply&& apply, Eigen::VectorXd start,
                             const std::vector<Eigen::VectorXd>& deflate, const EdOptions& opt) {
    const Eigen::Index dim = start.size();
    LanczosResult res;
    project_out(start, deflate);
    Eigen::VectorXd x = start.normalized();
    Eigen::VectorXd w(dim);
    const int max_k = static_cast<int>(std::min<Eigen::Index>(opt.max_krylov, dim));

    for (int restart = 0; restart <= opt.max_restarts; ++restart) {
        std::vector<Eigen::VectorXd> V{x};
        std::vector<double> alpha, beta;
        Eigen::VectorXd ritz;
        double theta = 0.0;
        for (int j = 0; j < max_k; ++j) {
            apply(V[j], w);
            ++res.iterations;
            const double a = V[j].dot(w);
            w -= a * V[j];
            if (j > 0)
                w -= beta[j - 1] * V[j - 1];
            // Two passes of classical Gram-Schmidt keep the basis orthogonal to
            // working precision.
            for (int pass = 0; pass < 2; ++pass) {
                project_out(w, V);
                project_out(w, deflate);
            }
            alpha.push_back(a);
            const double b = w.norm();
            const int k = j + 1;
            const bool last = (k == max_k) || b < 1e-13 * std::max(1.0, std::abs(a));
            if (last || k % 4 == 0) {
                Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(alpha.data(), k);
                Eigen::VectorXd e = k > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), k - 1))
                                          : Eigen::VectorXd();
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
                tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
                theta = tri.eigenvalues()(0);
                ritz = tri.eigenvectors().col(0);
                const double est = b * std::abs(ritz(k - 1));
                if (last || est < 0.1 * kEdResidualTarget)
                    break;
            }
            beta.push_back(b);
            V.push_back(w / b);
        }
        x.setZero(dim);
        for (Eigen::Index i = 0; i < ritz.size(); ++i)
            x += ritz(i) * V[static_cast<std::size_t>(i)];
        project_out(x, deflate);
        x.normalize();
        apply(x, w);
        ++res.iterations;
        theta = x.dot(w);
        res.value = theta;
        res.residual = (w - theta * x).norm();
        res.vector = x;
        if (res.residual <= 0.1 * kEdResidualTarget) {
            res.converged = true;
            return res;
        }
    }
    res.converged = res.residual <= kEdResidualTarget;
    return res;
}

inline std::uint64_t flip_index(std::uint64_t s, int n) { return ~s & all_ones(n); }

// Fix the global phase: first amplitude of (numerically) maximal modulus is real positive.
inline void canonical_sign(Eigen::VectorXd& v) {
    const double mx = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) >= mx * (1.0 - 1e-9)) {
            if (v(i) < 0)
                v = -v;
            return;
        }
    }
}

inline Eigen::VectorXd even_part(const Eigen::VectorXd& v, int n) {
    Eigen::VectorXd e(v.size());
    for (Eigen::Index s = 0; s < v.size(); ++s)
        e(s) = 0.5 * (v(s) + v(static_cast<Eigen::Index>(flip_index(static_cast<std::uint64_t>(s), n))));
    return e;
}

} // namespace detail

inline EdResult ground_state_ed(const TfimModel& model, const EdOptions& opt = {}) {
    model.validate();
    if (model.n > kMaxDenseQubits)
        throw CapabilityError("exact diagonalization limited to n <= " +
                              std::to_string(kMaxDenseQubits));
    const int n = model.n;
    const auto terms = tfim_terms(model);
    const RealTermOperator op(terms, n);
    const auto apply = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) { op.apply(in, out); };

    EigenSolverKind kind = opt.solver;
    if (kind == EigenSolverKind::automatic)
        kind = n <= kMaxDenseSolverQubits ? EigenSolverKind::dense : EigenSolverKind::lanczos;

    EdResult r;
    Eigen::VectorXd v0, v1;
    if (kind == EigenSolverKind::dense) {
        const Eigen::MatrixXd H = dense_hamiltonian(model);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        if (es.info() != Eigen::Success)
            throw NumericalError("dense eigensolver failed");
        r.energy = es.eigenvalues()(0);
        r.first_excited = H.rows() > 1 ? es.eigenvalues()(1) : r.energy;
        v0 = es.eigenvectors().col(0);
        if (H.rows() > 1)
            v1 = es.eigenvectors().col(1);
        r.solver = "dense";
    } else {
        const Eigen::Index dim = Eigen::Index{1} << n;
        Rng rng(opt.seed);
        std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
        Eigen::VectorXd start(dim);
        for (Eigen::Index i = 0; i < dim; ++i)
            start(i) = g(rng);
        start(0) += 1.0;
        auto first = detail::lanczos_lowest(apply, start, {}, opt);
        if (!first.converged)
            throw NumericalError("Lanczos did not converge after " + std::to_string(first.iterations) +
                                 " matrix applications (residual " + std::to_string(first.residual) + ")");
        // A fresh start vector: the first one has no component in an exactly
        // degenerate ground space beyond what the first Ritz vector already holds.
        Rng rng2(derive_seed(opt.seed, 1));
        Eigen::VectorXd start2(dim);
        for (Eigen::Index i = 0; i < dim; ++i)
            start2(i) = g(rng2);
        auto second = detail::lanczos_lowest(apply, start2, {first.vector}, opt);
        if (!second.converged)
            throw NumericalError("Lanczos (second level) did not converge after " +
                                 std::to_string(second.iterations) + " matrix applications");
        r.energy = first.value;
        r.first_excited = second.value;
        // Deflation may return the lower of the two if the first run landed on
        // the upper member of a near-degenerate pair.
        v0 = first.vector;
        v1 = second.vector;
        if (r.first_excited < r.energy) {
            std::swap(r.energy, r.first_excited);
            std::swap(v0, v1);
        }
        r.iterations = first.iterations + second.iterations;
        r.solver = "lanczos";
    }
    r.gap = r.first_excited - r.energy;

    if (v1.size() > 0 && r.gap < kDegeneracyThreshold) {
        Eigen::VectorXd e0 = detail::even_part(v0, n);
        Eigen::VectorXd e1 = detail::even_part(v1, n);
        v0 = e0.norm() >= e1.norm() ? e0 : e1;
        r.parity_projected = true;
    }
    v0.normalize();
    detail::canonical_sign(v0);

    Eigen::VectorXd hv;
    op.apply(v0, hv);
    r.residual = (hv - r.energy * v0).norm();
    if (r.residual > kEdResidualTarget)
        throw NumericalError("ground state residual " + std::to_string(r.residual) +
                             " above target after " + std::to_string(r.iterations) + " iterations");

    std::vector<Complex> amps(static_cast<std::size_t>(v0.size()));
    for (Eigen::Index i = 0; i < v0.size(); ++i)
        amps[static_cast<std::size_t>(i)] = v0(i);
    r.state = StateVector(n, std::move(amps));
    return r;
}

// Versioned JSON cache of reference values keyed by (n, J, h, periodic).
struct GoldenEntry {
    int n = 0;
    double J = 0.0;
    double h = 0.0;
    bool periodic = true;
    double energy = 0.0;
    double m2 = 0.0;
};

class GoldenCache {
  public:
    static constexpr int kVersion = 1;

    static GoldenCache load(const std::filesystem::path& path) {
        GoldenCache c;
        std::ifstream in(path);
        if (!in)
            return c;
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed golden cache " + path.string() + ": " + e.what());
        }
        if (j.value("version", 0) != kVersion)
            throw IoError("golden cache version mismatch in " + path.string());
        for (const auto& e : j.at("entries"))
            c.entries_.push_back({e.at("n").get<int>(), e.at("J").get<double>(), e.at("h").get<double>(),
                                  e.at("periodic").get<bool>(), e.at("energy").get<double>(),
                                  e.at("m2").get<double>()});
        return c;
    }

    void save(const std::filesystem::path& path) const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& e : entries_)
            arr.push_back({{"n", e.n}, {"J", e.J}, {"h", e.h}, {"periodic", e.periodic},
                           {"energy", e.energy}, {"m2", e.m2}});
        const nlohmann::json j = {{"version", kVersion}, {"entries", arr}};
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp);
            if (!out)
                throw IoError("cannot write " + tmp.string());
            out << j.dump(2) << '\n';
            if (!out)
                throw IoError("write failed for " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    }

    std::optional<GoldenEntry> find(int n, double J, double h, bool periodic) const {
        for (const auto& e : entries_)
            if (e.n == n && e.J == J && e.h == h && e.periodic == periodic)
                return e;
        return std::nullopt;
    }

    void insert(const GoldenEntry& entry) {
        for (auto& e : entries_) {
            if (e.n == entry.n && e.J == entry.J && e.h == entry.h && e.periodic == entry.periodic) {
                e = entry;
                return;
            }
        }
        entries_.push_back(entry);
    }

    const std::vector<GoldenEntry>& entries() const { return entries_; }

  private:
    std::vector<GoldenEntry> entries_;
};

} // namespace magicbench
