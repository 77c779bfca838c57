#pragma once

// Restricted Boltzmann machine wavefunction with the hidden layer summed out:
//
//   log psi(s) = sum_j a_j s_j + sum_i log(2 cosh(b_i + sum_j W_ij s_j)),
//
// its Z2-symmetrized variant psi_sym(s) = (psi(s) + psi(-s)) / 2, Metropolis
// sampling of |psi|^2, local energies, and stochastic-reconfiguration training
// driven by Adam.
//
// Parameters are flattened as [a (n), b (m), W row-major (m x n)].

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magicbench/core.hpp"
#include "magicbench/parallel.hpp"
#include "magicbench/random.hpp"

namespace magicbench::nqs {

enum class AmplitudeKind { standard, symmetric };
enum class ExpectationMode { monte_carlo, full_sum };

// log(0): returned when the symmetrized amplitude cancels exactly.
inline const Complex kLogZero{-std::numeric_limits<double>::infinity(), 0.0};
inline bool is_log_zero(const Complex& l) { return std::isinf(l.real()) && l.real() < 0; }

struct RbmParameters {
    int n = 0;
    int m = 0;
    Eigen::VectorXcd a;
    Eigen::VectorXcd b;
    Eigen::MatrixXcd W; // m x n

    RbmParameters() = default;
    RbmParameters(int n_, int alpha) : n(n_), m(alpha * n_) {
        if (n_ < 1 || n_ > kMaxQubits)
            throw SizeError("RBM visible size out of range");
        if (alpha < 1)
            throw ContractError("RBM alpha must be a positive integer");
        a = Eigen::VectorXcd::Zero(n);
        b = Eigen::VectorXcd::Zero(m);
        W = Eigen::MatrixXcd::Zero(m, n);
    }

    // Complex Gaussian start, stddev per real component.
    static RbmParameters random(int n, int alpha, Rng& rng, double stddev = 0.01) {
        RbmParameters p(n, alpha);
        for (int j = 0; j < p.n; ++j)
            p.a(j) = complex_normal(rng, stddev);
        for (int i = 0; i < p.m; ++i)
            p.b(i) = complex_normal(rng, stddev);
        for (int i = 0; i < p.m; ++i)
            for (int j = 0; j < p.n; ++j)
                p.W(i, j) = complex_normal(rng, stddev);
        return p;
    }

    int alpha() const { return m / n; }
    Eigen::Index size() const { return Eigen::Index{n} + m + Eigen::Index{m} * n; }

    Eigen::VectorXcd flatten() const {
        Eigen::VectorXcd v(size());
        v.head(n) = a;
        v.segment(n, m) = b;
        for (int i = 0; i < m; ++i)
            v.segment(n + m + Eigen::Index{i} * n, n) = W.row(i).transpose();
        return v;
    }

    void assign(const Eigen::VectorXcd& v) {
        if (v.size() != size())
            throw SizeError("parameter vector length mismatch");
        a = v.head(n);
        b = v.segment(n, m);
        for (int i = 0; i < m; ++i)
            W.row(i) = v.segment(n + m + Eigen::Index{i} * n, n).transpose();
    }

    bool all_finite() const { return a.allFinite() && b.allFinite() && W.allFinite(); }
};

// log(2 cosh z), stable for large |Re z|.
inline Complex log_cosh2(Complex z) {
    if (z.real() < 0)
        z = -z;
    return z + std::log(1.0 + std::exp(-2.0 * z));
}

// log((e^x + e^y) / 2). Symmetric in its arguments bit-for-bit: the larger of
// the two (lexicographic on (re, im)) is always factored out.
inline Complex log_mean_exp(Complex x, Complex y) {
    const bool x_first = x.real() > y.real() || (x.real() == y.real() && x.imag() >= y.imag());
    const Complex hi = x_first ? x : y;
    const Complex lo = x_first ? y : x;
    if (is_log_zero(hi))
        return kLogZero;
    if (is_log_zero(lo))
        return hi - std::log(2.0);
    const Complex t = 1.0 + std::exp(lo - hi);
    if (t == Complex{})
        return kLogZero;
    return hi + std::log(t) - std::log(2.0);
}

namespace detail {

inline void check_config(const RbmParameters& p, const SpinConfiguration& s) {
    if (s.n != p.n)
        throw SizeError("configuration size does not match RBM visible layer");
}

inline Complex raw_log_amplitude(const RbmParameters& p, std::uint32_t bits) {
    Complex acc{};
    for (int j = 0; j < p.n; ++j)
        acc += ((bits >> j) & 1u) ? -p.a(j) : p.a(j);
    for (int i = 0; i < p.m; ++i) {
        Complex theta = p.b(i);
        for (int j = 0; j < p.n; ++j)
            theta += ((bits >> j) & 1u) ? -p.W(i, j) : p.W(i, j);
        acc += log_cosh2(theta);
    }
    return acc;
}

} // namespace detail

inline Complex log_amplitude(const RbmParameters& p, const SpinConfiguration& s) {
    detail::check_config(p, s);
    const Complex l = detail::raw_log_amplitude(p, s.bits);
    if (!std::isfinite(l.real()) || !std::isfinite(l.imag()))
        throw NumericalError("RBM log-amplitude is not finite (parameter blow-up)");
    return l;
}

inline Complex log_amplitude_symmetric(const RbmParameters& p, const SpinConfiguration& s) {
    detail::check_config(p, s);
    return log_mean_exp(log_amplitude(p, s), log_amplitude(p, s.flipped()));
}

inline Complex log_amplitude(const RbmParameters& p, const SpinConfiguration& s, AmplitudeKind kind) {
    return kind == AmplitudeKind::symmetric ? log_amplitude_symmetric(p, s) : log_amplitude(p, s);
}

// Incremental evaluator holding the hidden pre-activations
// theta_+ = b + W s and theta_- = b - W s; a spin flip updates them in O(m).
class RbmWalker {
  public:
    RbmWalker(const RbmParameters& p, std::uint32_t bits, AmplitudeKind kind)
        : p_(&p), kind_(kind), bits_(bits) {
        theta_p_ = p.b;
        theta_m_ = p.b;
        visible_ = Complex{};
        for (int j = 0; j < p.n; ++j) {
            const double sj = ((bits >> j) & 1u) ? -1.0 : 1.0;
            visible_ += sj * p.a(j);
            theta_p_ += sj * p.W.col(j);
            theta_m_ -= sj * p.W.col(j);
        }
        refresh();
    }

    std::uint32_t bits() const { return bits_; }
    Complex log_value() const { return combine(log_p_, log_m_); }

    Complex log_value_after_flip(int j) const {
        const double sj = ((bits_ >> j) & 1u) ? -1.0 : 1.0;
        const Complex dv = -2.0 * sj * p_->a(j);
        Complex lp = visible_ + dv, lm = -(visible_ + dv);
        for (int i = 0; i < p_->m; ++i) {
            const Complex dw = 2.0 * sj * p_->W(i, j);
            lp += log_cosh2(theta_p_(i) - dw);
            lm += log_cosh2(theta_m_(i) + dw);
        }
        return combine(lp, lm);
    }

    void flip(int j) {
        const double sj = ((bits_ >> j) & 1u) ? -1.0 : 1.0;
        visible_ -= 2.0 * sj * p_->a(j);
        theta_p_ -= 2.0 * sj * p_->W.col(j);
        theta_m_ += 2.0 * sj * p_->W.col(j);
        bits_ ^= 1u << j;
        refresh();
    }

  private:
    void refresh() {
        log_p_ = visible_;
        log_m_ = -visible_;
        for (int i = 0; i < p_->m; ++i) {
            log_p_ += log_cosh2(theta_p_(i));
            log_m_ += log_cosh2(theta_m_(i));
        }
    }
    Complex combine(const Complex& lp, const Complex& lm) const {
        return kind_ == AmplitudeKind::symmetric ? log_mean_exp(lp, lm) : lp;
    }

    const RbmParameters* p_;
    AmplitudeKind kind_;
    std::uint32_t bits_;
    Eigen::VectorXcd theta_p_, theta_m_;
    Complex visible_{};
    Complex log_p_{}, log_m_{};
};

struct SamplerConfig {
    int n_samples = 1000;
    int n_chains = 8;
    int burn_in = 100; // sweeps of n proposals
    std::uint64_t seed = 0;

    void validate() const {
        if (n_samples < 1 || n_chains < 1 || n_samples % n_chains != 0)
            throw ConfigError("n_samples must be a positive multiple of n_chains");
        if (burn_in < 1)
            throw ConfigError("burn_in must be at least one sweep");
    }
};

// Metropolis-Hastings with single-spin-flip proposals, one sample recorded
// after every sweep. Chains use independent derived seeds; output is ordered
// by chain so it does not depend on `workers`.
inline std::vector<SpinConfiguration> sample(const RbmParameters& params, const TfimModel& model,
                                             const SamplerConfig& config, AmplitudeKind kind,
                                             unsigned workers = 1) {
    config.validate();
    if (model.n != params.n)
        throw SizeError("model and RBM sizes differ");
    const int n = params.n;
    const int per_chain = config.n_samples / config.n_chains;
    std::vector<SpinConfiguration> out(static_cast<std::size_t>(config.n_samples));

    parallel_for(static_cast<std::size_t>(config.n_chains), workers, [&](std::size_t c) {
        Rng rng(derive_seed(config.seed, c));
        std::uniform_int_distribution<std::uint32_t> start_dist(0, (1u << n) - 1);
        std::uniform_int_distribution<int> site(0, n - 1);
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        constexpr int kMaxStartRetries = 1000;
        std::uint32_t start = start_dist(rng);
        RbmWalker walker(params, start, kind);
        for (int r = 0; is_log_zero(walker.log_value()); ++r) {
            if (r >= kMaxStartRetries)
                throw NumericalError("sampler could not find a start configuration with nonzero amplitude");
            walker = RbmWalker(params, start_dist(rng), kind);
        }

        Complex current = walker.log_value();
        auto sweep = [&] {
            for (int k = 0; k < n; ++k) {
                const int j = site(rng);
                const Complex prop = walker.log_value_after_flip(j);
                const double u = unif(rng);
                if (is_log_zero(prop))
                    continue;
                const double log_ratio = 2.0 * (prop.real() - current.real());
                if (log_ratio >= 0.0 || u < std::exp(log_ratio)) {
                    walker.flip(j);
                    current = walker.log_value();
                }
            }
        };
        for (int b = 0; b < config.burn_in; ++b)
            sweep();
        for (int k = 0; k < per_chain; ++k) {
            sweep();
            out[c * per_chain + k] = SpinConfiguration(walker.bits(), n);
        }
    });
    return out;
}

namespace detail {

inline void check_local_terms(std::span<const PauliTerm> terms, int n) {
    check_terms(terms, n);
    for (const auto& t : terms)
        if (t.op.weight() > 2)
            throw ContractError("local_energy supports terms acting on at most two sites");
}

// E_loc(s) given a walker positioned at s.
inline Complex local_energy_at(const RbmWalker& w, std::span<const PauliTerm> terms) {
    const Complex l0 = w.log_value();
    if (is_log_zero(l0))
        throw ContractError("local energy undefined where the amplitude vanishes");
    const std::uint32_t s = w.bits();
    Complex acc{};
    for (const auto& t : terms) {
        const std::uint32_t x = t.op.x_mask;
        const std::uint32_t sp = s ^ x;
        // <s|P|s^x> = i^k (-1)^{z.(s^x)}
        Complex elem = t.coefficient * magicbench::detail::i_power(t.op.y_count());
        if (magicbench::detail::odd_parity(t.op.z_mask & sp))
            elem = -elem;
        if (x == 0) {
            acc += elem;
            continue;
        }
        Complex lp;
        if (magicbench::detail::popcount(x) == 1) {
            lp = w.log_value_after_flip(std::countr_zero(x));
        } else {
            RbmWalker w2 = w;
            for (std::uint32_t rest = x; rest; rest &= rest - 1)
                w2.flip(std::countr_zero(rest));
            lp = w2.log_value();
        }
        if (!is_log_zero(lp))
            acc += elem * std::exp(lp - l0);
    }
    return acc;
}

} // namespace detail

inline Complex local_energy(const RbmParameters& params, const SpinConfiguration& s,
                            std::span<const PauliTerm> terms, AmplitudeKind kind) {
    detail::check_config(params, s);
    detail::check_local_terms(terms, params.n);
    return detail::local_energy_at(RbmWalker(params, s.bits, kind), terms);
}

// Evaluates the wavefunction on all 2^n configurations and normalizes.
inline StateVector rbm_statevector(const RbmParameters& params, AmplitudeKind kind) {
    const int n = params.n;
    if (n > 14)
        throw CapabilityError("rbm_statevector limited to n <= 14");
    const std::size_t dim = std::size_t{1} << n;
    std::vector<Complex> logs(dim);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < dim; ++s) {
        logs[s] = log_amplitude(params, SpinConfiguration(static_cast<std::uint32_t>(s), n), kind);
        if (!is_log_zero(logs[s]))
            mx = std::max(mx, logs[s].real());
    }
    if (!std::isfinite(mx))
        throw NumericalError("every RBM amplitude vanishes");
    std::vector<Complex> amps(dim);
    for (std::size_t s = 0; s < dim; ++s)
        amps[s] = is_log_zero(logs[s]) ? Complex{} : std::exp(logs[s] - mx);
    StateVector v(n, std::move(amps));
    v.normalize();
    return v;
}

struct EnergyGradient {
    double energy = 0.0;
    double energy_imag = 0.0; // diagnostic; vanishes in expectation
    double variance = 0.0;    // of the local energy
    double std_error = 0.0;   // of `energy`; zero for full summation
    // Re part is dE/dRe(theta_k), Im part is dE/dIm(theta_k).
    Eigen::VectorXcd gradient;
    // Quantum geometric tensor S_kl = <conj(O_k) O_l> - <conj(O_k)><O_l>.
    Eigen::MatrixXcd S;
};

namespace detail {

// Log-derivatives O_k = d log psi / d theta_k for one configuration.
inline void fill_log_derivatives(const RbmParameters& p, std::uint32_t bits, AmplitudeKind kind,
                                 Eigen::RowVectorXcd& out) {
    const int n = p.n, m = p.m;
    Eigen::VectorXd sig(n);
    for (int j = 0; j < n; ++j)
        sig(j) = ((bits >> j) & 1u) ? -1.0 : 1.0;
    const Eigen::VectorXcd theta_p = p.b + p.W * sig.cast<Complex>();
    const Eigen::VectorXcd tanh_p = theta_p.unaryExpr([](Complex z) { return std::tanh(z); });
    auto write = [&](const Eigen::VectorXd& s, const Eigen::VectorXcd& th, Complex weight, bool add) {
        for (int j = 0; j < n; ++j)
            out(j) = (add ? out(j) : Complex{}) + weight * s(j);
        for (int i = 0; i < m; ++i) {
            out(n + i) = (add ? out(n + i) : Complex{}) + weight * th(i);
            for (int j = 0; j < n; ++j) {
                const Eigen::Index k = n + m + Eigen::Index{i} * n + j;
                out(k) = (add ? out(k) : Complex{}) + weight * th(i) * s(j);
            }
        }
    };
    if (kind == AmplitudeKind::standard) {
        write(sig, tanh_p, 1.0, false);
        return;
    }
    const Eigen::VectorXd msig = -sig;
    const Eigen::VectorXcd theta_m = p.b + p.W * msig.cast<Complex>();
    const Eigen::VectorXcd tanh_m = theta_m.unaryExpr([](Complex z) { return std::tanh(z); });
    Complex lp = Complex{}, lm = Complex{};
    for (int j = 0; j < n; ++j) {
        lp += sig(j) * p.a(j);
        lm -= sig(j) * p.a(j);
    }
    for (int i = 0; i < m; ++i) {
        lp += log_cosh2(theta_p(i));
        lm += log_cosh2(theta_m(i));
    }
    // psi(s) / (psi(s) + psi(-s)) and its complement
    const Complex wp = 1.0 / (1.0 + std::exp(lm - lp));
    const Complex wm = 1.0 - wp;
    write(sig, tanh_p, wp, false);
    write(msig, tanh_m, wm, true);
}

// Weighted estimator core: `weights` sum to one.
inline EnergyGradient weighted_estimate(const RbmParameters& p, std::span<const std::uint32_t> configs,
                                        std::span<const double> weights, std::span<const Complex> eloc,
                                        AmplitudeKind kind, bool compute_s) {
    const Eigen::Index N = static_cast<Eigen::Index>(configs.size());
    const Eigen::Index P = p.size();
    Eigen::MatrixXcd O(N, P);
    Eigen::RowVectorXcd row(P);
    for (Eigen::Index r = 0; r < N; ++r) {
        fill_log_derivatives(p, configs[static_cast<std::size_t>(r)], kind, row);
        O.row(r) = row;
    }

    Eigen::Map<const Eigen::VectorXd> w(weights.data(), N);
    Eigen::Map<const Eigen::VectorXcd> el(eloc.data(), N);
    const Complex e_mean = (w.cast<Complex>().array() * el.array()).sum();
    const Eigen::RowVectorXcd o_mean = w.cast<Complex>().transpose() * O;

    EnergyGradient g;
    g.energy = e_mean.real();
    g.energy_imag = e_mean.imag();
    g.variance = (w.array() * (el.array() - e_mean).abs2()).sum();

    const Eigen::VectorXd sw = w.cwiseSqrt();
    Eigen::MatrixXcd Y = O.rowwise() - o_mean;
    Y = sw.cast<Complex>().asDiagonal() * Y;
    const Eigen::VectorXcd de = sw.cast<Complex>().cwiseProduct((el.array() - e_mean).matrix());
    g.gradient = 2.0 * (Y.adjoint() * de);
    if (compute_s)
        g.S = Y.adjoint() * Y;
    return g;
}

} // namespace detail

// Exact expectation over the full Hilbert space (weights |psi(s)|^2 / Z).
inline EnergyGradient energy_and_gradient_full(const RbmParameters& p, std::span<const PauliTerm> terms,
                                               AmplitudeKind kind, bool compute_s = true) {
    detail::check_local_terms(terms, p.n);
    if (p.n > 14)
        throw CapabilityError("full-sum estimation limited to n <= 14");
    const std::size_t dim = std::size_t{1} << p.n;
    std::vector<Complex> logs(dim);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < dim; ++s) {
        logs[s] = log_amplitude(p, SpinConfiguration(static_cast<std::uint32_t>(s), p.n), kind);
        if (!is_log_zero(logs[s]))
            mx = std::max(mx, logs[s].real());
    }
    if (!std::isfinite(mx))
        throw NumericalError("every RBM amplitude vanishes");

    std::vector<std::uint32_t> configs;
    std::vector<double> weights;
    configs.reserve(dim);
    weights.reserve(dim);
    double z = 0.0;
    for (std::size_t s = 0; s < dim; ++s) {
        if (is_log_zero(logs[s]))
            continue;
        const double wgt = std::exp(2.0 * (logs[s].real() - mx));
        if (wgt == 0.0)
            continue;
        configs.push_back(static_cast<std::uint32_t>(s));
        weights.push_back(wgt);
        z += wgt;
    }
    for (auto& wgt : weights)
        wgt /= z;

    std::vector<Complex> eloc(configs.size());
    for (std::size_t r = 0; r < configs.size(); ++r) {
        const std::uint32_t s = configs[r];
        Complex acc{};
        for (const auto& t : terms) {
            const std::uint32_t sp = s ^ t.op.x_mask;
            Complex elem = t.coefficient * magicbench::detail::i_power(t.op.y_count());
            if (magicbench::detail::odd_parity(t.op.z_mask & sp))
                elem = -elem;
            if (sp == s)
                acc += elem;
            else if (!is_log_zero(logs[sp]))
                acc += elem * std::exp(logs[sp] - logs[s]);
        }
        eloc[r] = acc;
    }
    auto g = detail::weighted_estimate(p, configs, weights, eloc, kind, compute_s);
    g.std_error = 0.0;
    return g;
}

// Monte Carlo estimate from configurations drawn from |psi|^2 (equal weights).
inline EnergyGradient energy_and_gradient_samples(const RbmParameters& p, std::span<const PauliTerm> terms,
                                                  std::span<const SpinConfiguration> samples,
                                                  AmplitudeKind kind, bool compute_s = true) {
    detail::check_local_terms(terms, p.n);
    if (samples.empty())
        throw ContractError("no samples supplied");
    std::vector<std::uint32_t> configs(samples.size());
    std::vector<Complex> eloc(samples.size());
    for (std::size_t r = 0; r < samples.size(); ++r) {
        detail::check_config(p, samples[r]);
        configs[r] = samples[r].bits;
        eloc[r] = detail::local_energy_at(RbmWalker(p, samples[r].bits, kind), terms);
    }
    const std::vector<double> weights(samples.size(), 1.0 / static_cast<double>(samples.size()));
    auto g = detail::weighted_estimate(p, configs, weights, eloc, kind, compute_s);
    g.std_error = std::sqrt(g.variance / static_cast<double>(samples.size()));
    return g;
}

struct CgResult {
    Eigen::VectorXcd x;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

// Conjugate gradient for (A + shift I) x = rhs with A Hermitian positive semidefinite.
inline CgResult conjugate_gradient(const Eigen::MatrixXcd& A, double shift, const Eigen::VectorXcd& rhs,
                                   double tol = 1e-8, int max_iter = 0) {
    const Eigen::Index P = rhs.size();
    if (max_iter <= 0)
        max_iter = static_cast<int>(std::max<Eigen::Index>(50, 10 * P));
    CgResult r;
    r.x = Eigen::VectorXcd::Zero(P);
    const double bnorm = rhs.norm();
    if (bnorm == 0.0) {
        r.converged = true;
        return r;
    }
    Eigen::VectorXcd res = rhs, dir = rhs;
    double rr = res.squaredNorm();
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXcd Ad = A * dir + shift * dir;
        const Complex dAd = dir.dot(Ad);
        if (!(dAd.real() > 0.0) || !std::isfinite(dAd.real()))
            break;
        const double step = rr / dAd.real();
        r.x += step * dir;
        res -= step * Ad;
        const double rr_new = res.squaredNorm();
        r.iterations = it + 1;
        r.relative_residual = std::sqrt(rr_new) / bnorm;
        if (!std::isfinite(r.relative_residual))
            break;
        if (r.relative_residual <= tol) {
            r.converged = true;
            return r;
        }
        dir = res + (rr_new / rr) * dir;
        rr = rr_new;
    }
    return r;
}

struct TrainConfig {
    double learning_rate = 0.01;
    double sr_shift = 1e-3;
    int max_epochs = 20000;
    double stop_tol = 1e-7;
    int stop_patience = 500;
    ExpectationMode expectation_mode = ExpectationMode::monte_carlo;
    bool symmetric = false;
    bool use_sr = true;
    double init_stddev = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const {
        if (!(stop_tol > 0.0))
            throw ConfigError("stop_tol must be positive");
        if (stop_patience < 1)
            throw ConfigError("stop_patience must be at least 1");
        if (max_epochs < 1 || !(learning_rate > 0.0) || !(sr_shift >= 0.0))
            throw ConfigError("invalid RBM training configuration");
    }
    AmplitudeKind kind() const { return symmetric ? AmplitudeKind::symmetric : AmplitudeKind::standard; }
};

// Relative change |E_t - E_{t-1}| / |E_{t-1}|, absolute when |E_{t-1}| < 1e-12.
inline double relative_change(double prev, double cur) {
    const double d = std::abs(cur - prev);
    return std::abs(prev) < 1e-12 ? d : d / std::abs(prev);
}

// True when the last `patience` consecutive changes are all below `tol`.
inline bool stopping_window_holds(std::span<const double> energies, double tol, int patience) {
    if (static_cast<int>(energies.size()) < patience + 1)
        return false;
    for (std::size_t t = energies.size() - static_cast<std::size_t>(patience); t < energies.size(); ++t)
        if (!(relative_change(energies[t - 1], energies[t]) < tol))
            return false;
    return true;
}

// Adam over the real and imaginary parts of a complex parameter vector.
class ComplexAdam {
  public:
    ComplexAdam(Eigen::Index size, double lr, double b1, double b2, double eps)
        : lr_(lr), b1_(b1), b2_(b2), eps_(eps), m_(Eigen::VectorXcd::Zero(size)),
          v_re_(Eigen::VectorXd::Zero(size)), v_im_(Eigen::VectorXd::Zero(size)) {}

    Eigen::VectorXcd step(const Eigen::VectorXcd& g) {
        ++t_;
        m_ = b1_ * m_ + (1.0 - b1_) * g;
        v_re_ = b2_ * v_re_ + (1.0 - b2_) * g.real().cwiseAbs2();
        v_im_ = b2_ * v_im_ + (1.0 - b2_) * g.imag().cwiseAbs2();
        const double c1 = 1.0 - std::pow(b1_, t_), c2 = 1.0 - std::pow(b2_, t_);
        Eigen::VectorXcd upd(g.size());
        for (Eigen::Index k = 0; k < g.size(); ++k) {
            const double re = (m_(k).real() / c1) / (std::sqrt(v_re_(k) / c2) + eps_);
            const double im = (m_(k).imag() / c1) / (std::sqrt(v_im_(k) / c2) + eps_);
            upd(k) = lr_ * Complex{re, im};
        }
        return upd;
    }

  private:
    double lr_, b1_, b2_, eps_;
    int t_ = 0;
    Eigen::VectorXcd m_;
    Eigen::VectorXd v_re_, v_im_;
};

struct TrainResult {
    RbmParameters params;
    std::vector<double> history; // energy estimate per epoch
    bool converged = false;
    int epochs = 0;
    double final_shift = 0.0;
    std::uint64_t seed = 0;
};

// sample -> estimate -> SR solve (S + shift I) delta = gradient -> Adam on delta.
inline TrainResult train_rbm(const TfimModel& model, int alpha, const TrainConfig& config,
                             const SamplerConfig& sampler_config, std::uint64_t seed) {
    model.validate();
    config.validate();
    if (config.expectation_mode == ExpectationMode::monte_carlo)
        sampler_config.validate();
    const auto terms = tfim_terms(model);
    const AmplitudeKind kind = config.kind();

    Rng init_rng(derive_seed(seed, 0));
    TrainResult out;
    out.seed = seed;
    out.params = RbmParameters::random(model.n, alpha, init_rng, config.init_stddev);
    ComplexAdam adam(out.params.size(), config.learning_rate, config.adam_beta1, config.adam_beta2,
                     config.adam_eps);
    double shift = config.sr_shift;
    out.history.reserve(static_cast<std::size_t>(std::min(config.max_epochs, 100000)));

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        EnergyGradient g;
        if (config.expectation_mode == ExpectationMode::full_sum) {
            g = energy_and_gradient_full(out.params, terms, kind, config.use_sr);
        } else {
            SamplerConfig sc = sampler_config;
            sc.seed = derive_seed(seed, 1000003ull + static_cast<std::uint64_t>(epoch));
            const auto samples = sample(out.params, model, sc, kind);
            g = energy_and_gradient_samples(out.params, terms, samples, kind, config.use_sr);
        }
        if (!std::isfinite(g.energy) || !g.gradient.allFinite())
            throw NumericalError("RBM training diverged at epoch " + std::to_string(epoch));
        out.history.push_back(g.energy);
        out.epochs = epoch + 1;
        if (stopping_window_holds(out.history, config.stop_tol, config.stop_patience)) {
            out.converged = true;
            break;
        }

        Eigen::VectorXcd delta = g.gradient;
        if (config.use_sr) {
            CgResult cg = conjugate_gradient(g.S, shift, g.gradient);
            for (int retry = 0; !cg.converged; ++retry) {
                if (retry >= 3)
                    throw NumericalError("SR linear solve failed at epoch " + std::to_string(epoch) +
                                         " (shift " + std::to_string(shift) + ")");
                shift *= 10.0;
                cg = conjugate_gradient(g.S, shift, g.gradient);
            }
            delta = cg.x;
        }
        Eigen::VectorXcd theta = out.params.flatten();
        theta -= adam.step(delta);
        out.params.assign(theta);
        if (!out.params.all_finite())
            throw NumericalError("RBM parameters became non-finite at epoch " + std::to_string(epoch));
    }
    out.final_shift = shift;
    return out;
}

// {n, M, a[], b[], W[][], symmetric, seed, history}; complex numbers as [re, im].
inline nlohmann::json to_json(const RbmParameters& p, bool symmetric, std::uint64_t seed,
                              std::span<const double> history) {
    auto cplx = [](Complex z) { return nlohmann::json::array({z.real(), z.imag()}); };
    nlohmann::json a = nlohmann::json::array(), b = nlohmann::json::array(), W = nlohmann::json::array();
    for (int j = 0; j < p.n; ++j)
        a.push_back(cplx(p.a(j)));
    for (int i = 0; i < p.m; ++i) {
        b.push_back(cplx(p.b(i)));
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < p.n; ++j)
            row.push_back(cplx(p.W(i, j)));
        W.push_back(row);
    }
    return {{"format", "magicbench-rbm v1"},
            {"n", p.n},
            {"M", p.m},
            {"a", a},
            {"b", b},
            {"W", W},
            {"symmetric", symmetric},
            {"seed", seed},
            {"history", std::vector<double>(history.begin(), history.end())}};
}

inline RbmParameters rbm_from_json(const nlohmann::json& j) {
    const int n = j.at("n").get<int>(), m = j.at("M").get<int>();
    if (n < 1 || m < 1 || m % n != 0)
        throw ConfigError("RBM blob has invalid sizes");
    RbmParameters p(n, m / n);
    auto cplx = [](const nlohmann::json& v) { return Complex{v.at(0).get<double>(), v.at(1).get<double>()}; };
    for (int j2 = 0; j2 < n; ++j2)
        p.a(j2) = cplx(j.at("a").at(j2));
    for (int i = 0; i < m; ++i) {
        p.b(i) = cplx(j.at("b").at(i));
        for (int j2 = 0; j2 < n; ++j2)
            p.W(i, j2) = cplx(j.at("W").at(i).at(j2));
    }
    return p;
}

} // namespace magicbench::nqs
