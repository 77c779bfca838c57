#pragma once

// Layered hardware-efficient ansatz on a dense statevector simulator.
// One layer: Rx on every qubit, Ry on every qubit, Rz on every qubit, then a
// block of CNOTs. Angles are ordered layer-major, then gate column, then qubit.

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
#include "magicbench/gates.hpp"
#include "magicbench/parallel.hpp"
#include "magicbench/random.hpp"

namespace magicbench::vqe {

enum class Entangler { all_pairs_lex, chain };
enum class EnergyMode { exact, shots };
enum class GradientMethod { adjoint, parameter_shift };

inline std::string to_string(Entangler e) { return e == Entangler::chain ? "chain" : "all_pairs_lex"; }
inline Entangler entangler_from_string(const std::string& s) {
    if (s == "all_pairs_lex")
        return Entangler::all_pairs_lex;
    if (s == "chain")
        return Entangler::chain;
    throw ConfigError("unknown entangler '" + s + "'");
}

struct AnsatzConfig {
    int n = 1;
    int layers = 4;
    Entangler entangler = Entangler::all_pairs_lex;

    void validate() const {
        check_qubits_range();
        if (layers < 1)
            throw ConfigError("ansatz needs at least one layer");
    }
    std::size_t parameter_count() const { return static_cast<std::size_t>(layers) * 3u * static_cast<std::size_t>(n); }

    // (control, target) pairs of one entangling block, in application order.
    std::vector<std::pair<int, int>> cnot_pairs() const {
        std::vector<std::pair<int, int>> out;
        if (entangler == Entangler::chain) {
            for (int i = 0; i + 1 < n; ++i)
                out.emplace_back(i, i + 1);
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    out.emplace_back(i, j);
        }
        return out;
    }

  private:
    void check_qubits_range() const {
        if (n < 1 || n > kMaxQubits)
            throw SizeError("ansatz qubit count out of range");
    }
};

namespace detail {

enum class GateKind { rx, ry, rz, cnot };

struct Op {
    GateKind kind;
    int q0;
    int q1;          // CNOT target
    std::size_t param; // angle index for rotations
};

inline std::vector<Op> circuit(const AnsatzConfig& c) {
    std::vector<Op> ops;
    const auto pairs = c.cnot_pairs();
    std::size_t k = 0;
    for (int l = 0; l < c.layers; ++l) {
        for (GateKind g : {GateKind::rx, GateKind::ry, GateKind::rz})
            for (int q = 0; q < c.n; ++q)
                ops.push_back({g, q, -1, k++});
        for (const auto& [ctl, tgt] : pairs)
            ops.push_back({GateKind::cnot, ctl, tgt, 0});
    }
    return ops;
}

inline Gate2 rotation(GateKind g, double theta) {
    switch (g) {
    case GateKind::rx:
        return gates::rx(theta);
    case GateKind::ry:
        return gates::ry(theta);
    default:
        return gates::rz(theta);
    }
}

inline void apply_op(StateVector& psi, const Op& op, std::span<const double> angles, bool inverse = false) {
    if (op.kind == GateKind::cnot) {
        apply_cnot(psi, op.q0, op.q1);
        return;
    }
    const double t = angles[op.param];
    apply_gate(psi, op.q0, rotation(op.kind, inverse ? -t : t));
}

// sigma/2 generator of a rotation, as a 2x2 gate.
inline Gate2 half_generator(GateKind g) {
    switch (g) {
    case GateKind::rx:
        return {Complex{}, Complex{0.5}, Complex{0.5}, Complex{}};
    case GateKind::ry:
        return {Complex{}, Complex{0, -0.5}, Complex{0, 0.5}, Complex{}};
    default:
        return {Complex{0.5}, Complex{}, Complex{}, Complex{-0.5}};
    }
}

inline void check_angles(const AnsatzConfig& c, std::span<const double> angles) {
    c.validate();
    if (angles.size() != c.parameter_count())
        throw SizeError("angle count does not match ansatz");
    for (double a : angles)
        if (!std::isfinite(a))
            throw ContractError("non-finite circuit angle");
}

} // namespace detail

inline StateVector apply_ansatz(const AnsatzConfig& config, std::span<const double> angles, const StateVector& psi_in) {
    detail::check_angles(config, angles);
    if (psi_in.num_qubits() != config.n)
        throw SizeError("input state size does not match ansatz");
    StateVector psi = psi_in;
    for (const auto& op : detail::circuit(config))
        detail::apply_op(psi, op, angles);
    return psi;
}

inline StateVector ansatz_state(const AnsatzConfig& config, std::span<const double> angles) {
    return apply_ansatz(config, angles, StateVector::basis(config.n, 0));
}

inline double exact_energy(const AnsatzConfig& config, std::span<const double> angles, std::span<const PauliTerm> terms) {
    return expectation_of_terms(terms, ansatz_state(config, angles)).value;
}

namespace detail {

// Index drawn from the distribution |psi_s|^2 by inverting the cumulative sum.
inline std::vector<std::uint64_t> sample_basis(const StateVector& psi, int shots, Rng& rng) {
    std::vector<double> cdf(psi.size());
    double acc = 0.0;
    for (std::size_t s = 0; s < psi.size(); ++s) {
        acc += std::norm(psi[s]);
        cdf[s] = acc;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::uint64_t> out(static_cast<std::size_t>(shots));
    for (auto& o : out) {
        const double r = u(rng) * acc;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
        o = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    }
    return out;
}

// Rotates every qubit touched by `basis` so that the Pauli on it becomes Z.
inline void rotate_to_z(StateVector& psi, const PauliString& basis) {
    const Gate2 h = gates::hadamard();
    const Gate2 sdg = gates::adjoint(gates::phase_s());
    for (int q = 0; q < basis.n; ++q) {
        const bool x = (basis.x_mask >> q) & 1u, z = (basis.z_mask >> q) & 1u;
        if (x && z) {
            apply_gate(psi, q, sdg);
            apply_gate(psi, q, h);
        } else if (x) {
            apply_gate(psi, q, h);
        }
    }
}

} // namespace detail

struct ShotEstimate {
    double energy = 0.0;
    double std_error = 0.0;
};

// Each measurement group gets `shots` fresh samples: all diagonal terms share
// the computational basis, all pure-X terms share the Hadamard basis, any other
// term is measured on its own in its rotated basis.
inline ShotEstimate shot_energy(const StateVector& psi, std::span<const PauliTerm> terms, int shots, std::uint64_t seed) {
    if (shots <= 0)
        throw ConfigError("shots must be positive in shots mode");
    check_terms(terms, psi.num_qubits());
    const int n = psi.num_qubits();
    std::vector<std::vector<PauliTerm>> groups;
    std::vector<PauliString> bases;
    std::vector<PauliTerm> z_terms, x_terms;
    ShotEstimate est;
    for (const auto& t : terms) {
        if (t.op.x_mask == 0 && t.op.z_mask == 0)
            est.energy += t.coefficient;
        else if (t.op.x_mask == 0)
            z_terms.push_back(t);
        else if (t.op.z_mask == 0)
            x_terms.push_back(t);
        else {
            groups.push_back({t});
            bases.push_back(t.op);
        }
    }
    if (!x_terms.empty()) {
        groups.insert(groups.begin(), x_terms);
        bases.insert(bases.begin(), PauliString(static_cast<std::uint32_t>(magicbench::detail::all_ones(n)), 0, n));
    }
    if (!z_terms.empty()) {
        groups.insert(groups.begin(), z_terms);
        bases.insert(bases.begin(), PauliString(0, static_cast<std::uint32_t>(magicbench::detail::all_ones(n)), n));
    }
    double var = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        StateVector rotated = psi;
        detail::rotate_to_z(rotated, bases[g]);
        Rng rng(derive_seed(seed, g));
        const auto outcomes = detail::sample_basis(rotated, shots, rng);
        double sum = 0.0, sum2 = 0.0;
        for (const auto s : outcomes) {
            double v = 0.0;
            for (const auto& t : groups[g]) {
                const std::uint64_t support = t.op.x_mask | t.op.z_mask;
                v += magicbench::detail::odd_parity(support & s) ? -t.coefficient : t.coefficient;
            }
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / shots;
        est.energy += mean;
        if (shots > 1)
            var += std::max(0.0, (sum2 - shots * mean * mean) / (shots - 1)) / shots;
    }
    est.std_error = std::sqrt(var);
    return est;
}

inline double vqe_energy(const AnsatzConfig& config, std::span<const double> angles, std::span<const PauliTerm> terms,
                         EnergyMode mode, int shots = 0, std::uint64_t seed = 0) {
    const StateVector psi = ansatz_state(config, angles);
    if (mode == EnergyMode::exact)
        return expectation_of_terms(terms, psi).value;
    return shot_energy(psi, terms, shots, seed).energy;
}

// dE/dtheta_k = [E(theta_k + pi/2) - E(theta_k - pi/2)] / 2 with exact energies.
inline std::vector<double> parameter_shift_gradient(const AnsatzConfig& config, std::span<const double> angles,
                                                    std::span<const PauliTerm> terms, unsigned workers = 1) {
    detail::check_angles(config, angles);
    const std::size_t P = angles.size();
    std::vector<double> shifted(2 * P);
    parallel_for(2 * P, workers, [&](std::size_t idx) {
        std::vector<double> th(angles.begin(), angles.end());
        const std::size_t k = idx / 2;
        th[k] += (idx % 2 == 0 ? 1.0 : -1.0) * (M_PI / 2);
        shifted[idx] = exact_energy(config, th, terms);
    });
    std::vector<double> g(P);
    for (std::size_t k = 0; k < P; ++k)
        g[k] = 0.5 * (shifted[2 * k] - shifted[2 * k + 1]);
    return g;
}

struct EnergyAndGradient {
    double energy = 0.0;
    std::vector<double> gradient;
};

// Reverse-mode sweep: one forward pass, then the circuit is undone gate by gate
// while carrying H|psi> backwards. Same values as the parameter-shift rule.
inline EnergyAndGradient adjoint_gradient(const AnsatzConfig& config, std::span<const double> angles,
                                          std::span<const PauliTerm> terms) {
    detail::check_angles(config, angles);
    check_terms(terms, config.n);
    const auto ops = detail::circuit(config);
    StateVector phi = StateVector::basis(config.n, 0);
    for (const auto& op : ops)
        detail::apply_op(phi, op, angles);
    StateVector lambda = apply_terms(terms, phi);
    EnergyAndGradient out;
    out.energy = inner_product(phi, lambda).real();
    out.gradient.assign(angles.size(), 0.0);
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        if (it->kind != detail::GateKind::cnot) {
            // d/dtheta of exp(-i theta G) = -i G exp(-i theta G)
            StateVector gphi = phi;
            apply_gate(gphi, it->q0, detail::half_generator(it->kind));
            out.gradient[it->param] = 2.0 * (Complex{0, -1} * inner_product(lambda, gphi)).real();
        }
        detail::apply_op(phi, *it, angles, true);
        detail::apply_op(lambda, *it, angles, true);
    }
    return out;
}

struct VqeTrainConfig {
    double learning_rate = 0.05;
    double inner_tol = 1e-6;
    int inner_window = 3;
    double restart_tol = 1e-4;
    int max_restarts = 5;
    int max_epochs = 5000; // per inner run
    EnergyMode expectation_mode = EnergyMode::exact;
    int shots = 1000;
    GradientMethod gradient = GradientMethod::adjoint;
    double init_stddev = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(inner_tol > 0.0) || !(restart_tol > 0.0) || !(learning_rate > 0.0))
            throw ConfigError("VQE tolerances and learning rate must be positive");
        if (inner_window < 2 || max_epochs < 1 || max_restarts < 1)
            throw ConfigError("invalid VQE training configuration");
        if (expectation_mode == EnergyMode::shots && shots <= 0)
            throw ConfigError("shots must be positive in shots mode");
    }
};

struct VqeRun {
    double energy = 0.0;
    int epochs = 0;
    bool converged = false; // inner window criterion met
};

struct VqeDiagnostics {
    std::vector<VqeRun> runs;
    bool agreement = false; // two consecutive runs agreed within restart_tol
};

struct VqeResult {
    std::vector<double> angles;
    double energy = 0.0; // exact energy of `angles`
    bool converged = false;
    VqeDiagnostics diagnostics;
};

// True when the last `window` entries span at most `tol`.
inline bool window_flat(std::span<const double> history, int window, double tol) {
    if (static_cast<int>(history.size()) < window)
        return false;
    const auto first = history.end() - window;
    const auto [lo, hi] = std::minmax_element(first, history.end());
    return *hi - *lo <= tol;
}

namespace detail {

struct InnerResult {
    std::vector<double> angles;
    VqeRun run;
};

// A zero start leaves the circuit at the identity, i.e. at the input state.
inline InnerResult train_once(const AnsatzConfig& ansatz, std::span<const PauliTerm> terms,
                              const VqeTrainConfig& cfg, std::uint64_t run_seed, bool zero_start) {
    Rng rng(run_seed);
    std::normal_distribution<double> init(0.0, cfg.init_stddev);
    InnerResult r;
    r.angles.assign(ansatz.parameter_count(), 0.0);
    if (!zero_start)
        for (auto& a : r.angles)
            a = init(rng);
    std::vector<double> m(r.angles.size(), 0.0), v(r.angles.size(), 0.0);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    std::vector<double> history;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::vector<double> grad;
        double energy;
        if (cfg.gradient == GradientMethod::adjoint) {
            auto eg = adjoint_gradient(ansatz, r.angles, terms);
            energy = eg.energy;
            grad = std::move(eg.gradient);
        } else {
            energy = exact_energy(ansatz, r.angles, terms);
            grad = parameter_shift_gradient(ansatz, r.angles, terms);
        }
        if (cfg.expectation_mode == EnergyMode::shots)
            energy = vqe_energy(ansatz, r.angles, terms, EnergyMode::shots, cfg.shots,
                                derive_seed(run_seed, 1000003ull + static_cast<std::uint64_t>(epoch)));
        if (!std::isfinite(energy))
            throw NumericalError("VQE energy became non-finite");
        history.push_back(energy);
        r.run.epochs = epoch + 1;
        if (window_flat(history, cfg.inner_window, cfg.inner_tol)) {
            r.run.converged = true;
            break;
        }
        const double t = epoch + 1;
        for (std::size_t k = 0; k < grad.size(); ++k) {
            m[k] = b1 * m[k] + (1 - b1) * grad[k];
            v[k] = b2 * v[k] + (1 - b2) * grad[k] * grad[k];
            const double mh = m[k] / (1 - std::pow(b1, t)), vh = v[k] / (1 - std::pow(b2, t));
            r.angles[k] -= cfg.learning_rate * mh / (std::sqrt(vh) + eps);
        }
    }
    r.run.energy = exact_energy(ansatz, r.angles, terms);
    return r;
}

} // namespace detail

// The first inner Adam run starts from zero angles, every restart from fresh
// random angles; stops once two consecutive runs agree within restart_tol
// (relative) and returns the lower of the agreeing pair.
inline VqeResult train_vqe(const TfimModel& model, const AnsatzConfig& ansatz, const VqeTrainConfig& cfg) {
    model.validate();
    ansatz.validate();
    cfg.validate();
    if (ansatz.n != model.n)
        throw SizeError("ansatz and model sizes differ");
    const auto terms = tfim_terms(model);

    VqeResult out;
    std::vector<detail::InnerResult> runs;
    std::size_t best = 0;
    for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
        runs.push_back(detail::train_once(ansatz, terms, cfg, derive_seed(cfg.seed, static_cast<std::uint64_t>(attempt)),
                                          attempt == 0));
        out.diagnostics.runs.push_back(runs.back().run);
        if (runs.back().run.energy < runs[best].run.energy)
            best = runs.size() - 1;
        if (runs.size() >= 2) {
            const auto& prev = runs[runs.size() - 2].run;
            const auto& cur = runs.back().run;
            const double scale = std::max(std::abs(prev.energy), 1e-12);
            if (std::abs(cur.energy - prev.energy) / scale <= cfg.restart_tol) {
                const auto& pick = cur.energy <= prev.energy ? runs.back() : runs[runs.size() - 2];
                out.angles = pick.angles;
                out.energy = pick.run.energy;
                out.diagnostics.agreement = true;
                out.converged = prev.converged && cur.converged;
                return out;
            }
        }
    }
    out.angles = runs[best].angles;
    out.energy = runs[best].run.energy;
    out.converged = false;
    return out;
}

inline nlohmann::json to_json(const AnsatzConfig& a, const VqeResult& r, std::uint64_t seed) {
    return {{"format", "magicbench-vqe v1"}, {"n", a.n},           {"layers", a.layers},
            {"entangler", to_string(a.entangler)}, {"angles", r.angles}, {"seed", seed},
            {"energy", r.energy},                {"converged", r.converged}};
}

inline std::pair<AnsatzConfig, std::vector<double>> circuit_from_json(const nlohmann::json& j) {
    AnsatzConfig a;
    a.n = j.at("n").get<int>();
    a.layers = j.at("layers").get<int>();
    a.entangler = entangler_from_string(j.at("entangler").get<std::string>());
    auto angles = j.at("angles").get<std::vector<double>>();
    detail::check_angles(a, angles);
    return {a, angles};
}

} // namespace magicbench::vqe
