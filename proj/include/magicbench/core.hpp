#pragma once

// Pauli algebra, spin-basis statevectors and transverse-field Ising terms.
//
// Conventions used throughout the library:
//   * little-endian qubit order: qubit j is bit j of a basis index;
//   * bit clear <=> sigma^z = +1, so |0...0> is the all-up configuration;
//   * a PauliString (x, z) denotes i^{|x & z|} X(x) Z(z), which is Hermitian
//     with spectrum {+1, -1}. With this phase Y = i X Z.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "magicbench/error.hpp"

namespace magicbench {

using Complex = std::complex<double>;

inline constexpr int kMaxQubits = 16;
inline constexpr double kNormTolerance = 1e-10;

namespace detail {

inline int popcount(std::uint64_t v) { return std::popcount(v); }

inline bool odd_parity(std::uint64_t v) { return (std::popcount(v) & 1) != 0; }

// i^k for k taken mod 4.
inline Complex i_power(int k) {
    switch (k & 3) {
    case 0:
        return {1.0, 0.0};
    case 1:
        return {0.0, 1.0};
    case 2:
        return {-1.0, 0.0};
    default:
        return {0.0, -1.0};
    }
}

inline std::uint64_t all_ones(int n) {
    return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
}

inline void check_qubits(int n) {
    if (n < 1 || n > kMaxQubits)
        throw SizeError("qubit count " + std::to_string(n) + " outside [1, " +
                        std::to_string(kMaxQubits) + "]");
}

} // namespace detail

// A z-basis configuration of n spins. Bit j set means sigma_j = -1.
struct SpinConfiguration {
    std::uint32_t bits = 0;
    int n = 0;

    SpinConfiguration() = default;
    SpinConfiguration(std::uint32_t bits_, int n_) : bits(bits_), n(n_) {
        detail::check_qubits(n);
        if (bits >= (std::uint64_t{1} << n))
            throw SizeError("configuration bits exceed 2^n");
    }

    int spin(int j) const { return ((bits >> j) & 1u) ? -1 : 1; }
    SpinConfiguration flipped() const {
        return {static_cast<std::uint32_t>(~bits & detail::all_ones(n)), n};
    }
    SpinConfiguration with_flip(int j) const { return {bits ^ (1u << j), n}; }

    bool operator==(const SpinConfiguration&) const = default;
};

class StateVector {
  public:
    StateVector() = default;

    // The zero vector on n qubits.
    explicit StateVector(int n) : n_(n) {
        detail::check_qubits(n);
        amps_.assign(std::size_t{1} << n, Complex{});
    }

    StateVector(int n, std::vector<Complex> amps) : n_(n), amps_(std::move(amps)) {
        detail::check_qubits(n);
        if (amps_.size() != (std::size_t{1} << n))
            throw SizeError("statevector length " + std::to_string(amps_.size()) +
                            " is not 2^" + std::to_string(n));
    }

    static StateVector basis(int n, std::uint64_t index) {
        StateVector v(n);
        if (index >= v.size())
            throw SizeError("basis index out of range");
        v.amps_[index] = 1.0;
        return v;
    }

    static StateVector uniform(int n) {
        StateVector v(n);
        const double a = 1.0 / std::sqrt(static_cast<double>(v.size()));
        for (auto& z : v.amps_)
            z = a;
        return v;
    }

    int num_qubits() const { return n_; }
    std::size_t size() const { return amps_.size(); }

    Complex& operator[](std::size_t i) { return amps_[i]; }
    const Complex& operator[](std::size_t i) const { return amps_[i]; }

    std::span<Complex> amplitudes() { return amps_; }
    std::span<const Complex> amplitudes() const { return amps_; }
    Complex* data() { return amps_.data(); }
    const Complex* data() const { return amps_.data(); }

    double norm_squared() const {
        double s = 0.0;
        for (const auto& z : amps_)
            s += std::norm(z);
        return s;
    }
    double norm() const { return std::sqrt(norm_squared()); }

    bool is_normalized(double tol = kNormTolerance) const {
        return std::abs(norm_squared() - 1.0) <= tol;
    }

    void normalize() {
        const double nrm = norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm))
            throw NumericalError("cannot normalize a zero or non-finite statevector");
        for (auto& z : amps_)
            z /= nrm;
    }

    StateVector normalized() const {
        StateVector v = *this;
        v.normalize();
        return v;
    }

  private:
    int n_ = 0;
    std::vector<Complex> amps_;
};

inline void check_same_size(const StateVector& a, const StateVector& b) {
    if (a.num_qubits() != b.num_qubits())
        throw SizeError("statevectors act on different qubit counts (" +
                        std::to_string(a.num_qubits()) + " vs " +
                        std::to_string(b.num_qubits()) + ")");
}

// <a|b>
inline Complex inner_product(const StateVector& a, const StateVector& b) {
    check_same_size(a, b);
    Complex s{};
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::conj(a[i]) * b[i];
    return s;
}

// a (x) b, with the qubits of `a` occupying the low bits.
inline StateVector tensor_product(const StateVector& a, const StateVector& b) {
    const int n = a.num_qubits() + b.num_qubits();
    StateVector out(n);
    const int na = a.num_qubits();
    for (std::size_t ib = 0; ib < b.size(); ++ib)
        for (std::size_t ia = 0; ia < a.size(); ++ia)
            out[ia | (ib << na)] = a[ia] * b[ib];
    return out;
}

struct PauliString {
    std::uint32_t x_mask = 0;
    std::uint32_t z_mask = 0;
    int n = 0;

    PauliString() = default;
    PauliString(std::uint32_t x, std::uint32_t z, int n_) : x_mask(x), z_mask(z), n(n_) {
        detail::check_qubits(n);
        const auto lim = detail::all_ones(n);
        if ((x & ~lim) || (z & ~lim))
            throw SizeError("Pauli masks exceed qubit count");
    }

    static PauliString identity(int n) { return {0, 0, n}; }

    // Character j of the label acts on qubit j, e.g. "XIZ" = X_0 Z_2.
    static PauliString from_label(std::string_view label) {
        std::uint32_t x = 0, z = 0;
        for (std::size_t j = 0; j < label.size(); ++j) {
            const std::uint32_t bit = 1u << j;
            switch (label[j]) {
            case 'I':
                break;
            case 'X':
                x |= bit;
                break;
            case 'Y':
                x |= bit;
                z |= bit;
                break;
            case 'Z':
                z |= bit;
                break;
            default:
                throw ContractError(std::string("bad Pauli label character '") +
                                    label[j] + "'");
            }
        }
        return {x, z, static_cast<int>(label.size())};
    }

    std::string label() const {
        std::string s(static_cast<std::size_t>(n), 'I');
        for (int j = 0; j < n; ++j) {
            const bool xb = (x_mask >> j) & 1u, zb = (z_mask >> j) & 1u;
            s[j] = xb ? (zb ? 'Y' : 'X') : (zb ? 'Z' : 'I');
        }
        return s;
    }

    int y_count() const { return detail::popcount(x_mask & z_mask); }
    int weight() const { return detail::popcount(x_mask | z_mask); }

    bool operator==(const PauliString&) const = default;
};

// P|psi>. Amplitude at s moves to s ^ x with phase i^{|x&z|} (-1)^{|z&s|}.
inline StateVector apply_pauli(const PauliString& p, const StateVector& psi) {
    if (p.n != psi.num_qubits())
        throw SizeError("Pauli string and statevector qubit counts differ");
    StateVector out(psi.num_qubits());
    const Complex phase = detail::i_power(p.y_count());
    for (std::uint64_t s = 0; s < psi.size(); ++s) {
        const Complex a = phase * psi[s];
        out[s ^ p.x_mask] = detail::odd_parity(p.z_mask & s) ? -a : a;
    }
    return out;
}

namespace detail {

// <psi|P|psi> without any normalization; input need not be unit norm.
inline Complex pauli_matrix_element(const PauliString& p, std::span<const Complex> psi) {
    Complex acc{};
    for (std::uint64_t s = 0; s < psi.size(); ++s) {
        const Complex t = std::conj(psi[s ^ p.x_mask]) * psi[s];
        acc += odd_parity(p.z_mask & s) ? -t : t;
    }
    return i_power(p.y_count()) * acc;
}

} // namespace detail

inline double pauli_expectation(const PauliString& p, const StateVector& psi) {
    if (p.n != psi.num_qubits())
        throw SizeError("Pauli string and statevector qubit counts differ");
    if (!psi.is_normalized())
        throw ContractError("pauli_expectation requires a normalized state");
    const Complex e = detail::pauli_matrix_element(p, psi.amplitudes());
    if (std::abs(e.imag()) >= 1e-10)
        throw NumericalError("Pauli expectation has imaginary part " +
                             std::to_string(e.imag()));
    return e.real();
}

struct TfimModel {
    int n = 0;
    double J = -1.0;
    double h = 0.0;
    bool periodic = true;

    void validate() const {
        detail::check_qubits(n);
        if (periodic && n < 3)
            throw InvalidModelError("periodic chain needs n >= 3 (n = " + std::to_string(n) +
                                    " would double-count the bond)");
        if (!std::isfinite(J) || !std::isfinite(h))
            throw InvalidModelError("non-finite coupling or field");
    }
};

struct PauliTerm {
    PauliString op;
    double coefficient = 0.0;
};

// H = J sum_i Z_i Z_{i+1} - h sum_i X_i. ZZ terms first (bond (i, i+1), then the
// wrap bond (n-1, 0) when periodic), followed by one X term per site.
inline std::vector<PauliTerm> tfim_terms(const TfimModel& model) {
    model.validate();
    const int n = model.n;
    std::vector<PauliTerm> terms;
    terms.reserve(2 * static_cast<std::size_t>(n));
    const int bonds = model.periodic ? n : n - 1;
    for (int i = 0; i < bonds; ++i) {
        const int j = (i + 1) % n;
        terms.push_back({PauliString(0, (1u << i) | (1u << j), n), model.J});
    }
    for (int i = 0; i < n; ++i)
        terms.push_back({PauliString(1u << i, 0, n), -model.h});
    return terms;
}

inline void check_terms(std::span<const PauliTerm> terms, int n) {
    for (const auto& t : terms) {
        if (t.op.n != n)
            throw SizeError("Pauli term acts on " + std::to_string(t.op.n) +
                            " qubits, state has " + std::to_string(n));
        if (!std::isfinite(t.coefficient))
            throw InvalidModelError("non-finite term coefficient");
    }
}

// Result of expectation_of_terms; `empty_terms` flags an empty operator.
struct Expectation {
    double value = 0.0;
    bool empty_terms = false;
    operator double() const { return value; }
};

// sum_k c_k <psi|P_k|psi> / <psi|psi>
inline Expectation expectation_of_terms(std::span<const PauliTerm> terms, const StateVector& psi) {
    if (terms.empty())
        return {0.0, true};
    check_terms(terms, psi.num_qubits());
    const double nrm = psi.norm_squared();
    if (!(nrm > 0.0))
        throw NumericalError("expectation of a zero statevector");
    double acc = 0.0;
    for (const auto& t : terms)
        acc += t.coefficient * detail::pauli_matrix_element(t.op, psi.amplitudes()).real();
    return {acc / nrm, false};
}

// out = H in, for H given as a Pauli term list. `out` is overwritten.
inline void apply_terms(std::span<const PauliTerm> terms, std::span<const Complex> in,
                        std::span<Complex> out) {
    for (auto& z : out)
        z = Complex{};
    for (const auto& t : terms) {
        const Complex phase = detail::i_power(t.op.y_count()) * t.coefficient;
        for (std::uint64_t s = 0; s < in.size(); ++s) {
            const Complex a = phase * in[s];
            out[s ^ t.op.x_mask] += detail::odd_parity(t.op.z_mask & s) ? -a : a;
        }
    }
}

inline StateVector apply_terms(std::span<const PauliTerm> terms, const StateVector& psi) {
    check_terms(terms, psi.num_qubits());
    StateVector out(psi.num_qubits());
    apply_terms(terms, psi.amplitudes(), out.amplitudes());
    return out;
}

} // namespace magicbench
