#pragma once

// 2-Renyi stabilizer entropy and infidelity of dense statevectors.
//
//   M2(psi) = -log2( sum_P <psi|P|psi>^4 / 2^n ),  P over all 4^n Pauli strings.
//
// The fast path fixes the X-support x and obtains <P(x, z)> for every z at
// once: with v_s = conj(psi_{s^x}) psi_s,
//   <psi| i^{|x&z|} X(x) Z(z) |psi> = i^{|x&z|} sum_s v_s (-1)^{z.s},
// i.e. a Walsh-Hadamard transform of v. Cost O(n 2^n) per x, O(n 4^n) total.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "magicbench/core.hpp"
#include "magicbench/parallel.hpp"

namespace magicbench {

inline constexpr int kMaxMagicQubits = 14;
inline constexpr int kMaxNaiveMagicQubits = 8;
inline constexpr double kMomentSlack = 1e-9;

enum class MagicMethod { fast, naive };

struct MagicResult {
    double m2 = 0.0;
    // sum_P <P>^4 / 2^n, the quantity inside the logarithm.
    double pauli_fourth_moment = 1.0;
    MagicMethod method = MagicMethod::fast;
};

// In-place unnormalized Walsh-Hadamard transform: out(z) = sum_s in(s) (-1)^{z.s}.
inline void walsh_hadamard(std::span<Complex> v) {
    const std::size_t n = v.size();
    for (std::size_t len = 1; len < n; len <<= 1) {
        for (std::size_t i = 0; i < n; i += len << 1) {
            for (std::size_t j = i; j < i + len; ++j) {
                const Complex a = v[j];
                const Complex b = v[j + len];
                v[j] = a + b;
                v[j + len] = a - b;
            }
        }
    }
}

namespace detail {

inline void check_magic_input(const StateVector& psi, int max_n, const char* who) {
    if (psi.num_qubits() > max_n)
        throw CapabilityError(std::string(who) + " limited to n <= " + std::to_string(max_n));
    if (!psi.is_normalized())
        throw ContractError(std::string(who) + " requires a normalized state");
}

// buf(z) <- sum_s conj(psi_{s^x}) psi_s (-1)^{z.s}
inline void pauli_row_transform(const StateVector& psi, std::uint64_t x, std::span<Complex> buf) {
    for (std::uint64_t s = 0; s < psi.size(); ++s)
        buf[s] = std::conj(psi[s ^ x]) * psi[s];
    walsh_hadamard(buf);
}

inline MagicResult finish_moment(double total, int n, MagicMethod method) {
    const double moment = total / static_cast<double>(std::uint64_t{1} << n);
    if (!(moment >= -kMomentSlack && moment <= 1.0 + kMomentSlack))
        throw NumericalError("Pauli fourth moment " + std::to_string(moment) + " outside [0, 1]");
    const double clamped = std::min(1.0, std::max(moment, 0.0));
    return {-std::log2(clamped), clamped, method};
}

} // namespace detail

// <psi| i^{|x&z|} X(x) Z(z) |psi> for all 2^n values of z at fixed x.
inline std::vector<double> pauli_z_spectrum(const StateVector& psi, std::uint32_t x_mask) {
    if (!psi.is_normalized())
        throw ContractError("pauli_z_spectrum requires a normalized state");
    if (x_mask >= psi.size())
        throw SizeError("x mask exceeds qubit count");
    std::vector<Complex> buf(psi.size());
    detail::pauli_row_transform(psi, x_mask, buf);
    std::vector<double> out(psi.size());
    for (std::uint64_t z = 0; z < psi.size(); ++z)
        out[z] = (detail::i_power(detail::popcount(x_mask & z)) * buf[z]).real();
    return out;
}

// Fourth moments are accumulated per x with compensated summation, then
// combined by a pairwise tree over x, so the result is independent of the
// number of worker threads.
inline MagicResult m2_fast(const StateVector& psi, unsigned workers = 1) {
    detail::check_magic_input(psi, kMaxMagicQubits, "m2_fast");
    const std::size_t dim = psi.size();
    std::vector<double> per_x(dim, 0.0);
    const std::size_t chunks = std::min<std::size_t>(dim, std::max(1u, workers) * 4u);
    parallel_for(chunks, workers, [&](std::size_t c) {
        std::vector<Complex> buf(dim);
        const std::size_t lo = dim * c / chunks, hi = dim * (c + 1) / chunks;
        for (std::size_t x = lo; x < hi; ++x) {
            detail::pauli_row_transform(psi, x, buf);
            CompensatedSum acc;
            for (const auto& f : buf) {
                const double p2 = std::norm(f);
                acc.add(p2 * p2);
            }
            per_x[x] = acc.value();
        }
    });
    return detail::finish_moment(pairwise_sum(per_x.data(), dim), psi.num_qubits(), MagicMethod::fast);
}

// Reference enumeration over all 4^n Pauli strings; O(8^n).
inline MagicResult m2_naive(const StateVector& psi) {
    detail::check_magic_input(psi, kMaxNaiveMagicQubits, "m2_naive");
    const int n = psi.num_qubits();
    const std::uint32_t dim = 1u << n;
    CompensatedSum acc;
    for (std::uint32_t x = 0; x < dim; ++x) {
        for (std::uint32_t z = 0; z < dim; ++z) {
            const double e = pauli_expectation(PauliString(x, z, n), psi);
            const double e2 = e * e;
            acc.add(e2 * e2);
        }
    }
    return detail::finish_moment(acc.value(), n, MagicMethod::naive);
}

// 1 - |<psi|phi>|^2, clamped to [0, 1].
inline double infidelity(const StateVector& psi, const StateVector& phi) {
    check_same_size(psi, phi);
    if (!psi.is_normalized() || !phi.is_normalized())
        throw ContractError("infidelity requires normalized states");
    const double f = std::norm(inner_product(psi, phi));
    return std::min(1.0, std::max(0.0, 1.0 - f));
}

} // namespace magicbench
