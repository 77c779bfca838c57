#pragma once

// In-place gate application on dense statevectors.
// Rotations follow R_a(theta) = exp(-i theta sigma^a / 2).

#include <array>
#include <cmath>
#include <cstdint>

#include "magicbench/core.hpp"

namespace magicbench {

// Row-major 2x2 matrix {u00, u01, u10, u11}.
using Gate2 = std::array<Complex, 4>;

namespace gates {

inline Gate2 hadamard() {
    const double r = 1.0 / std::sqrt(2.0);
    return {Complex{r}, Complex{r}, Complex{r}, Complex{-r}};
}
inline Gate2 phase_s() { return {Complex{1}, Complex{}, Complex{}, Complex{0, 1}}; }
inline Gate2 t_gate() {
    return {Complex{1}, Complex{}, Complex{}, std::polar(1.0, M_PI / 4)};
}
inline Gate2 pauli_x() { return {Complex{}, Complex{1}, Complex{1}, Complex{}}; }
inline Gate2 rx(double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    return {Complex{c}, Complex{0, -s}, Complex{0, -s}, Complex{c}};
}
inline Gate2 ry(double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    return {Complex{c}, Complex{-s}, Complex{s}, Complex{c}};
}
inline Gate2 rz(double theta) {
    return {std::polar(1.0, -theta / 2), Complex{}, Complex{}, std::polar(1.0, theta / 2)};
}

inline Gate2 adjoint(const Gate2& u) {
    return {std::conj(u[0]), std::conj(u[2]), std::conj(u[1]), std::conj(u[3])};
}

} // namespace gates

inline void apply_gate(StateVector& psi, int qubit, const Gate2& u) {
    if (qubit < 0 || qubit >= psi.num_qubits())
        throw SizeError("gate qubit out of range");
    const std::uint64_t bit = std::uint64_t{1} << qubit;
    Complex* a = psi.data();
    for (std::uint64_t s = 0; s < psi.size(); ++s) {
        if (s & bit)
            continue;
        const Complex a0 = a[s], a1 = a[s | bit];
        a[s] = u[0] * a0 + u[1] * a1;
        a[s | bit] = u[2] * a0 + u[3] * a1;
    }
}

inline void apply_cnot(StateVector& psi, int control, int target) {
    if (control == target || control < 0 || target < 0 || control >= psi.num_qubits() ||
        target >= psi.num_qubits())
        throw SizeError("invalid CNOT qubits");
    const std::uint64_t cb = std::uint64_t{1} << control, tb = std::uint64_t{1} << target;
    Complex* a = psi.data();
    for (std::uint64_t s = 0; s < psi.size(); ++s)
        if ((s & cb) && !(s & tb))
            std::swap(a[s], a[s | tb]);
}

} // namespace magicbench
