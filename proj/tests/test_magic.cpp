#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "magicbench/exact.hpp"
#include "magicbench/magic.hpp"
#include "magicbench/random.hpp"

using namespace magicbench;

namespace {

StateVector t_state() {
    StateVector v(1);
    v[0] = 1.0 / std::sqrt(2.0);
    v[1] = std::polar(1.0 / std::sqrt(2.0), std::numbers::pi / 4);
    return v;
}

// random Clifford-ish circuit: basis permutations by CNOT, S phases and H on one qubit
StateVector apply_h(const StateVector& psi, int q) {
    StateVector out(psi.num_qubits());
    const std::size_t m = std::size_t{1} << q;
    const double r = 1.0 / std::sqrt(2.0);
    for (std::size_t s = 0; s < psi.size(); ++s) {
        if (s & m)
            continue;
        out[s] = r * (psi[s] + psi[s | m]);
        out[s | m] = r * (psi[s] - psi[s | m]);
    }
    return out;
}

StateVector apply_s(const StateVector& psi, int q) {
    StateVector out = psi;
    for (std::size_t s = 0; s < psi.size(); ++s)
        if (s >> q & 1)
            out[s] *= Complex(0, 1);
    return out;
}

StateVector apply_cnot(const StateVector& psi, int c, int t) {
    StateVector out(psi.num_qubits());
    for (std::size_t s = 0; s < psi.size(); ++s)
        out[(s >> c & 1) ? s ^ (std::size_t{1} << t) : s] = psi[s];
    return out;
}

} // namespace

TEST(WalshHadamard, MatchesDefinition) {
    std::vector<Complex> v = {1, 2, 3, 4};
    walsh_hadamard(v);
    EXPECT_EQ(v[0], Complex(10, 0));
    EXPECT_EQ(v[1], Complex(-2, 0));
    EXPECT_EQ(v[2], Complex(-4, 0));
    EXPECT_EQ(v[3], Complex(0, 0));
}

TEST(M2, StabilizerStatesVanish) {
    EXPECT_NEAR(m2_fast(StateVector::basis(3, 5)).m2, 0.0, 1e-14);
    EXPECT_NEAR(m2_fast(StateVector::uniform(4)).m2, 0.0, 1e-14);
    StateVector ghz(5);
    ghz[0] = ghz[31] = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(m2_fast(ghz).m2, 0.0, 1e-14);
}

TEST(M2, TStateValue) {
    EXPECT_NEAR(m2_fast(t_state()).m2, std::log2(4.0 / 3.0), 1e-14);
    EXPECT_NEAR(m2_naive(t_state()).m2, std::log2(4.0 / 3.0), 1e-14);
    EXPECT_NEAR(m2_fast(tensor_product(t_state(), t_state())).m2, 2 * std::log2(4.0 / 3.0), 1e-14);
}

TEST(M2, FastAgreesWithNaiveOnRandomStates) {
    Rng rng(17);
    for (int n = 1; n <= 6; ++n)
        for (int k = 0; k < 3; ++k) {
            const auto psi = random_state(n, rng);
            EXPECT_NEAR(m2_fast(psi).m2, m2_naive(psi).m2, 1e-12) << "n=" << n;
        }
}

// Values from direct enumeration of all 4^n Pauli strings with numpy.
TEST(M2, IsingGroundStateReferenceValues) {
    EXPECT_NEAR(m2_fast(ground_state_ed({6, -1.0, 1.0, true}).state).m2, 2.1661728665812126, 1e-10);
    EXPECT_NEAR(m2_fast(ground_state_ed({4, -1.0, 0.7, true}).state).m2, 0.8726534482788069, 1e-10);
}

TEST(M2, CliffordInvariance) {
    Rng rng(23);
    const auto psi = random_state(4, rng);
    const double base = m2_fast(psi).m2;
    auto phi = apply_h(psi, 1);
    phi = apply_cnot(phi, 1, 3);
    phi = apply_s(phi, 0);
    phi = apply_cnot(phi, 2, 0);
    phi = apply_h(phi, 3);
    EXPECT_NEAR(m2_fast(phi).m2, base, 1e-12);
}

TEST(M2, GlobalPhaseInvariance) {
    Rng rng(4);
    const auto psi = random_state(5, rng);
    StateVector phi = psi;
    for (std::size_t i = 0; i < phi.size(); ++i)
        phi[i] *= std::polar(1.0, 0.37);
    EXPECT_NEAR(m2_fast(phi).m2, m2_fast(psi).m2, 1e-13);
}

TEST(M2, AdditiveOverProducts) {
    Rng rng(9);
    const auto a = random_state(3, rng), b = random_state(2, rng);
    EXPECT_NEAR(m2_fast(tensor_product(a, b)).m2, m2_fast(a).m2 + m2_fast(b).m2, 1e-12);
}

TEST(M2, BoundedByMaximum) {
    Rng rng(31);
    for (int n = 1; n <= 8; ++n) {
        const double m = m2_fast(random_state(n, rng)).m2;
        EXPECT_GE(m, 0.0);
        EXPECT_LT(m, std::log2((std::ldexp(1.0, n) + 1.0) / 2.0) + 1e-12);
    }
}

TEST(M2, WorkerCountDoesNotChangeResult) {
    Rng rng(12);
    const auto psi = random_state(10, rng);
    const double one = m2_fast(psi, 1).m2;
    for (unsigned w : {2u, 3u, 8u})
        EXPECT_EQ(m2_fast(psi, w).m2, one);
}

TEST(M2, RejectsBadInput) {
    StateVector v(2);
    v[0] = 2.0;
    EXPECT_THROW(m2_fast(v), ContractError);
    EXPECT_THROW(m2_naive(StateVector::basis(9, 0)), CapabilityError);
}

TEST(M2, IsingCurvePeaksAtCriticality) {
    double at_crit = m2_fast(ground_state_ed({8, -1.0, 1.0, true}).state).m2;
    for (double h : {0.0, 0.25, 0.5, 0.75, 1.5, 2.0, 3.0})
        EXPECT_LT(m2_fast(ground_state_ed({8, -1.0, h, true}).state).m2, at_crit) << "h=" << h;
    EXPECT_NEAR(m2_fast(ground_state_ed({8, -1.0, 0.0, true}).state).m2, 0.0, 1e-12);
}

TEST(PauliZSpectrum, MatchesPauliExpectation) {
    Rng rng(2);
    const auto psi = random_state(3, rng);
    for (std::uint32_t x = 0; x < 8; ++x) {
        const auto row = pauli_z_spectrum(psi, x);
        for (std::uint32_t z = 0; z < 8; ++z)
            EXPECT_NEAR(row[z], pauli_expectation(PauliString(x, z, 3), psi), 1e-13);
    }
}

TEST(Infidelity, BasicProperties) {
    Rng rng(8);
    const auto a = random_state(4, rng);
    EXPECT_NEAR(infidelity(a, a), 0.0, 1e-14);
    EXPECT_NEAR(infidelity(StateVector::basis(2, 0), StateVector::basis(2, 3)), 1.0, 0.0);
    StateVector b = a;
    for (std::size_t i = 0; i < b.size(); ++i)
        b[i] *= Complex(0, -1);
    EXPECT_NEAR(infidelity(a, b), 0.0, 1e-14);
    EXPECT_THROW(infidelity(a, StateVector::basis(3, 0)), SizeError);
}

TEST(PauliZSpectrum, BasisAndPlusStates) {
    for (double v : pauli_z_spectrum(StateVector::basis(3, 0), 0))
        EXPECT_NEAR(v, 1.0, 1e-15);
    const auto plus = pauli_z_spectrum(StateVector::uniform(3), 0);
    EXPECT_NEAR(plus[0], 1.0, 1e-15);
    for (std::size_t z = 1; z < plus.size(); ++z)
        EXPECT_NEAR(plus[z], 0.0, 1e-15);
    Rng rng(40);
    const auto psi = random_state(4, rng);
    const auto row = pauli_z_spectrum(psi, 0b0101);
    for (std::uint32_t z = 0; z < 16; ++z)
        EXPECT_NEAR(row[z], pauli_expectation(PauliString(0b0101, z, 4), psi), 1e-12);
}

TEST(M2, NaiveOnSmallStabilizerAndMagicStates) {
    EXPECT_NEAR(m2_naive(StateVector::uniform(1)).m2, 0.0, 1e-14);
    StateVector bell(2);
    bell[0] = bell[3] = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(m2_naive(bell).m2, 0.0, 1e-14);
    EXPECT_NEAR(m2_naive(tensor_product(t_state(), StateVector::basis(1, 0))).m2, std::log2(4.0 / 3.0), 1e-14);
}

TEST(M2, FastAgreesWithNaiveFiftyStatesPerSize) {
    Rng rng(1234);
    for (int n = 2; n <= 6; ++n)
        for (int k = 0; k < 50; ++k) {
            const auto psi = random_state(n, rng);
            ASSERT_NEAR(m2_fast(psi).m2, m2_naive(psi).m2, 1e-10) << "n=" << n << " k=" << k;
        }
}

TEST(M2, RandomCliffordCircuitsAreStabilizerStates) {
    Rng rng(77);
    std::uniform_int_distribution<int> gate(0, 2);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 6;
        std::uniform_int_distribution<int> qubit(0, n - 1);
        StateVector psi = StateVector::basis(n, 0);
        for (int g = 0; g < 10 * n; ++g) {
            const int kind = gate(rng), q = qubit(rng);
            if (kind == 0)
                psi = apply_h(psi, q);
            else if (kind == 1)
                psi = apply_s(psi, q);
            else if (n > 1) {
                int t = qubit(rng);
                if (t == q)
                    t = (q + 1) % n;
                psi = apply_cnot(psi, q, t);
            }
        }
        ASSERT_NEAR(m2_fast(psi).m2, 0.0, 1e-10) << "trial " << trial;
    }
}

TEST(M2, SingleQubitCliffordInvariance) {
    Rng rng(55);
    std::uniform_int_distribution<int> pick(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto psi = random_state(5, rng);
        StateVector phi = psi;
        for (int q = 0; q < 5; ++q)
            for (int k = 0; k < 4; ++k)
                phi = pick(rng) ? apply_h(phi, q) : apply_s(phi, q);
        EXPECT_NEAR(m2_fast(phi).m2, m2_fast(psi).m2, 1e-9);
    }
}

TEST(M2, TensorPowersOfT) {
    StateVector psi = t_state();
    for (int k = 1; k <= 6; ++k) {
        EXPECT_NEAR(m2_fast(psi).m2, k * std::log2(4.0 / 3.0), 1e-9) << "k=" << k;
        psi = tensor_product(psi, t_state());
    }
}

TEST(M2, AdditivityOnRandomPairs) {
    Rng rng(91);
    for (int na = 1; na <= 3; ++na)
        for (int nb = 1; nb <= 3; ++nb) {
            const auto a = random_state(na, rng), b = random_state(nb, rng);
            EXPECT_NEAR(m2_fast(tensor_product(a, b)).m2, m2_fast(a).m2 + m2_fast(b).m2, 1e-9);
        }
}

TEST(M2, TwelveQubitsFinishesQuickly) {
    Rng rng(3);
    const auto psi = random_state(12, rng);
    const auto t0 = std::chrono::steady_clock::now();
    const double m = m2_fast(psi).m2;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_GT(m, 0.0);
    EXPECT_LT(secs, 10.0);
}

TEST(Infidelity, Symmetric) {
    Rng rng(19);
    const auto a = random_state(5, rng), b = random_state(5, rng);
    EXPECT_EQ(infidelity(a, b), infidelity(b, a));
}
