#include <gtest/gtest.h>

#include <cmath>

#include "magicbench/core.hpp"
#include "magicbench/exact.hpp"
#include "magicbench/random.hpp"

using namespace magicbench;

namespace {

StateVector ghz(int n) {
    StateVector v(n);
    v[0] = 1.0 / std::sqrt(2.0);
    v[v.size() - 1] = 1.0 / std::sqrt(2.0);
    return v;
}

} // namespace

TEST(SpinConfiguration, BitClearIsSpinUp) {
    SpinConfiguration s(0b010, 3);
    EXPECT_EQ(s.spin(0), 1);
    EXPECT_EQ(s.spin(1), -1);
    EXPECT_EQ(s.flipped().bits, 0b101u);
    EXPECT_THROW(SpinConfiguration(8, 3), SizeError);
    EXPECT_THROW(SpinConfiguration(0, 17), SizeError);
}

TEST(PauliString, LabelRoundTripIsLittleEndian) {
    const auto p = PauliString::from_label("XIZY");
    EXPECT_EQ(p.x_mask, 0b1001u);
    EXPECT_EQ(p.z_mask, 0b1100u);
    EXPECT_EQ(p.label(), "XIZY");
    EXPECT_EQ(p.weight(), 3);
}

TEST(ApplyPauli, SingleQubitActions) {
    const auto zero = StateVector::basis(1, 0), one = StateVector::basis(1, 1);
    auto x0 = apply_pauli(PauliString::from_label("X"), zero);
    EXPECT_EQ(x0[1], Complex(1, 0));
    auto y0 = apply_pauli(PauliString::from_label("Y"), zero);
    EXPECT_EQ(y0[0], Complex(0, 0));
    EXPECT_NEAR(std::abs(y0[1] - Complex(0, 1)), 0.0, 1e-15);
    auto z1 = apply_pauli(PauliString::from_label("Z"), one);
    EXPECT_EQ(z1[1], Complex(-1, 0));
}

TEST(ApplyPauli, QubitIndexIsBitIndex) {
    // X on qubit 2 of |000> gives index 4
    const auto v = apply_pauli(PauliString::from_label("IIX"), StateVector::basis(3, 0));
    EXPECT_EQ(v[4], Complex(1, 0));
}

TEST(ApplyPauli, DimensionMismatchThrows) {
    EXPECT_THROW(apply_pauli(PauliString::from_label("XX"), StateVector::basis(3, 0)), SizeError);
}

TEST(ApplyPauli, InvolutionOnRandomStates) {
    Rng rng(11);
    for (int n = 1; n <= 5; ++n) {
        const auto psi = random_state(n, rng);
        for (std::uint32_t x = 0; x < (1u << n); ++x)
            for (std::uint32_t z = 0; z < (1u << n); ++z) {
                const PauliString p(x, z, n);
                const auto back = apply_pauli(p, apply_pauli(p, psi));
                for (std::size_t i = 0; i < psi.size(); ++i)
                    ASSERT_LT(std::abs(back[i] - psi[i]), 1e-12);
            }
    }
}

TEST(PauliExpectation, Examples) {
    EXPECT_DOUBLE_EQ(pauli_expectation(PauliString::from_label("Z"), StateVector::basis(1, 0)), 1.0);
    EXPECT_NEAR(pauli_expectation(PauliString::from_label("XX"), ghz(2)), 1.0, 1e-15);
    EXPECT_NEAR(pauli_expectation(PauliString::from_label("ZI"), ghz(2)), 0.0, 1e-15);
    EXPECT_NEAR(pauli_expectation(PauliString::from_label("YY"), ghz(2)), -1.0, 1e-15);
}

TEST(PauliExpectation, RejectsUnnormalized) {
    StateVector v(1);
    v[0] = 2.0;
    EXPECT_THROW(pauli_expectation(PauliString::from_label("Z"), v), ContractError);
}

TEST(PauliExpectation, IdentityIsOne) {
    Rng rng(5);
    for (int n = 1; n <= 6; ++n)
        EXPECT_NEAR(pauli_expectation(PauliString::identity(n), random_state(n, rng)), 1.0, 1e-12);
}

TEST(PauliExpectation, PurityIdentity) {
    Rng rng(7);
    for (int n = 1; n <= 6; ++n) {
        const auto psi = random_state(n, rng);
        double sum = 0.0;
        for (std::uint32_t x = 0; x < (1u << n); ++x)
            for (std::uint32_t z = 0; z < (1u << n); ++z) {
                const double e = pauli_expectation(PauliString(x, z, n), psi);
                sum += e * e;
            }
        EXPECT_NEAR(sum, std::ldexp(1.0, n), 1e-9) << "n=" << n;
    }
}

TEST(TfimTerms, PeriodicThreeSites) {
    const auto t = tfim_terms({3, -1.0, 0.5, true});
    ASSERT_EQ(t.size(), 6u);
    EXPECT_EQ(t[0].op.label(), "ZZI");
    EXPECT_EQ(t[1].op.label(), "IZZ");
    EXPECT_EQ(t[2].op.label(), "ZIZ");
    for (int i = 0; i < 3; ++i)
        EXPECT_EQ(t[static_cast<std::size_t>(i)].coefficient, -1.0);
    for (int i = 3; i < 6; ++i) {
        EXPECT_EQ(t[static_cast<std::size_t>(i)].op.weight(), 1);
        EXPECT_EQ(t[static_cast<std::size_t>(i)].op.z_mask, 0u);
        EXPECT_EQ(t[static_cast<std::size_t>(i)].coefficient, -0.5);
    }
}

TEST(TfimTerms, ZeroFieldKeepsXTerms) {
    const auto t = tfim_terms({4, -1.0, 0.0, true});
    ASSERT_EQ(t.size(), 8u);
    EXPECT_EQ(t[4].coefficient, 0.0);
}

TEST(TfimTerms, OpenChain) {
    const auto t = tfim_terms({3, -1.0, 1.0, false});
    int zz = 0, x = 0;
    for (const auto& term : t)
        (term.op.z_mask ? zz : x)++;
    EXPECT_EQ(zz, 2);
    EXPECT_EQ(x, 3);
}

TEST(TfimTerms, PeriodicTwoSitesRejected) {
    EXPECT_THROW(tfim_terms({2, -1.0, 1.0, true}), InvalidModelError);
    EXPECT_NO_THROW(tfim_terms({2, -1.0, 1.0, false}));
}

TEST(ExpectationOfTerms, AlignedAndParamagneticStates) {
    EXPECT_DOUBLE_EQ(expectation_of_terms(tfim_terms({4, -1.0, 0.0, true}), StateVector::basis(4, 0)).value, -4.0);
    // X-only Hamiltonian (J = 0) on |++++>
    EXPECT_NEAR(expectation_of_terms(tfim_terms({4, 0.0, 2.0, true}), StateVector::uniform(4)).value, -8.0, 1e-12);
}

TEST(ExpectationOfTerms, NormalizesInternally) {
    StateVector v = StateVector::basis(4, 0);
    v[0] = 3.0;
    EXPECT_DOUBLE_EQ(expectation_of_terms(tfim_terms({4, -1.0, 0.7, true}), v).value, -4.0);
}

TEST(ExpectationOfTerms, EmptyListFlagged) {
    const auto e = expectation_of_terms({}, StateVector::basis(2, 0));
    EXPECT_EQ(e.value, 0.0);
    EXPECT_TRUE(e.empty_terms);
}

TEST(ExpectationOfTerms, MatchesExactGroundEnergy) {
    const TfimModel m{8, -1.0, 1.0, true};
    const auto ed = ground_state_ed(m);
    EXPECT_NEAR(expectation_of_terms(tfim_terms(m), ed.state).value, ed.energy, 1e-10);
}

TEST(TfimTerms, CyclicRelabelingInvariance) {
    Rng rng(3);
    const int n = 6;
    const auto psi = random_state(n, rng);
    const auto terms = tfim_terms({n, -1.0, 0.8, true});
    const double e0 = expectation_of_terms(terms, psi).value;
    for (int shift = 1; shift < n; ++shift) {
        std::vector<PauliTerm> rotated;
        auto rot = [&](std::uint32_t m) {
            return ((m << shift) | (m >> (n - shift))) & ((1u << n) - 1);
        };
        for (const auto& t : terms)
            rotated.push_back({PauliString(rot(t.op.x_mask), rot(t.op.z_mask), n), t.coefficient});
        EXPECT_NEAR(expectation_of_terms(rotated, psi).value, e0, 1e-12);
    }
}

TEST(StateVector, TensorProductPutsFirstFactorInLowBits) {
    const auto v = tensor_product(StateVector::basis(1, 1), StateVector::basis(2, 0));
    EXPECT_EQ(v.num_qubits(), 3);
    EXPECT_EQ(v[1], Complex(1, 0));
}
