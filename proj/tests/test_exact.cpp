#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "magicbench/exact.hpp"
#include "magicbench/random.hpp"

using namespace magicbench;

TEST(DenseHamiltonian, SingleSpinIsMinusX) {
    const auto H = dense_hamiltonian({1, -1.0, 1.0, false});
    ASSERT_EQ(H.rows(), 2);
    EXPECT_EQ(H(0, 0), 0.0);
    EXPECT_EQ(H(0, 1), -1.0);
    EXPECT_EQ(H(1, 0), -1.0);
    EXPECT_EQ(H(1, 1), 0.0);
}

TEST(DenseHamiltonian, ZeroFieldIsDiagonal) {
    const auto H = dense_hamiltonian({3, -1.0, 0.0, true});
    EXPECT_TRUE((H - Eigen::MatrixXd(H.diagonal().asDiagonal())).isZero(0.0));
    EXPECT_EQ(H(0, 0), 3 * -1.0);
}

TEST(DenseHamiltonian, MatchesTermApplication) {
    const TfimModel m{6, -1.0, 1.5, true};
    const auto H = dense_hamiltonian(m);
    EXPECT_LE((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    const auto terms = tfim_terms(m);
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        const auto psi = random_state(6, rng);
        StateVector expected(6);
        for (const auto& t : terms) {
            const auto p = apply_pauli(t.op, psi);
            for (std::size_t i = 0; i < psi.size(); ++i)
                expected[i] += t.coefficient * p[i];
        }
        for (Eigen::Index r = 0; r < H.rows(); ++r) {
            Complex acc{};
            for (Eigen::Index c = 0; c < H.cols(); ++c)
                acc += H(r, c) * psi[static_cast<std::size_t>(c)];
            ASSERT_LT(std::abs(acc - expected[static_cast<std::size_t>(r)]), 1e-12);
        }
    }
}

TEST(DenseHamiltonian, TooLargeIsCapabilityError) {
    EXPECT_THROW(dense_hamiltonian({15, -1.0, 1.0, true}), CapabilityError);
}

TEST(GroundStateEd, ZeroFieldEnergy) {
    const auto r = ground_state_ed({8, -1.0, 0.0, true});
    EXPECT_NEAR(r.energy, -8.0, 1e-12);
    EXPECT_TRUE(r.parity_projected);
    // even-parity cat state (|0...0> + |1...1>) / sqrt(2)
    EXPECT_NEAR(r.state[0].real(), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(r.state[255].real(), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(GroundStateEd, ParamagneticAsymptote) {
    const auto r = ground_state_ed({4, -1.0, 50.0, true});
    EXPECT_LT(std::abs(r.energy - (-4 * 50.0)) / (4 * 50.0), 5e-3);
}

// Reference values from an independent dense full-spectrum solve (numpy.linalg.eigh).
TEST(GroundStateEd, MatchesIndependentDenseSolver) {
    struct Case {
        int n;
        double h;
        bool periodic;
        double e0, e1;
    };
    const Case cases[] = {
        {8, 1.0, true, -10.251661790966029, -10.0546789842517},
        {8, 0.5, true, -8.509082235140276, -8.507626387639505},
        {8, 2.0, true, -17.018164470280546, -15.015252775279016},
        {4, 1.0, false, -4.758770483143632, -4.064177772475914},
        {6, 1.5, true, -10.05694642316757, -9.004650254605266},
    };
    for (const auto& c : cases) {
        const auto r = ground_state_ed({c.n, -1.0, c.h, c.periodic});
        EXPECT_NEAR(r.energy, c.e0, 1e-10) << "n=" << c.n << " h=" << c.h;
        EXPECT_NEAR(r.first_excited, c.e1, 1e-10);
        EXPECT_LE(r.residual, 1e-10);
        EXPECT_NEAR(r.state.norm(), 1.0, 1e-12);
    }
}

// From scipy.sparse.linalg.eigsh on the 4096-dimensional Hamiltonian.
TEST(GroundStateEd, LanczosTwelveSpins) {
    const double expected[][2] = {{0.5, -12.762569151024039}, {1.0, -15.3225951510808}, {2.0, -25.525138302048077}};
    for (const auto& e : expected) {
        const auto r = ground_state_ed({12, -1.0, e[0], true});
        EXPECT_EQ(r.solver, "lanczos");
        EXPECT_NEAR(r.energy, e[1], 1e-10);
        EXPECT_LE(r.residual, 1e-10);
    }
}

TEST(GroundStateEd, LanczosAgreesWithDense) {
    for (double h : {0.0, 0.25, 0.5, 1.0, 2.0}) {
        EdOptions dense, lanczos;
        dense.solver = EigenSolverKind::dense;
        lanczos.solver = EigenSolverKind::lanczos;
        const TfimModel m{8, -1.0, h, true};
        const auto a = ground_state_ed(m, dense);
        const auto b = ground_state_ed(m, lanczos);
        EXPECT_NEAR(a.energy, b.energy, 1e-10) << "h=" << h;
        EXPECT_EQ(a.parity_projected, b.parity_projected);
        EXPECT_LT(1.0 - std::norm(inner_product(a.state, b.state)), 1e-9) << "h=" << h;
    }
}

TEST(GroundStateEd, DegenerateZeroFieldAtLanczosSizes) {
    for (int n : {11, 12}) {
        const auto r = ground_state_ed({n, -1.0, 0.0, true});
        EXPECT_TRUE(r.parity_projected);
        EXPECT_NEAR(r.energy, -n, 1e-10);
        EXPECT_NEAR(std::abs(r.state[0]), 1.0 / std::sqrt(2.0), 1e-9);
    }
}

TEST(GroundStateEd, Deterministic) {
    const TfimModel m{11, -1.0, 0.9, true};
    const auto a = ground_state_ed(m), b = ground_state_ed(m);
    EXPECT_EQ(a.energy, b.energy);
    for (std::size_t i = 0; i < a.state.size(); ++i)
        ASSERT_EQ(a.state[i], b.state[i]);
}

TEST(GroundStateEd, EnergyMonotoneInField) {
    double prev = 1e300;
    for (int k = 0; k <= 24; ++k) {
        const double e = ground_state_ed({8, -1.0, 0.125 * k, true}).energy;
        EXPECT_LE(e, prev + 1e-12);
        prev = e;
    }
}

TEST(GroundStateEd, GlobalFlipSymmetry) {
    const TfimModel m{8, -1.0, 0.7, true};
    const auto r = ground_state_ed(m);
    StateVector flipped(8);
    for (std::size_t s = 0; s < r.state.size(); ++s)
        flipped[s ^ 0xFFu] = r.state[s];
    EXPECT_NEAR(expectation_of_terms(tfim_terms(m), flipped).value, r.energy, 1e-12);
}

TEST(GoldenCache, RoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "magicbench_golden_test.json";
    GoldenCache c;
    c.insert({8, -1.0, 0.5, true, -8.5, 0.74});
    c.insert({8, -1.0, 0.5, true, -8.509, 0.742}); // replaces
    c.save(path);
    const auto d = GoldenCache::load(path);
    ASSERT_EQ(d.entries().size(), 1u);
    const auto hit = d.find(8, -1.0, 0.5, true);
    ASSERT_TRUE(hit.has_value());
    EXPECT_EQ(hit->energy, -8.509);
    EXPECT_FALSE(d.find(8, -1.0, 0.5, false).has_value());
    std::filesystem::remove(path);
}
