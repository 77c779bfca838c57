#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "magicbench/exact.hpp"
#include "magicbench/vqe.hpp"

using namespace magicbench;
using namespace magicbench::vqe;

namespace {

using Dense = Eigen::MatrixXcd;

// Full 2^n operator for a one-qubit gate; qubit 0 ends up as the rightmost factor.
Dense embed(const Eigen::Matrix2cd& g, int q, int n) {
    Dense out = Dense::Identity(1, 1);
    for (int k = 0; k < n; ++k) {
        const Eigen::Matrix2cd f = k == q ? g : Eigen::Matrix2cd::Identity();
        Dense next(out.rows() * 2, out.cols() * 2);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                next.block(r * out.rows(), c * out.cols(), out.rows(), out.cols()) = f(r, c) * out;
        out = next;
    }
    return out;
}

Dense cnot_matrix(int c, int t, int n) {
    const Eigen::Index d = Eigen::Index{1} << n;
    Dense m = Dense::Zero(d, d);
    for (Eigen::Index s = 0; s < d; ++s)
        m((s >> c & 1) ? s ^ (Eigen::Index{1} << t) : s, s) = 1.0;
    return m;
}

Eigen::Matrix2cd rot(char axis, double t) {
    const Complex i(0, 1);
    Eigen::Matrix2cd p;
    if (axis == 'x')
        p << 0, 1, 1, 0;
    else if (axis == 'y')
        p << 0, -i, i, 0;
    else
        p << 1, 0, 0, -1;
    return std::cos(t / 2) * Eigen::Matrix2cd::Identity() - i * std::sin(t / 2) * p;
}

std::vector<double> random_angles(std::size_t k, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-M_PI, M_PI);
    std::vector<double> a(k);
    for (auto& x : a)
        x = u(rng);
    return a;
}

} // namespace

TEST(Ansatz, ParameterAndGateCounts) {
    AnsatzConfig a{4, 3, Entangler::all_pairs_lex};
    EXPECT_EQ(a.parameter_count(), 36u);
    EXPECT_EQ(a.cnot_pairs().size(), 6u);
    EXPECT_EQ(a.cnot_pairs().front(), std::make_pair(0, 1));
    EXPECT_EQ(a.cnot_pairs().back(), std::make_pair(2, 3));
    a.entangler = Entangler::chain;
    EXPECT_EQ(a.cnot_pairs().size(), 3u);
    EXPECT_THROW(entangler_from_string("ring"), ConfigError);
}

TEST(Ansatz, ZeroAnglesLeaveVacuum) {
    const AnsatzConfig a{5, 2, Entangler::all_pairs_lex};
    const auto psi = ansatz_state(a, std::vector<double>(a.parameter_count(), 0.0));
    EXPECT_NEAR(std::abs(psi[0]), 1.0, 1e-15);
}

TEST(Ansatz, SingleQubitRotations) {
    const AnsatzConfig a{1, 1, Entangler::chain};
    const auto z = tfim_terms({1, -1.0, -1.0, false}); // +X
    for (double t : {0.3, 1.2, 2.9}) {
        const auto psi = ansatz_state(a, std::vector<double>{t, 0.0, 0.0});
        EXPECT_NEAR(std::norm(psi[0]) - std::norm(psi[1]), std::cos(t), 1e-14);
        EXPECT_NEAR(exact_energy(a, std::vector<double>{0.0, t, 0.0}, z), std::sin(t), 1e-14);
    }
}

TEST(Ansatz, MatchesDenseCircuitProduct) {
    for (auto ent : {Entangler::all_pairs_lex, Entangler::chain}) {
        const AnsatzConfig a{3, 2, ent};
        const auto angles = random_angles(a.parameter_count(), 7);
        const int n = 3;
        Dense U = Dense::Identity(8, 8);
        std::size_t k = 0;
        for (int l = 0; l < a.layers; ++l) {
            for (char axis : {'x', 'y', 'z'})
                for (int q = 0; q < n; ++q)
                    U = embed(rot(axis, angles[k++]), q, n) * U;
            for (const auto& [c, t] : a.cnot_pairs())
                U = cnot_matrix(c, t, n) * U;
        }
        const auto psi = ansatz_state(a, angles);
        for (int s = 0; s < 8; ++s)
            EXPECT_LT(std::abs(psi[s] - U(s, 0)), 1e-13);
    }
}

TEST(Gradient, AdjointEqualsParameterShift) {
    const AnsatzConfig a{4, 2, Entangler::all_pairs_lex};
    const auto terms = tfim_terms({4, -1.0, 0.8, true});
    const auto angles = random_angles(a.parameter_count(), 3);
    const auto adj = adjoint_gradient(a, angles, terms);
    const auto ps = parameter_shift_gradient(a, angles, terms);
    EXPECT_NEAR(adj.energy, exact_energy(a, angles, terms), 1e-13);
    for (std::size_t k = 0; k < ps.size(); ++k)
        EXPECT_NEAR(adj.gradient[k], ps[k], 1e-12);
    EXPECT_EQ(parameter_shift_gradient(a, angles, terms, 3), ps);
}

TEST(Gradient, ParameterShiftMatchesFiniteDifferences) {
    const AnsatzConfig a{3, 1, Entangler::chain};
    const auto terms = tfim_terms({3, -1.0, 1.3, true});
    const auto angles = random_angles(a.parameter_count(), 9);
    const auto ps = parameter_shift_gradient(a, angles, terms);
    const double eps = 1e-6;
    for (std::size_t k = 0; k < angles.size(); ++k) {
        auto p = angles, m = angles;
        p[k] += eps;
        m[k] -= eps;
        EXPECT_NEAR(ps[k], (exact_energy(a, p, terms) - exact_energy(a, m, terms)) / (2 * eps), 1e-8);
    }
}

TEST(ShotEnergy, UnbiasedWithinError) {
    const AnsatzConfig a{4, 2, Entangler::all_pairs_lex};
    const auto terms = tfim_terms({4, -1.0, 1.0, true});
    const auto angles = random_angles(a.parameter_count(), 5);
    const auto psi = ansatz_state(a, angles);
    const double exact = expectation_of_terms(terms, psi).value;
    const auto est = shot_energy(psi, terms, 20000, 17);
    EXPECT_GT(est.std_error, 0.0);
    EXPECT_LT(std::abs(est.energy - exact), 5 * est.std_error);
    const auto again = shot_energy(psi, terms, 20000, 17);
    EXPECT_EQ(est.energy, again.energy);
    const auto small = shot_energy(psi, terms, 500, 17);
    EXPECT_NEAR(small.std_error / est.std_error, std::sqrt(40.0), 0.25 * std::sqrt(40.0));
}

TEST(ShotEnergy, EigenstateHasNoNoise) {
    const auto est = shot_energy(StateVector::basis(4, 0), tfim_terms({4, -1.0, 0.0, true}), 100, 1);
    EXPECT_DOUBLE_EQ(est.energy, -4.0);
    EXPECT_EQ(est.std_error, 0.0);
    EXPECT_THROW(shot_energy(StateVector::basis(4, 0), tfim_terms({4, -1.0, 0.0, true}), 0, 1), ConfigError);
}

TEST(ShotEnergy, MixedTermsMeasuredInRotatedBasis) {
    const AnsatzConfig a{2, 1, Entangler::chain};
    const auto angles = random_angles(a.parameter_count(), 12);
    const auto psi = ansatz_state(a, angles);
    const std::vector<PauliTerm> terms = {{PauliString::from_label("XY"), 0.7}, {PauliString::from_label("YZ"), -1.1}};
    const double exact = expectation_of_terms(terms, psi).value;
    const auto est = shot_energy(psi, terms, 40000, 3);
    EXPECT_LT(std::abs(est.energy - exact), 5 * est.std_error);
}

TEST(WindowFlat, Examples) {
    const std::vector<double> h = {-1.0, -2.0, -2.0000005, -2.0000009};
    EXPECT_TRUE(window_flat(h, 3, 1e-6));
    EXPECT_FALSE(window_flat(h, 4, 1e-6));
    EXPECT_FALSE(window_flat(std::span(h).first(2), 3, 1e-6));
}

TEST(TrainVqe, ReachesFerromagneticGroundState) {
    const TfimModel m{4, -1.0, 0.0, true};
    VqeTrainConfig cfg;
    cfg.seed = 1;
    const auto r = train_vqe(m, {4, 2, Entangler::all_pairs_lex}, cfg);
    EXPECT_TRUE(r.diagnostics.agreement);
    EXPECT_NEAR(r.energy, -4.0, 1e-4);
}

TEST(TrainVqe, VariationalAndDeterministic) {
    const TfimModel m{4, -1.0, 1.0, true};
    VqeTrainConfig cfg;
    cfg.seed = 5;
    const AnsatzConfig a{4, 3, Entangler::all_pairs_lex};
    const auto r = train_vqe(m, a, cfg);
    const double e0 = ground_state_ed(m).energy;
    EXPECT_GE(r.energy, e0 - 1e-10);
    EXPECT_LT(r.energy - e0, 0.15 * std::abs(e0));
    EXPECT_NEAR(exact_energy(a, r.angles, tfim_terms(m)), r.energy, 1e-12);
    const auto again = train_vqe(m, a, cfg);
    EXPECT_EQ(r.angles, again.angles);
    if (r.diagnostics.agreement) {
        const auto& runs = r.diagnostics.runs;
        const auto& x = runs[runs.size() - 2];
        const auto& y = runs.back();
        EXPECT_EQ(r.energy, std::min(x.energy, y.energy));
    }
}

TEST(TrainVqe, SizeMismatchRejected) {
    EXPECT_THROW(train_vqe({4, -1.0, 1.0, true}, {3, 1, Entangler::chain}, {}), SizeError);
}

TEST(VqeJson, RoundTrip) {
    const AnsatzConfig a{3, 2, Entangler::chain};
    VqeResult r;
    r.angles = random_angles(a.parameter_count(), 1);
    const auto [b, angles] = circuit_from_json(nlohmann::json::parse(to_json(a, r, 9).dump()));
    EXPECT_EQ(b.n, 3);
    EXPECT_EQ(b.layers, 2);
    EXPECT_EQ(b.entangler, Entangler::chain);
    EXPECT_EQ(angles, r.angles);
}

TEST(Ansatz, RxPiConvention) {
    const auto psi = ansatz_state({1, 1, Entangler::chain}, std::vector<double>{M_PI, 0.0, 0.0});
    EXPECT_NEAR(std::abs(psi[0]), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(psi[1] - Complex(0, -1)), 0.0, 1e-15);
}

TEST(Ansatz, Unitarity) {
    const AnsatzConfig a{6, 3, Entangler::all_pairs_lex};
    for (std::uint64_t seed = 0; seed < 5; ++seed)
        EXPECT_NEAR(ansatz_state(a, random_angles(a.parameter_count(), seed)).norm(), 1.0, 1e-12);
}

TEST(VqeEnergy, ZeroAnglesAndVariationalBound) {
    const AnsatzConfig a8{8, 2, Entangler::all_pairs_lex};
    const std::vector<double> zero(a8.parameter_count(), 0.0);
    EXPECT_EQ(vqe_energy(a8, zero, tfim_terms({8, -1.0, 0.0, true}), EnergyMode::exact), -8.0);
    const AnsatzConfig a4{4, 2, Entangler::all_pairs_lex};
    const auto terms = tfim_terms({4, -1.0, 1.0, true});
    const std::vector<double> z4(a4.parameter_count(), 0.0);
    const double exact = vqe_energy(a4, z4, terms, EnergyMode::exact);
    const auto est = shot_energy(ansatz_state(a4, z4), terms, 100000, 4);
    EXPECT_LT(std::abs(est.energy - exact), 4 * est.std_error);
    const double e0 = ground_state_ed({4, -1.0, 1.0, true}).energy;
    for (std::uint64_t seed = 0; seed < 10; ++seed)
        EXPECT_GE(vqe_energy(a4, random_angles(a4.parameter_count(), seed), terms, EnergyMode::exact), e0 - 1e-12);
    EXPECT_THROW(vqe_energy(a4, z4, terms, EnergyMode::shots, 0), ConfigError);
}

TEST(Gradient, SingleQubitFieldClosedForm) {
    // E(theta) = -h <X> after Rx(t1) Ry(t2) Rz(t3) on |0>; at zero angles dE/dt2 = -h
    const AnsatzConfig a{1, 1, Entangler::chain};
    const std::vector<PauliTerm> terms = {{PauliString::from_label("X"), -0.8}};
    const std::vector<double> zero = {0.0, 0.0, 0.0};
    const auto g = parameter_shift_gradient(a, zero, terms);
    EXPECT_NEAR(g[0], 0.0, 1e-15);
    EXPECT_NEAR(g[1], -0.8, 1e-15);
    const double eps = 1e-6;
    EXPECT_NEAR(g[1], (exact_energy(a, std::vector<double>{0, eps, 0}, terms) -
                       exact_energy(a, std::vector<double>{0, -eps, 0}, terms)) / (2 * eps), 1e-6);
}

TEST(Gradient, TenRandomPointsAgainstFiniteDifferences) {
    const AnsatzConfig a{4, 2, Entangler::all_pairs_lex};
    const auto terms = tfim_terms({4, -1.0, 1.0, true});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto angles = random_angles(a.parameter_count(), 100 + seed);
        const auto ps = parameter_shift_gradient(a, angles, terms);
        double num = 0.0, den = 0.0, worst = 0.0;
        for (std::size_t k = 0; k < angles.size(); ++k) {
            auto p = angles, m = angles;
            p[k] += 1e-5;
            m[k] -= 1e-5;
            const double fd = (exact_energy(a, p, terms) - exact_energy(a, m, terms)) / 2e-5;
            worst = std::max(worst, std::abs(fd - ps[k]));
            num += (fd - ps[k]) * (fd - ps[k]);
            den += fd * fd;
        }
        EXPECT_LT(worst, 1e-6);
        EXPECT_LT(std::sqrt(num / den), 1e-5);
    }
}

TEST(Gradient, ZeroFieldZeroAnglesIsStationary) {
    const AnsatzConfig a{6, 2, Entangler::all_pairs_lex};
    const auto g = adjoint_gradient(a, std::vector<double>(a.parameter_count(), 0.0), tfim_terms({6, -1.0, 0.0, true}));
    double norm = 0.0;
    for (double x : g.gradient)
        norm += x * x;
    EXPECT_LT(std::sqrt(norm), 1e-10);
}

TEST(ShotEnergy, MeanOverSeedsIsUnbiased) {
    const AnsatzConfig a{3, 1, Entangler::all_pairs_lex};
    const auto terms = tfim_terms({3, -1.0, 1.0, true});
    const auto psi = ansatz_state(a, random_angles(a.parameter_count(), 8));
    const double exact = expectation_of_terms(terms, psi).value;
    double sum = 0.0, sigma = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto e = shot_energy(psi, terms, 1000, seed);
        sum += e.energy;
        sigma += e.std_error;
    }
    sigma /= 200;
    EXPECT_LT(std::abs(sum / 200 - exact), 4 * sigma / std::sqrt(200.0));
}

TEST(TrainVqe, EightSpinsZeroFieldStaysAtInitialState) {
    VqeTrainConfig cfg;
    cfg.seed = 3;
    const auto r = train_vqe({8, -1.0, 0.0, true}, {8, 4, Entangler::all_pairs_lex}, cfg);
    EXPECT_NEAR(r.energy, -8.0, 1e-6);
    for (const auto& run : r.diagnostics.runs)
        EXPECT_LT(run.epochs, 1000);
}

TEST(TrainVqe, EightSpinsStrongFieldRespectsBound) {
    VqeTrainConfig cfg;
    cfg.seed = 4;
    const TfimModel m{8, -1.0, 3.0, true};
    const auto r = train_vqe(m, {8, 4, Entangler::all_pairs_lex}, cfg);
    const double e0 = ground_state_ed(m).energy;
    EXPECT_GE(r.energy, e0 - 1e-9);
    EXPECT_LT(r.energy - e0, 0.05 * std::abs(e0));
}

TEST(TrainVqe, ExhaustedRestartsReportBestAsUnconverged) {
    VqeTrainConfig cfg;
    cfg.max_restarts = 1;
    cfg.restart_tol = 1e-15;
    cfg.max_epochs = 5;
    const auto r = train_vqe({4, -1.0, 1.0, true}, {4, 1, Entangler::chain}, cfg);
    EXPECT_FALSE(r.converged);
    EXPECT_FALSE(r.diagnostics.agreement);
    ASSERT_EQ(r.diagnostics.runs.size(), 2u);
    EXPECT_EQ(r.energy, std::min(r.diagnostics.runs[0].energy, r.diagnostics.runs[1].energy));
}
