#include "hkflow/diagnostics.hpp"
#include "hkflow/equilibria.hpp"
#include "hkflow/errors.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hkflow {
namespace {

constexpr double pi = std::numbers::pi;

// Closed form for N = 2 with omega = (w, -w): sin(psi_2 - psi_1) = -2w/lambda.
std::vector<double> two_oscillator_gaps(double w, double lambda)
{
    const double a = std::asin(-2 * w / lambda);
    return {a, wrap_pi(-pi - a)};
}

double gap(const EquilibriumClass& c) { return wrap_pi(c.representative[1] - c.representative[0]); }

TEST(HSigma, QuarticRoots)
{
    const auto e = test::two_oscillators(0.5, 2.0);
    const std::vector<int> plus{1, 1};
    auto roots = solve_h_sigma(e, plus);
    std::sort(roots.begin(), roots.end());
    ASSERT_EQ(roots.size(), 2u);
    EXPECT_NEAR(roots[0], std::sqrt(2 - std::sqrt(3.0)), 1e-10);
    EXPECT_NEAR(roots[1], std::sqrt(2 + std::sqrt(3.0)), 1e-10);
    // x^4 - 4x^2 + 1 = 0
    for (double x : roots) EXPECT_NEAR(x * x * x * x - 4 * x * x + 1, 0.0, 1e-9);
}

TEST(HSigma, OppositeSignsCancel)
{
    const auto e = test::two_oscillators(0.5, 2.0);
    const std::vector<int> mixed{1, -1};
    EXPECT_TRUE(solve_h_sigma(e, mixed).empty());
    EXPECT_NEAR(h_sigma(e, mixed, 1.3), 1.3, 1e-15);
}

TEST(HSigma, WeakCouplingHasNoRoots)
{
    const auto e = test::random_ensemble(7, 4, 0.8);
    std::vector<int> sigma(4, 1);
    EXPECT_TRUE(solve_h_sigma(e, sigma).empty());
}

TEST(Reconstruct, CoherentState)
{
    const auto e = Ensemble::make(3, {0, 0, 0}, {1, 1, 1}, {0, 0, 0}, 1.0);
    const std::vector<int> plus{1, 1, 1};
    const auto rec = reconstruct_phases(e, 1.0, plus);
    ASSERT_TRUE(rec.cls) << rec.rejection;
    for (double d : rec.cls->delta) EXPECT_EQ(d, 0.0);
}

TEST(Reconstruct, AcuteAndObtuseBranches)
{
    const auto e = test::two_oscillators(0.5, 2.0);
    const std::vector<int> plus{1, 1};
    const double x_hi = std::sqrt(2 + std::sqrt(3.0));
    const auto hi = reconstruct_phases(e, x_hi / 2, plus);
    ASSERT_TRUE(hi.cls) << hi.rejection;
    // sin(Delta_j) = -omega_j/(lambda r) with lambda r = x.
    EXPECT_NEAR(hi.cls->delta[0], -std::asin(0.5 / x_hi), 1e-12);
    EXPECT_NEAR(hi.cls->delta[1], std::asin(0.5 / x_hi), 1e-12);
    EXPECT_NEAR(gap(*hi.cls), -pi / 6, 1e-12);

    const double x_lo = std::sqrt(2 - std::sqrt(3.0));
    const auto lo = reconstruct_phases(e, x_lo / 2, plus);
    ASSERT_TRUE(lo.cls) << lo.rejection;
    EXPECT_NEAR(gap(*lo.cls), -5 * pi / 6, 1e-12);
}

TEST(Reconstruct, RejectsInconsistentRadius)
{
    const auto e = test::two_oscillators(0.5, 2.0);
    const std::vector<int> plus{1, 1};
    const auto rec = reconstruct_phases(e, 0.8, plus);
    EXPECT_FALSE(rec.cls);
    EXPECT_FALSE(rec.rejection.empty());
}

TEST(Enumerate, TwoOscillatorClosedForm)
{
    const auto e = test::two_oscillators(0.5, 2.0);
    const auto set = enumerate_equilibria(e);
    ASSERT_EQ(set.classes.size(), 2u);
    EXPECT_NEAR(set.classes[0].r, std::sqrt(2 + std::sqrt(3.0)) / 2, 1e-10);
    EXPECT_NEAR(gap(set.classes[0]), -pi / 6, 1e-10);
    EXPECT_NEAR(gap(set.classes[1]), -5 * pi / 6, 1e-10);
}

TEST(Enumerate, BelowLockingThresholdIsEmpty)
{
    // omega_M = 0.5 < lambda = 0.9, but sin(Delta) would need 1/0.9.
    EXPECT_TRUE(enumerate_equilibria(test::two_oscillators(0.5, 0.9)).classes.empty());
    EXPECT_TRUE(enumerate_equilibria(test::two_oscillators(0.5, 0.4)).classes.empty());
}

TEST(Enumerate, MatchesClosedFormOverCouplings)
{
    for (double lambda : {1.01, 1.2, 1.7, 3.0, 10.0}) {
        const auto set = enumerate_equilibria(test::two_oscillators(0.5, lambda));
        const auto gaps = two_oscillator_gaps(0.5, lambda);
        ASSERT_EQ(set.classes.size(), 2u) << lambda;
        EXPECT_NEAR(gap(set.classes[0]), gaps[0], 1e-9);
        EXPECT_NEAR(gap(set.classes[1]), gaps[1], 1e-9);
    }
}

TEST(Enumerate, IdenticalFrequenciesThreeOscillators)
{
    const auto e = Ensemble::make(3, {0, 0, 0}, {1, 1, 1}, {0, 0, 0}, 1.0);
    const auto set = enumerate_equilibria(e);
    ASSERT_FALSE(set.classes.empty());
    EXPECT_NEAR(set.classes.front().r, 1.0, 1e-12);
    EXPECT_FALSE(set.classes.front().degenerate);
    const bool has_splay = std::any_of(set.classes.begin(), set.classes.end(),
                                       [](const EquilibriumClass& c) { return c.degenerate && c.r < 1e-9; });
    EXPECT_TRUE(has_splay);
    for (const auto& c : set.classes) EXPECT_LE(c.residual, 1e-9);
}

TEST(Enumerate, IdenticalFrequenciesLargeNFlagsFamily)
{
    const auto e = Ensemble::make(4, {0, 0, 0, 0}, {1, 1, 1, 1}, {0, 0, 0, 0}, 1.0);
    const auto set = enumerate_equilibria(e);
    EXPECT_TRUE(set.degenerate_family);
    EXPECT_FALSE(set.note.empty());
    EXPECT_NEAR(set.classes.front().r, 1.0, 1e-12);
}

TEST(Enumerate, RefusesBeyondSweepBudget)
{
    EXPECT_THROW(enumerate_equilibria(test::random_ensemble(1, 21)), ParameterError);
}

TEST(Enumerate, ClassInvariants)
{
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto e = test::random_ensemble(seed, 2 + seed % 5, 2.0);
        const auto set = enumerate_equilibria(e);
        const double lambda = e.coupling();
        for (std::size_t i = 0; i < set.classes.size(); ++i) {
            const auto& c = set.classes[i];
            if (i > 0) EXPECT_GE(set.classes[i - 1].r, c.r);
            EXPECT_GE(c.r, e.omega_max() / lambda - 1e-12);
            EXPECT_LE(c.r, 1.0 + 1e-12);
            double sum_cos = 0.0, sum_sin = 0.0;
            for (std::size_t j = 0; j < e.size(); ++j) {
                const double s = -e.omega()[j] / (lambda * c.r);
                EXPECT_NEAR(std::sin(c.delta[j]), s, 1e-10);
                EXPECT_NEAR(std::cos(c.delta[j]), c.sigma[j] * std::sqrt(1 - s * s), 1e-10);
                sum_cos += std::cos(c.delta[j]);
                sum_sin += std::sin(c.delta[j]);
            }
            EXPECT_NEAR(sum_cos, c.r * static_cast<double>(e.size()), 1e-9);
            EXPECT_NEAR(sum_sin, 0.0, 1e-9);
            for (double g : stationarity_residual(e, c.representative)) EXPECT_LE(std::abs(g), 1e-9);
        }
    }
}

TEST(GaugeAnchor, Examples)
{
    const auto e = Ensemble::make(2, {0, 0}, {1, 1}, {0, 0}, 1.0);
    EquilibriumClass c;
    c.representative = {0.0, pi};
    const auto anchored = gauge_anchor(c, e, 0.0);
    EXPECT_NEAR(anchored[0], -pi / 2, 1e-15);
    EXPECT_NEAR(anchored[1], pi / 2, 1e-15);

    const auto same = gauge_anchor(c, e, pi);
    EXPECT_NEAR(same[0], 0.0, 1e-15);
    EXPECT_NEAR(same[1], pi, 1e-15);
}

TEST(GaugeAnchor, WeightsByDamping)
{
    const auto e = Ensemble::make(2, {0, 0}, {1, 3}, {0.3, -0.1}, 1.0);
    EquilibriumClass c;
    c.representative = {0.2, -0.4};
    const auto a = gauge_anchor(c, e, 5.0);
    EXPECT_NEAR(a[0] + 3 * a[1], 5.0, 1e-14);
    EXPECT_NEAR(a[1] - a[0], -0.6, 1e-14);
}

TEST(BruteForce, TwoOscillators)
{
    const auto oracle = brute_force_equilibria(test::two_oscillators(0.5, 2.0), 720);
    ASSERT_EQ(oracle.size(), 2u);
    std::vector<double> gaps;
    for (const auto& psi : oracle) {
        EXPECT_EQ(psi[0], 0.0);
        gaps.push_back(wrap_pi(psi[1]));
    }
    std::sort(gaps.begin(), gaps.end());
    EXPECT_NEAR(gaps[0], -5 * pi / 6, 1e-9);
    EXPECT_NEAR(gaps[1], -pi / 6, 1e-9);
}

TEST(BruteForce, IdenticalPair)
{
    const auto oracle = brute_force_equilibria(Ensemble::make(2, {0, 0}, {1, 1}, {0, 0}, 1.0), 720);
    ASSERT_EQ(oracle.size(), 2u);
    std::vector<double> second{wrap_two_pi(oracle[0][1]), wrap_two_pi(oracle[1][1])};
    std::sort(second.begin(), second.end());
    EXPECT_NEAR(circle_distance(second[0], 0.0), 0.0, 1e-9);
    EXPECT_NEAR(second[1], pi, 1e-9);
}

TEST(BruteForce, AgreesWithEnumeratorOnThreeOscillators)
{
    for (std::uint64_t seed = 100; seed < 103; ++seed) {
        const auto e = test::random_ensemble(seed, 3);
        const auto set = enumerate_equilibria(e);
        const auto cmp = compare_with_oracle(set, brute_force_equilibria(e, 180));
        EXPECT_TRUE(cmp.agree) << "seed " << seed << ": " << cmp.enumerated << " vs " << cmp.oracle;
        EXPECT_LE(cmp.max_delta_error, 1e-6);
    }
}

TEST(BruteForce, RefusesLargeN)
{
    EXPECT_THROW(brute_force_equilibria(test::random_ensemble(3, 5), 10), ParameterError);
}

TEST(NearestClass, PicksAnchoredClass)
{
    const auto e = test::two_oscillators(0.5, 2.0);
    const auto set = enumerate_equilibria(e);
    const double c0 = 3.0;
    const auto target = gauge_anchor(set.classes[1], e, c0);
    const auto nearest = nearest_class(set, e, c0, target);
    ASSERT_TRUE(nearest);
    EXPECT_EQ(nearest->index, 1u);
    EXPECT_NEAR(nearest->distance, 0.0, 1e-12);
}

TEST(DeltaOf, UsesOrderParameterPhase)
{
    const std::vector<double> psi{0.3, 0.3, 0.3};
    for (double d : delta_of(psi)) EXPECT_NEAR(d, 0.0, 1e-15);
}

} // namespace
} // namespace hkflow
