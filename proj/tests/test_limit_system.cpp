#include "hkflow/classifier.hpp"
#include "hkflow/equilibria.hpp"
#include "hkflow/errors.hpp"
#include "hkflow/integrator.hpp"
#include "hkflow/limit_system.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace hkflow {
namespace {

constexpr double pi = std::numbers::pi;

LimitParams params(double m, double d, double omega, double lamR, double Theta = 0.0)
{
    return LimitParams{m, d, omega, lamR, Theta};
}

TEST(LimitField, Examples)
{
    const auto p = params(1, 1, 0.5, 0.5);
    const auto f = limit_vector_field(p, 1.0, 0.0);
    EXPECT_NEAR(f.v_dot, -0.5, 1e-15);
    EXPECT_EQ(f.theta_dot, 1.0);

    const auto damped = limit_vector_field(params(2, 3, 0, 0), 1.5, 0.7);
    EXPECT_NEAR(damped.v_dot, -3.0 / 2.0 * 1.5, 1e-15);

    // lamR sin(Theta* - theta) = -omega at theta = Theta* + asin(omega/lamR).
    const auto q = params(1, 1, 0.3, 0.6, 0.4);
    const auto rest = limit_vector_field(q, 0.0, 0.4 + std::asin(0.5));
    EXPECT_NEAR(rest.v_dot, 0.0, 1e-15);
    EXPECT_EQ(rest.theta_dot, 0.0);
}

TEST(LimitParams, Validate)
{
    EXPECT_THROW(params(0, 1, 0, 1).validate(), ParameterError);
    EXPECT_THROW(params(1, -1, 0, 1).validate(), ParameterError);
    EXPECT_THROW(params(1, 1, 0, -1).validate(), ParameterError);
}

TEST(LimitEquilibria, Counts)
{
    EXPECT_EQ(limit_equilibria(params(1, 1, 0.3, 0.8)).size(), 2u);
    EXPECT_EQ(limit_equilibria(params(1, 1, 0.5, 0.5)).size(), 1u);
    EXPECT_TRUE(limit_equilibria(params(1, 1, 0.9, 0.5)).empty());

    auto zero = limit_equilibria(params(1, 1, 0, 1));
    ASSERT_EQ(zero.size(), 2u);
    std::sort(zero.begin(), zero.end());
    EXPECT_NEAR(zero[0], 0.0, 1e-15);
    EXPECT_NEAR(zero[1], pi, 1e-15);
}

TEST(LimitEquilibria, AreRestPoints)
{
    const auto p = params(0.7, 1.3, -0.4, 0.9, 2.5);
    for (double th : limit_equilibria(p)) {
        EXPECT_GT(th, -pi);
        EXPECT_LE(th, pi);
        EXPECT_NEAR(limit_vector_field(p, 0.0, th).v_dot, 0.0, 1e-14);
    }
}

TEST(Divergence, MatchesMinusDOverM)
{
    EXPECT_LE(divergence_check(params(4, 2, 0.3, 1.0), 200), 1e-6);
    EXPECT_LE(divergence_check(params(1, 1, 0.0, 0.5), 200), 1e-6);
    CounterRng rng(5);
    for (int k = 0; k < 20; ++k) {
        const auto p = params(rng.uniform(0.1, 5), rng.uniform(0.1, 5), rng.uniform(-2, 2), rng.uniform(0, 3),
                              rng.uniform(-pi, pi));
        for (double h : {1e-3, 1e-4, 1e-5}) EXPECT_LE(divergence_check(p, 50, h, k), 1e-6);
    }
}

TEST(Lyapunov, Value)
{
    EXPECT_EQ(lyapunov_L(params(1, 1, 0, 1), 0.0, 0.0), -1.0);
    EXPECT_NEAR(lyapunov_L(params(2, 1, 0.5, 0.0), 1.0, 2.0), 1.0 - 1.0, 1e-15);
}

TEST(Lyapunov, DissipationAlongTrajectory)
{
    const auto p = params(1.5, 0.7, 0.4, 0.9, 0.3);
    const Rhs rhs = [&](std::span<const double> y, std::span<double> dy) {
        const auto f = limit_vector_field(p, y[0], y[1]);
        dy[0] = f.v_dot;
        dy[1] = f.theta_dot;
    };
    std::vector<double> y{2.0, 0.0};
    Rk4 rk(2);
    const double dt = 1e-3;
    double previous = lyapunov_L(p, y[0], y[1]);
    std::vector<double> L{previous}, v{y[0]};
    for (int k = 0; k < 5000; ++k) {
        rk.advance(rhs, y, dt);
        L.push_back(lyapunov_L(p, y[0], y[1]));
        v.push_back(y[0]);
        if (std::abs(y[0]) > 1e-3) EXPECT_LT(L.back(), previous);
        previous = L.back();
    }
    // Central difference of L against -d v^2.
    for (std::size_t i = 1; i + 1 < L.size(); ++i) {
        const double dL = (L[i + 1] - L[i - 1]) / (2 * dt);
        EXPECT_NEAR(dL, -p.d * v[i] * v[i], 1e-5);
    }
}

TEST(Poincare, Anchor)
{
    EXPECT_NEAR(poincare_anchor(params(1, 1, 0.5, 0.5)), pi / 2, 1e-15);
    EXPECT_NEAR(poincare_anchor(params(1, 1, -0.3, 0.6, -1.0)), wrap_two_pi(-1.0 - std::asin(0.5)), 1e-15);
    EXPECT_THROW(poincare_anchor(params(1, 1, 0.9, 0.5)), ParameterError);
}

TEST(Poincare, FastOrbitCrosses)
{
    const auto r = poincare_return(params(1, 1, 0.5, 0.5), 5.0);
    ASSERT_TRUE(r.crossed) << r.reason;
    EXPECT_EQ(r.outcome, PoincareOutcome::crossed);
    EXPECT_NEAR(r.theta0, pi / 2, 1e-15);
    // Reference from an independent adaptive integration at rtol 1e-12. Damping removes most of
    // the kinetic energy within one turn, so tau is far from the free-rotation value 2 pi / 5.
    EXPECT_NEAR(r.tau, 4.2114132, 1e-6);
    EXPECT_NEAR(r.P, 0.1619859, 1e-6);
    EXPECT_LE(std::abs(r.energy_residual), 1e-8);
}

TEST(Poincare, LargeVelocityAsymptotics)
{
    const double v0 = 1e3;
    const auto r = poincare_return(params(1, 1, 0.5, 0.5), v0);
    ASSERT_TRUE(r.crossed);
    EXPECT_NEAR(r.tau * v0, 2 * pi, 0.01 * 2 * pi);
    EXPECT_NEAR(r.P / v0, 1.0, 0.01);
}

TEST(Poincare, SlowOrbitDoesNotCross)
{
    PoincareOptions opt;
    opt.horizon = 50.0;
    const auto r = poincare_return(params(1, 1, 0.5, 0.5), 0.01, opt);
    EXPECT_FALSE(r.crossed);
    EXPECT_NE(r.outcome, PoincareOutcome::crossed);
    EXPECT_FALSE(r.reason.empty());
}

TEST(Poincare, CapturedBelowBarrier)
{
    // Two rest points: a slow start falls back into the well.
    const auto r = poincare_return(params(1, 1, 0.2, 1.0), 0.1);
    EXPECT_FALSE(r.crossed);
    EXPECT_EQ(r.outcome, PoincareOutcome::captured);
}

TEST(Poincare, RefusesOutsideContract)
{
    EXPECT_EQ(poincare_return(params(1, 1, 0.9, 0.5), 1.0).outcome, PoincareOutcome::refused);
    EXPECT_EQ(poincare_return(params(1, 1, 0.5, 0.8), -1.0).outcome, PoincareOutcome::refused);
}

TEST(Poincare, ReturnMapMonotoneAndEnergyExact)
{
    const auto p = params(1, 0.3, 0.5, 0.8);
    std::vector<double> grid;
    for (int k = 0; k < 8; ++k) grid.push_back(2.0 + 0.5 * k);
    PoincareOptions opt;
    opt.dt = 1e-4;
    const auto results = poincare_sweep(p, grid, opt, 1);
    ASSERT_EQ(results.size(), grid.size());
    double previous = -1.0;
    for (const auto& r : results) {
        ASSERT_TRUE(r.crossed) << r.v0;
        EXPECT_GE(r.P, previous);
        EXPECT_LE(std::abs(r.energy_residual), 1e-7);
        previous = r.P;
    }
}

TEST(Poincare, SweepMatchesSingleCalls)
{
    const auto p = params(1, 1, 0.5, 0.6);
    PoincareOptions opt;
    opt.dt = 1e-4;
    const std::vector<double> grid{3.0, 6.0};
    const auto sweep = poincare_sweep(p, grid, opt, 2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto one = poincare_return(p, grid[i], opt);
        EXPECT_EQ(sweep[i].tau, one.tau);
        EXPECT_EQ(sweep[i].P, one.P);
    }
}

TEST(Autonomy, EquilibriumStart)
{
    const auto e = test::two_oscillators(0.5, 2.0, 1);
    const auto set = enumerate_equilibria(e);
    State s{0.0, gauge_anchor(set.classes[0], e, 0.0), {0.0}};
    const auto traj = integrate(e, s, test::config(1e-3, 20.0, 10));
    for (std::size_t j = 0; j < 2; ++j) {
        const auto a = autonomy_audit(traj, j);
        ASSERT_TRUE(a.applicable) << a.reason;
        EXPECT_LE(a.tail_deviation, 1e-12);
        EXPECT_LE(a.equilibrium_distance, 1e-9);
    }
}

TEST(Autonomy, HybridRunConverges)
{
    const auto e = test::random_ensemble(64, 3);
    const auto traj = integrate(e, random_initial_state(e, 3), test::config(1e-3, 500.0, 100));
    for (std::size_t j = 0; j < 3; ++j) {
        const auto a = autonomy_audit(traj, j);
        ASSERT_TRUE(a.applicable) << a.reason;
        EXPECT_LE(a.tail_deviation, 1e-5);
        EXPECT_LE(a.equilibrium_distance, 1e-4);
    }
}

TEST(Autonomy, NotApplicableWhenDrifting)
{
    const auto e = test::two_oscillators(0.8, 1.0);
    const auto traj = integrate(e, State{0.0, {0.0, 0.5}, {}}, test::config(1e-3, 100.0, 10));
    const auto a = autonomy_audit(traj, 0);
    EXPECT_FALSE(a.applicable);
    EXPECT_FALSE(a.reason.empty());
}

} // namespace
} // namespace hkflow
