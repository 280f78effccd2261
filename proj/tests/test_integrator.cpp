#include "hkflow/errors.hpp"
#include "hkflow/integrator.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace hkflow {
namespace {

constexpr double pi = std::numbers::pi;

TEST(Step, CoherentRestIsFixed)
{
    const auto e = Ensemble::make(1, {0, 1, 2}, {1, 1, 1}, {0, 0, 0}, 3.0);
    const State s{0.5, {1.0, 1.0, 1.0}, {0.0, 0.0}};
    const State next = step(e, s, 1e-2);
    EXPECT_DOUBLE_EQ(next.t, 0.51);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(next.theta[j], 1.0, 1e-16);
    for (double v : next.v) EXPECT_NEAR(v, 0.0, 1e-16);
}

TEST(Step, SingleInertialOscillatorDecays)
{
    const auto e = Ensemble::make(0, {1.0}, {1.0}, {0.0}, 2.0);
    State s{0.0, {0.0}, {1.0}};
    const double dt = 1e-2;
    for (int k = 0; k < 100; ++k) s = step(e, s, dt);
    // Global error of RK4 on v' = -v is O(dt^4).
    EXPECT_NEAR(s.v[0], std::exp(-1.0), 1e-9);
    EXPECT_NEAR(s.theta[0], 1.0 - std::exp(-1.0), 1e-9);
}

TEST(Step, NonFiniteThrows)
{
    const auto e = Ensemble::make(0, {1.0}, {1.0}, {0.0}, 1.0);
    EXPECT_THROW(step(e, State{0.0, {0.0}, {std::numeric_limits<double>::infinity()}}, 1e-3), IntegrationError);
}

double end_error(const Ensemble& e, const State& s0, double dt, const State& ref)
{
    const auto traj = integrate(e, s0, test::config(dt, 2.0, 1'000'000));
    const State& end = traj.samples.back().state;
    double err = 0.0;
    for (std::size_t j = 0; j < end.theta.size(); ++j) err = std::max(err, std::abs(end.theta[j] - ref.theta[j]));
    for (std::size_t i = 0; i < end.v.size(); ++i) err = std::max(err, std::abs(end.v[i] - ref.v[i]));
    return err;
}

TEST(Integrate, FourthOrderConvergence)
{
    const auto e = Ensemble::make(1, {0, 0.7, 1.3}, {1.0, 0.8, 1.2}, {0.9, -0.4, -0.3}, 2.5);
    const auto norm = normalize_frame(e).ensemble;
    const State s0{0.0, {0.0, 2.0, 4.0}, {1.0, -1.5}};
    const State ref = integrate(norm, s0, test::config(2.5e-3 / 8, 2.0, 1'000'000)).samples.back().state;

    const double e1 = end_error(norm, s0, 1e-2, ref);
    const double e2 = end_error(norm, s0, 5e-3, ref);
    const double e3 = end_error(norm, s0, 2.5e-3, ref);
    // Least-squares slope of log error against log dt over three equally spaced points.
    const double slope = (std::log(e1) - std::log(e3)) / (std::log(1e-2) - std::log(2.5e-3));
    EXPECT_NEAR(slope, 4.0, 0.2) << e1 << " " << e2 << " " << e3;
    EXPECT_GT(e1 / e2, 12.0);
    EXPECT_GT(e2 / e3, 12.0);
}

TEST(Integrate, ZeroHorizonKeepsInitialSample)
{
    const auto e = test::two_oscillators(0.3, 1.0);
    const auto traj = integrate(e, State{0.0, {0.1, 0.2}, {}}, test::config(1e-3, 0.0));
    ASSERT_EQ(traj.samples.size(), 1u);
    EXPECT_EQ(traj.samples[0].state.t, 0.0);
    EXPECT_EQ(traj.samples[0].state.theta, (std::vector<double>{0.1, 0.2}));
}

TEST(Integrate, SampleTimesIncrease)
{
    const auto e = test::random_ensemble(3, 3);
    const auto traj = integrate(e, random_initial_state(e, 1), test::config(1e-3, 1.05, 100));
    ASSERT_EQ(traj.samples.size(), 12u);
    EXPECT_EQ(traj.samples[0].state.t, 0.0);
    for (std::size_t i = 1; i < traj.samples.size(); ++i)
        EXPECT_GT(traj.samples[i].state.t, traj.samples[i - 1].state.t);
    EXPECT_DOUBLE_EQ(traj.end_time(), 1.05);
}

TEST(Integrate, RejectsUnnormalizedEnsemble)
{
    const auto e = Ensemble::make(2, {0, 0}, {1, 1}, {1.0, 0.0}, 1.0);
    EXPECT_THROW(integrate(e, State{0.0, {0, 0}, {}}, test::config(1e-3, 1.0)), ParameterError);
}

TEST(Integrate, MomentumConservedOnRandomEnsemble)
{
    const auto e = test::random_ensemble(55, 5);
    const auto traj = integrate(e, random_initial_state(e, 2), test::config(1e-3, 100.0, 1000));
    const double m0 = traj.samples.front().momentum;
    for (const auto& s : traj.samples) EXPECT_LE(std::abs(s.momentum - m0), 1e-8 * (1 + std::abs(m0)));
}

TEST(Integrate, AdaptiveAgreesWithFixed)
{
    const auto e = test::random_ensemble(12, 4);
    const State s0 = random_initial_state(e, 4);
    auto cfg = test::config(1e-3, 5.0, 1000);
    const auto fixed = integrate(e, s0, cfg);
    cfg.method = Method::rk45_adaptive;
    const auto adaptive = integrate(e, s0, cfg);
    ASSERT_EQ(fixed.samples.size(), adaptive.samples.size());
    for (std::size_t i = 0; i < fixed.samples.size(); ++i) {
        EXPECT_DOUBLE_EQ(fixed.samples[i].state.t, adaptive.samples[i].state.t);
        for (std::size_t j = 0; j < 4; ++j)
            EXPECT_NEAR(fixed.samples[i].state.theta[j], adaptive.samples[i].state.theta[j], 1e-8);
    }
}

TEST(Integrate, UnstableStepRecordsFault)
{
    // dt far beyond the RK4 stability limit of v' = -(d/m) v.
    const auto e = Ensemble::make(0, {1e-3, 1e-3}, {1, 1}, {0, 0}, 1.0);
    const auto traj = integrate(e, State{0.0, {0, 1}, {1, 0}}, test::config(0.5, 1e4));
    ASSERT_TRUE(traj.fault.has_value());
    EXPECT_LT(traj.end_time(), 1e4);
    for (const auto& s : traj.samples) EXPECT_TRUE(std::isfinite(s.state.v[0]));
}

TEST(RandomInitialState, UsesCounterStream)
{
    const auto e = Ensemble::make(1, {0, 1, 1}, {1, 1, 1}, {0, 0, 0}, 1.0);
    const State s = random_initial_state(e, 42);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(s.theta[j], 2 * pi * unit_double(splitmix64_at(42, j)));
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(s.v[i], -1.0 + 2.0 * unit_double(splitmix64_at(42, 3 + i)));
}

TEST(LocateCrossing, ConstantVelocity)
{
    const Rhs rhs = [](std::span<const double>, std::span<double> dy) { dy[0] = 1.0; };
    const std::vector<double> y0{0.3};
    CrossingOptions opt;
    opt.dt = 0.01;
    const auto c = locate_crossing(rhs, y0, 0, 0.3 + 2 * pi, opt);
    ASSERT_EQ(c.status, CrossingStatus::found);
    EXPECT_NEAR(c.time, 2 * pi, 1e-9);
    EXPECT_NEAR(c.y[0], 0.3 + 2 * pi, 1e-10);
}

TEST(LocateCrossing, TargetBehindIsNotFound)
{
    const Rhs rhs = [](std::span<const double>, std::span<double> dy) { dy[0] = 1.0; };
    const std::vector<double> y0{1.0};
    EXPECT_EQ(locate_crossing(rhs, y0, 0, 0.5, {}).status, CrossingStatus::not_found);
}

TEST(LocateCrossing, HorizonIsNotFound)
{
    const Rhs rhs = [](std::span<const double>, std::span<double> dy) { dy[0] = 1.0; };
    const std::vector<double> y0{0.0};
    CrossingOptions opt;
    opt.max_time = 1.0;
    EXPECT_EQ(locate_crossing(rhs, y0, 0, 5.0, opt).status, CrossingStatus::not_found);
}

TEST(LocateCrossing, StopPredicate)
{
    // theta' = v, v' = -1: v hits zero at t = 1 before theta reaches 10.
    const Rhs rhs = [](std::span<const double> y, std::span<double> dy) {
        dy[0] = y[1];
        dy[1] = -1.0;
    };
    const std::vector<double> y0{0.0, 1.0};
    CrossingOptions opt;
    opt.stop = [](std::span<const double> y) { return y[1] <= 0.0; };
    const auto c = locate_crossing(rhs, y0, 0, 10.0, opt);
    EXPECT_EQ(c.status, CrossingStatus::stopped);
    EXPECT_NEAR(c.time, 1.0, 2e-3);
}

TEST(LocateCrossing, Deterministic)
{
    const auto e = test::random_ensemble(5, 3);
    const State s = random_initial_state(e, 8);
    const auto f = vector_field(e, s);
    const std::size_t j = f.theta_dot[0] > 0 ? 0 : 1;
    const double target = s.theta[j] + 0.5;
    const auto a = locate_crossing(e, s, j, target, {});
    const auto b = locate_crossing(e, s, j, target, {});
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.time, b.time);
    EXPECT_EQ(a.y, b.y);
}

} // namespace
} // namespace hkflow
