#pragma once

#include "hkflow/model.hpp"
#include "hkflow/trajectory.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace hkflow {

/// Autonomous right-hand side y' = f(y) on a flat state.
using Rhs = std::function<void(std::span<const double> y, std::span<double> dy)>;

/// Classical RK4 with reusable stage buffers.
class Rk4 {
public:
    explicit Rk4(std::size_t dim);

    /// y <- y + one step of size h. The derivative at the start may be passed in `f0`
    /// (it is computed when empty).
    void advance(const Rhs& rhs, std::span<double> y, double h, std::span<const double> f0 = {});

private:
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

/// One RK4 step of the hybrid system, treated as a single ODE of dimension N + (N - n).
/// Throws IntegrationError when the result is non-finite.
State step(const Ensemble& ensemble, const State& state, double dt);

/// Integrates a normalized ensemble from `initial` (whose t is taken as 0) to config.T.
///
/// Samples are taken every `sample_every` steps of size dt; the adaptive method is clamped
/// so that it lands on the same sample grid. Each sample carries R, the unwrapped Theta,
/// the momentum and the running energy-ledger residual (trapezoid over internal steps).
/// A non-finite state ends the run: the trajectory keeps its last good sample and `fault`
/// records the time.
Trajectory integrate(const Ensemble& ensemble, const State& initial, const IntegratorConfig& config);

/// Phases uniform on [0, 2pi), inertial velocities uniform on [-1, 1].
///
/// Phase j uses splitmix64_at(seed, j); velocity i (oscillator n + i) uses
/// splitmix64_at(seed, N + i). Both map the top 53 bits to [0, 1).
State random_initial_state(const Ensemble& ensemble, std::uint64_t seed);

Method parse_method(std::string_view name);
std::string_view method_name(Method method);

enum class CrossingStatus { found, not_found, stopped };

struct Crossing {
    CrossingStatus status = CrossingStatus::not_found;
    double time = 0.0;        // elapsed time from the start
    std::vector<double> y;    // state at the crossing (or where the search ended)
    int bisection_steps = 0;
};

struct CrossingOptions {
    double dt = 1e-3;
    double max_time = 1e3;
    double tolerance = 1e-10;
    int max_bisections = 60;
    /// Optional early exit evaluated after every full step (e.g. a captured trajectory).
    std::function<bool(std::span<const double> y)> stop;
};

/// First time component `index` of y reaches `target`, integrating y' = rhs(y) with RK4.
///
/// The step containing the sign change is refined by bisection on the sub-step length,
/// re-integrating from the start of that step, until |y[index] - target| <= tolerance.
/// Returns not_found when y[index] already is at or above the target, or when max_time
/// elapses first; returns stopped when the stop predicate fires.
Crossing locate_crossing(const Rhs& rhs, std::span<const double> y0, std::size_t index, double target,
                         const CrossingOptions& options);

/// Same for oscillator `oscillator` of the full system.
Crossing locate_crossing(const Ensemble& ensemble, const State& state, std::size_t oscillator, double target,
                         const CrossingOptions& options);

} // namespace hkflow
