#pragma once

#include "hkflow/model.hpp"
#include "hkflow/trajectory.hpp"

#include <span>
#include <vector>

namespace hkflow {

inline constexpr double kUnwrapFloor = 1e-8;

OrderParameterSample order_parameter(std::span<const double> theta);

/// Wraps x into (-pi, pi].
double wrap_pi(double x);
/// Wraps x into [0, 2pi).
double wrap_two_pi(double x);
/// Geodesic distance on the circle.
double circle_distance(double a, double b);

/// Continuous lift of a series of angles.
///
/// The first value is mapped into [0, 2pi); afterwards 2pi multiples are added so that
/// consecutive differences lie in (-pi, pi]. When `magnitudes` is given, samples with
/// magnitude below `floor` carry the previous value forward (the angle is undefined there).
std::vector<double> unwrap_angle_series(std::span<const double> angles,
                                        std::span<const double> magnitudes = {},
                                        double floor = kUnwrapFloor);

/// One step of the same rule, for streaming use.
double unwrap_next(double previous_unwrapped, double angle);

/// max_j theta_j - min_j theta_j over lifted phases.
double phase_diameter(std::span<const double> theta);

/// Running energy balance of the dissipative identity
///
///   sum m v^2/2 (t) + int_0^t sum d theta_dot^2
///     = sum m v^2/2 (0) + sum omega (theta(t) - theta(0)) + (lambda/N) sum_{j<k} [cos(theta_k - theta_j)]_0^t.
///
/// The dissipation integral is accumulated with the trapezoid rule over the pushed points.
class EnergyLedger {
public:
    explicit EnergyLedger(const Ensemble& ensemble);

    /// Feeds the next point (times must increase) and returns residual = lhs - rhs there.
    /// `theta_dot` holds all N instantaneous frequencies at that point.
    double push(const State& state, std::span<const double> theta_dot);

    /// Span form; `op` is the order parameter of `theta`, reused for the pair-cosine sum.
    double push(double t, std::span<const double> theta, std::span<const double> v,
                std::span<const double> theta_dot, const OrderParameterSample& op);

private:
    double kinetic(std::span<const double> v) const;

    Ensemble ensemble_;
    bool started_ = false;
    double t_prev_ = 0.0;
    double dissipation_rate_prev_ = 0.0;
    double dissipated_ = 0.0;
    double kinetic0_ = 0.0;
    double cosines0_ = 0.0;
    std::vector<double> theta0_;
};

/// Recomputes the ledger residual at every trajectory sample (trapezoid on samples).
std::vector<double> energy_ledger(const Trajectory& trajectory);

struct LkResult {
    double sup_f = 0.0;
    double sup_df = 0.0;
    double sup_d2f = 0.0;
    bool satisfied = false;
};

/// Landau-Kolmogorov check sup|f'| <= 2 sqrt(sup|f| sup|f''|) on uniformly spaced samples.
/// Derivatives by central differences; every sup estimate gets 10 h^2 slack in the
/// direction that favours the inequality. Needs at least 5 samples.
LkResult lk_check(std::span<const double> f, double h);

struct AprioriReport {
    /// Per oscillator: max over samples of observed |theta_dot_j| minus the envelope.
    /// Inertial envelope saturates at (|omega_j| + lambda) / d_j.
    std::vector<double> worst_violation;
    /// Same, with the saturation level (|omega_j| + lambda) / m_j for inertial oscillators.
    std::vector<double> worst_violation_m_scaled;

    double worst() const;
    double worst_m_scaled() const;
};

AprioriReport apriori_check(const Trajectory& trajectory);

} // namespace hkflow
