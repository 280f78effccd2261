#pragma once

#include "hkflow/classifier.hpp"
#include "hkflow/trajectory.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hkflow {

/// One oscillator driven by a frozen order parameter R* e^{i Theta*}:
///   m v' = -d v + omega + lamR sin(Theta* - theta),  theta' = v.
struct LimitParams {
    double m = 1.0;
    double d = 1.0;
    double omega = 0.0;
    double lamR = 0.0;
    double Theta_star = 0.0;

    /// Throws ParameterError unless m, d > 0 and lamR >= 0.
    void validate() const;
};

struct LimitField {
    double v_dot = 0.0;
    double theta_dot = 0.0;
};

LimitField limit_vector_field(const LimitParams& p, double v, double theta);

/// Rest angles in (-pi, pi]: two when lamR > |omega|, one at equality (within 1e-12),
/// none in the drift regime lamR < |omega| or when lamR = 0.
std::vector<double> limit_equilibria(const LimitParams& p);

/// Max over `sample_count` random points (v in [-10, 10], theta in (-pi, pi]) of
/// |central-difference divergence - (-d/m)|.
double divergence_check(const LimitParams& p, std::size_t sample_count, double h = 1e-5, std::uint64_t seed = 0);

/// L = m v^2 / 2 - omega theta - lamR cos(Theta* - theta) on the lifted plane.
double lyapunov_L(const LimitParams& p, double v, double theta);

/// Section anchor Theta* + arcsin(omega / lamR) in [0, 2pi): the rest angle with
/// cos(Theta* - theta0) >= 0. Throws ParameterError in the drift regime.
double poincare_anchor(const LimitParams& p);

enum class PoincareOutcome { crossed, captured, horizon, refused };

std::string_view outcome_name(PoincareOutcome outcome);

struct PoincareOptions {
    double dt = 1e-5;
    /// Time budget for reaching the section; orbits creeping towards a degenerate rest
    /// point never arrive.
    double horizon = 200.0;
    double tolerance = 1e-12;
};

struct PoincareResult {
    double v0 = 0.0;
    double theta0 = 0.0;
    double tau = 0.0;
    double P = 0.0;
    /// (P^2 - v0^2) - [4 pi omega / m - (2 d / m) int_0^tau v^2]
    double energy_residual = 0.0;
    /// P - exp((d/m) tau) v0
    double exp_identity_residual = 0.0;
    bool crossed = false;
    PoincareOutcome outcome = PoincareOutcome::refused;
    std::string reason;
};

/// Integrates (v, theta, int v^2) from (v0, theta0) until theta = theta0 + 2pi.
/// v reaching 0 first gives outcome captured. Drift regime and v0 <= 0 give refused.
PoincareResult poincare_return(const LimitParams& p, double v0, const PoincareOptions& options = {});

/// poincare_return over a grid, fanned out over `threads` workers; results in grid order.
std::vector<PoincareResult> poincare_sweep(const LimitParams& p, const std::vector<double>& v0_grid,
                                           const PoincareOptions& options = {}, unsigned threads = 0);

struct AutonomyReport {
    bool applicable = false;
    std::string reason;
    std::size_t oscillator = 0;
    double R_star = 0.0;
    double Theta_star = 0.0;
    /// sup over the trailing window of |R - R*| + |Theta - Theta*|
    double tail_deviation = 0.0;
    /// Euclidean distance of (v_j, theta_j mod 2pi) at the last sample to the nearest rest point
    /// of the limit system (frequency used for first-order oscillators).
    double equilibrium_distance = 0.0;
    double nearest_equilibrium = 0.0;
};

/// Requires detect_opss(trajectory) = true; otherwise applicable = false.
AutonomyReport autonomy_audit(const Trajectory& trajectory, std::size_t oscillator, const Tolerances& tol = {});

} // namespace hkflow
