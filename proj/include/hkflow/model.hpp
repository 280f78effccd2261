#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hkflow {

/// Parameters of the all-to-all hybrid Kuramoto ensemble.
///
/// Oscillators are indexed 0..N-1. The first `n` are first-order (zero inertia),
/// the remaining N-n carry inertia m_j > 0. Every oscillator has damping d_j > 0.
/// Instances are validated on construction and immutable afterwards.
class Ensemble {
public:
    /// Throws ParameterError when any invariant is violated.
    static Ensemble make(std::size_t first_order_count,
                         std::vector<double> inertia,
                         std::vector<double> damping,
                         std::vector<double> omega,
                         double coupling);

    std::size_t size() const noexcept { return omega_.size(); }
    std::size_t first_order_count() const noexcept { return first_order_; }
    std::size_t inertial_count() const noexcept { return size() - first_order_; }
    bool is_inertial(std::size_t j) const noexcept { return j >= first_order_; }

    std::span<const double> inertia() const noexcept { return inertia_; }
    std::span<const double> damping() const noexcept { return damping_; }
    std::span<const double> omega() const noexcept { return omega_; }
    double coupling() const noexcept { return coupling_; }

    /// max_j |omega_j|
    double omega_max() const noexcept { return omega_max_; }
    double damping_sum() const noexcept { return damping_sum_; }

    /// |sum omega| within 1e-12 * max(1, omega_max).
    bool is_normalized() const noexcept;

    Ensemble with_coupling(double coupling) const;
    Ensemble with_omega(std::vector<double> omega) const;

    friend bool operator==(const Ensemble&, const Ensemble&) = default;

private:
    Ensemble() = default;

    std::size_t first_order_ = 0;
    std::vector<double> inertia_;
    std::vector<double> damping_;
    std::vector<double> omega_;
    double coupling_ = 0.0;
    double omega_max_ = 0.0;
    double damping_sum_ = 0.0;
};

/// Lifted phases (not reduced mod 2pi) and velocities of the inertial oscillators.
struct State {
    double t = 0.0;
    std::vector<double> theta;  // N entries
    std::vector<double> v;      // N - n entries, oscillator n + i at index i
};

struct FrameNormalization {
    Ensemble ensemble;
    /// (sum omega) / (sum d): the rotation rate removed from every phase.
    double drift = 0.0;
};

/// Moves to the co-rotating frame: omega_j <- omega_j - d_j * drift.
/// Phases and velocities are left to the caller (theta_j - drift * t, v_j - drift).
FrameNormalization normalize_frame(const Ensemble& ensemble);

/// Shifts the velocities of a lab-frame state into the co-rotating frame.
State to_corotating(const State& state, double drift);

struct FieldValue {
    std::vector<double> theta_dot;  // N entries
    std::vector<double> v_dot;      // N - n entries
};

/// (1/N) * sum_k sin(theta_k - theta_j) for every j, evaluated through the order parameter.
void coupling_sums(std::span<const double> theta, std::span<double> out);

/// Right-hand side of the hybrid system. Throws ParameterError on dimension mismatch.
FieldValue vector_field(const Ensemble& ensemble, const State& state);

/// Instantaneous frequencies of all N oscillators (first-order ones from the field).
std::vector<double> frequencies(const Ensemble& ensemble, const State& state);

/// g_j = omega_j + (lambda/N) sum_k sin(theta_k - theta_j); zero at equilibria.
std::vector<double> stationarity_residual(const Ensemble& ensemble, std::span<const double> theta);

/// Conserved quantity sum_j d_j theta_j + sum_{j>n} m_j v_j.
double momentum(const Ensemble& ensemble, const State& state);

void check_dimensions(const Ensemble& ensemble, const State& state);

/// Flat layout used by the integrators: [theta_0..theta_{N-1}, v_n..v_{N-1}].
std::vector<double> pack(const State& state);
State unpack(const Ensemble& ensemble, double t, std::span<const double> y);

/// Writes d/dt of the packed state into dy; sizes must be N + (N - n).
void evaluate_field(const Ensemble& ensemble, std::span<const double> y, std::span<double> dy);

} // namespace hkflow
