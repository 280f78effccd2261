#include "hkflow/model.hpp"

#include "hkflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hkflow {

namespace {

void require(bool condition, const std::string& message)
{
    if (!condition) throw ParameterError(message);
}

} // namespace

Ensemble Ensemble::make(std::size_t first_order_count,
                        std::vector<double> inertia,
                        std::vector<double> damping,
                        std::vector<double> omega,
                        double coupling)
{
    const std::size_t n_osc = omega.size();
    require(n_osc >= 1, "ensemble needs at least one oscillator");
    require(first_order_count <= n_osc, "first-order count n exceeds N");
    require(inertia.size() == n_osc, "inertia array must have N entries");
    require(damping.size() == n_osc, "damping array must have N entries");
    require(std::isfinite(coupling) && coupling > 0.0, "coupling lambda must be positive");

    for (std::size_t j = 0; j < n_osc; ++j) {
        const auto idx = std::to_string(j + 1);
        require(std::isfinite(omega[j]), "omega_" + idx + " is not finite");
        require(std::isfinite(damping[j]) && damping[j] > 0.0, "damping d_" + idx + " must be positive");
        if (j < first_order_count) {
            require(inertia[j] == 0.0, "inertia m_" + idx + " must be exactly 0 for a first-order oscillator");
        } else {
            require(std::isfinite(inertia[j]) && inertia[j] > 0.0,
                    "inertia m_" + idx + " must be positive for an inertial oscillator");
        }
    }

    Ensemble e;
    e.first_order_ = first_order_count;
    e.inertia_ = std::move(inertia);
    e.damping_ = std::move(damping);
    e.omega_ = std::move(omega);
    e.coupling_ = coupling;
    e.omega_max_ = 0.0;
    for (double w : e.omega_) e.omega_max_ = std::max(e.omega_max_, std::abs(w));
    e.damping_sum_ = std::accumulate(e.damping_.begin(), e.damping_.end(), 0.0);
    return e;
}

bool Ensemble::is_normalized() const noexcept
{
    const double sum = std::accumulate(omega_.begin(), omega_.end(), 0.0);
    return std::abs(sum) <= 1e-12 * std::max(1.0, omega_max_);
}

Ensemble Ensemble::with_coupling(double coupling) const
{
    return make(first_order_, inertia_, damping_, omega_, coupling);
}

Ensemble Ensemble::with_omega(std::vector<double> omega) const
{
    return make(first_order_, inertia_, damping_, std::move(omega), coupling_);
}

FrameNormalization normalize_frame(const Ensemble& ensemble)
{
    const auto omega = ensemble.omega();
    const auto damping = ensemble.damping();
    const double drift = std::accumulate(omega.begin(), omega.end(), 0.0) / ensemble.damping_sum();

    std::vector<double> shifted(omega.size());
    for (std::size_t j = 0; j < omega.size(); ++j) shifted[j] = omega[j] - damping[j] * drift;

    // Remove the round-off left in the sum, spread proportionally to d_j.
    const double leftover = std::accumulate(shifted.begin(), shifted.end(), 0.0);
    for (std::size_t j = 0; j < shifted.size(); ++j)
        shifted[j] -= damping[j] * leftover / ensemble.damping_sum();

    return {ensemble.with_omega(std::move(shifted)), drift};
}

State to_corotating(const State& state, double drift)
{
    State out = state;
    for (double& v : out.v) v -= drift;
    return out;
}

void check_dimensions(const Ensemble& ensemble, const State& state)
{
    if (state.theta.size() != ensemble.size())
        throw ParameterError("state has " + std::to_string(state.theta.size()) + " phases, ensemble has N = " +
                             std::to_string(ensemble.size()));
    if (state.v.size() != ensemble.inertial_count())
        throw ParameterError("state has " + std::to_string(state.v.size()) + " velocities, ensemble has N - n = " +
                             std::to_string(ensemble.inertial_count()));
}

void coupling_sums(std::span<const double> theta, std::span<double> out)
{
    const double inv_n = 1.0 / static_cast<double>(theta.size());
    double s = 0.0;
    double c = 0.0;
    for (double th : theta) {
        s += std::sin(th);
        c += std::cos(th);
    }
    s *= inv_n;
    c *= inv_n;
    // (1/N) sum_k sin(theta_k - theta_j) = S cos(theta_j) - C sin(theta_j)
    for (std::size_t j = 0; j < theta.size(); ++j) out[j] = s * std::cos(theta[j]) - c * std::sin(theta[j]);
}

void evaluate_field(const Ensemble& ensemble, std::span<const double> y, std::span<double> dy)
{
    const std::size_t n_osc = ensemble.size();
    const std::size_t first = ensemble.first_order_count();
    const auto theta = y.first(n_osc);
    const auto v = y.subspan(n_osc);
    auto theta_dot = dy.first(n_osc);
    auto v_dot = dy.subspan(n_osc);

    coupling_sums(theta, theta_dot);

    const auto omega = ensemble.omega();
    const auto damping = ensemble.damping();
    const auto inertia = ensemble.inertia();
    const double lambda = ensemble.coupling();

    for (std::size_t j = 0; j < n_osc; ++j) {
        const double force = omega[j] + lambda * theta_dot[j];
        if (j < first) {
            theta_dot[j] = force / damping[j];
        } else {
            const std::size_t i = j - first;
            v_dot[i] = (force - damping[j] * v[i]) / inertia[j];
            theta_dot[j] = v[i];
        }
    }
}

std::vector<double> pack(const State& state)
{
    std::vector<double> y;
    y.reserve(state.theta.size() + state.v.size());
    y.insert(y.end(), state.theta.begin(), state.theta.end());
    y.insert(y.end(), state.v.begin(), state.v.end());
    return y;
}

State unpack(const Ensemble& ensemble, double t, std::span<const double> y)
{
    const std::size_t n_osc = ensemble.size();
    State s;
    s.t = t;
    s.theta.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n_osc));
    s.v.assign(y.begin() + static_cast<std::ptrdiff_t>(n_osc), y.end());
    return s;
}

FieldValue vector_field(const Ensemble& ensemble, const State& state)
{
    check_dimensions(ensemble, state);
    const auto y = pack(state);
    std::vector<double> dy(y.size());
    evaluate_field(ensemble, y, dy);
    FieldValue out;
    out.theta_dot.assign(dy.begin(), dy.begin() + static_cast<std::ptrdiff_t>(ensemble.size()));
    out.v_dot.assign(dy.begin() + static_cast<std::ptrdiff_t>(ensemble.size()), dy.end());
    return out;
}

std::vector<double> frequencies(const Ensemble& ensemble, const State& state)
{
    return vector_field(ensemble, state).theta_dot;
}

std::vector<double> stationarity_residual(const Ensemble& ensemble, std::span<const double> theta)
{
    if (theta.size() != ensemble.size())
        throw ParameterError("configuration has " + std::to_string(theta.size()) + " phases, ensemble has N = " +
                             std::to_string(ensemble.size()));
    std::vector<double> g(theta.size());
    coupling_sums(theta, g);
    const auto omega = ensemble.omega();
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = omega[j] + ensemble.coupling() * g[j];
    return g;
}

double momentum(const Ensemble& ensemble, const State& state)
{
    check_dimensions(ensemble, state);
    const auto damping = ensemble.damping();
    const auto inertia = ensemble.inertia();
    double total = 0.0;
    for (std::size_t j = 0; j < state.theta.size(); ++j) total += damping[j] * state.theta[j];
    for (std::size_t i = 0; i < state.v.size(); ++i) total += inertia[ensemble.first_order_count() + i] * state.v[i];
    return total;
}

} // namespace hkflow
