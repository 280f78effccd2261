#include "hkflow/integrator.hpp"

#include "hkflow/diagnostics.hpp"
#include "hkflow/errors.hpp"
#include "hkflow/random.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

namespace hkflow {

namespace {

bool all_finite(std::span<const double> y)
{
    return std::all_of(y.begin(), y.end(), [](double x) { return std::isfinite(x); });
}

// Dormand-Prince 5(4) tableau.
constexpr std::array<std::array<double, 6>, 7> kA{{
    {0, 0, 0, 0, 0, 0},
    {1.0 / 5, 0, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
    {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
}};
constexpr std::array<double, 7> kErr{71.0 / 57600,      0,           -71.0 / 16695, 71.0 / 1920,
                                     -17253.0 / 339200, 22.0 / 525,  -1.0 / 40};

class DormandPrince {
public:
    DormandPrince(std::size_t dim, double abs_tol, double rel_tol)
        : k_(7, std::vector<double>(dim)), tmp_(dim), y_new_(dim), abs_tol_(abs_tol), rel_tol_(rel_tol) {}

    // Attempts a step of size h from y whose derivative is f0. On success y and f0 are
    // advanced and true is returned; `h_next` always receives the proposed next size.
    bool attempt(const Rhs& rhs, std::vector<double>& y, std::vector<double>& f0, double h, double& h_next)
    {
        const std::size_t dim = y.size();
        k_[0] = f0;
        for (std::size_t s = 1; s < 7; ++s) {
            for (std::size_t i = 0; i < dim; ++i) {
                double acc = 0.0;
                for (std::size_t r = 0; r < s; ++r) acc += kA[s][r] * k_[r][i];
                tmp_[i] = y[i] + h * acc;
            }
            rhs(tmp_, k_[s]);
            if (s == 6) y_new_ = tmp_;
        }
        double err = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double e = 0.0;
            for (std::size_t s = 0; s < 7; ++s) e += kErr[s] * k_[s][i];
            const double scale = abs_tol_ + rel_tol_ * std::max(std::abs(y[i]), std::abs(y_new_[i]));
            err = std::max(err, std::abs(h * e) / scale);
        }
        if (!std::isfinite(err)) {
            h_next = 0.2 * h;
            return false;
        }
        const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h_next = h * factor;
        if (err > 1.0) return false;
        y = y_new_;
        f0 = k_[6];
        return true;
    }

private:
    std::vector<std::vector<double>> k_;
    std::vector<double> tmp_, y_new_;
    double abs_tol_, rel_tol_;
};

} // namespace

void IntegratorConfig::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("integrator dt must be positive");
    if (!(T >= 0.0) || !std::isfinite(T)) throw ParameterError("integrator horizon T must be non-negative");
    if (sample_every < 1) throw ParameterError("sample_every must be at least 1");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw ParameterError("integrator tolerances must be positive");
}

Method parse_method(std::string_view name)
{
    if (name == "rk4_fixed") return Method::rk4_fixed;
    if (name == "rk45_adaptive") return Method::rk45_adaptive;
    throw ParameterError("unknown integration method '" + std::string(name) + "'");
}

std::string_view method_name(Method method)
{
    return method == Method::rk4_fixed ? "rk4_fixed" : "rk45_adaptive";
}

Rk4::Rk4(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

void Rk4::advance(const Rhs& rhs, std::span<double> y, double h, std::span<const double> f0)
{
    const std::size_t dim = y.size();
    if (f0.empty())
        rhs(y, k1_);
    else
        std::copy(f0.begin(), f0.end(), k1_.begin());

    for (std::size_t i = 0; i < dim; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
    rhs(tmp_, k2_);
    for (std::size_t i = 0; i < dim; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
    rhs(tmp_, k3_);
    for (std::size_t i = 0; i < dim; ++i) tmp_[i] = y[i] + h * k3_[i];
    rhs(tmp_, k4_);
    for (std::size_t i = 0; i < dim; ++i) y[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
}

State step(const Ensemble& ensemble, const State& state, double dt)
{
    if (!(dt > 0.0)) throw ParameterError("step size must be positive");
    check_dimensions(ensemble, state);
    auto y = pack(state);
    if (!all_finite(y)) throw IntegrationError("non-finite state", state.t);
    Rk4 rk(y.size());
    const Rhs rhs = [&ensemble](std::span<const double> in, std::span<double> out) {
        evaluate_field(ensemble, in, out);
    };
    rk.advance(rhs, y, dt);
    if (!all_finite(y)) throw IntegrationError("non-finite state after step", state.t + dt);
    return unpack(ensemble, state.t + dt, y);
}

Trajectory integrate(const Ensemble& ensemble, const State& initial, const IntegratorConfig& config)
{
    config.validate();
    check_dimensions(ensemble, initial);
    if (!ensemble.is_normalized())
        throw ParameterError("integrate expects a normalized ensemble (sum of omega = 0); call normalize_frame");

    const auto wall_start = std::chrono::steady_clock::now();
    const std::size_t n_osc = ensemble.size();

    Trajectory traj{ensemble, config, {}, 0.0, std::nullopt};
    const Rhs rhs = [&ensemble](std::span<const double> in, std::span<double> out) {
        evaluate_field(ensemble, in, out);
    };

    std::vector<double> y = pack(initial);
    std::vector<double> f(y.size());
    if (!all_finite(y)) {
        traj.fault = IntegrationFault{0.0, "non-finite initial state"};
        return traj;
    }
    rhs(y, f);

    EnergyLedger ledger(ensemble);
    double theta_unwrapped = 0.0;
    bool first_point = true;
    double energy_residual = 0.0;
    OrderParameterSample op;

    // Updates order parameter, unwrapped Theta and ledger at the current point.
    auto observe = [&](double t) {
        const std::span<const double> theta(y.data(), n_osc);
        const std::span<const double> v(y.data() + n_osc, y.size() - n_osc);
        op = order_parameter(theta);
        if (first_point) {
            theta_unwrapped = wrap_two_pi(op.Theta);
            first_point = false;
        } else if (op.R >= kUnwrapFloor) {
            theta_unwrapped = unwrap_next(theta_unwrapped, op.Theta);
        }
        energy_residual = ledger.push(t, theta, v, std::span<const double>(f.data(), n_osc), op);
    };
    auto record = [&](double t) {
        Sample s;
        s.state = unpack(ensemble, t, y);
        s.op = op;
        s.op.Theta = theta_unwrapped;
        s.momentum = momentum(ensemble, s.state);
        s.energy_residual = energy_residual;
        traj.samples.push_back(std::move(s));
    };

    observe(0.0);
    record(0.0);

    const double T = config.T;
    const double dt = config.dt;
    const auto total_steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    const double sample_interval = dt * static_cast<double>(config.sample_every);

    try {
        if (config.method == Method::rk4_fixed) {
            Rk4 rk(y.size());
            double t = 0.0;
            for (std::size_t k = 1; k <= total_steps; ++k) {
                const double t_next = std::min(static_cast<double>(k) * dt, T);
                rk.advance(rhs, y, t_next - t, f);
                if (!all_finite(y)) throw IntegrationError("non-finite state", t_next);
                t = t_next;
                rhs(y, f);
                observe(t);
                if (k % config.sample_every == 0 || k == total_steps) record(t);
            }
        } else {
            DormandPrince dp(y.size(), config.abs_tol, config.rel_tol);
            double t = 0.0;
            double h = dt;
            const auto total_samples = static_cast<std::size_t>(std::ceil(T / sample_interval - 1e-9));
            for (std::size_t s = 1; s <= total_samples; ++s) {
                const double t_sample = std::min(static_cast<double>(s) * sample_interval, T);
                while (t < t_sample) {
                    const bool last = h >= t_sample - t;
                    const double h_try = last ? t_sample - t : h;
                    double h_next = h_try;
                    if (dp.attempt(rhs, y, f, h_try, h_next)) {
                        t = last ? t_sample : t + h_try;
                        if (!all_finite(y)) throw IntegrationError("non-finite state", t);
                        observe(t);
                        if (!last || h_next < h) h = h_next;
                    } else {
                        h = h_next;
                        if (h < 1e-14 * std::max(1.0, t)) throw IntegrationError("step size underflow", t);
                    }
                }
                record(t_sample);
            }
        }
    } catch (const IntegrationError& err) {
        traj.fault = IntegrationFault{err.time(), err.what()};
    }

    traj.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return traj;
}

State random_initial_state(const Ensemble& ensemble, std::uint64_t seed)
{
    const std::size_t n_osc = ensemble.size();
    State s;
    s.theta.resize(n_osc);
    s.v.resize(ensemble.inertial_count());
    for (std::size_t j = 0; j < n_osc; ++j)
        s.theta[j] = 2.0 * std::numbers::pi * unit_double(splitmix64_at(seed, j));
    for (std::size_t i = 0; i < s.v.size(); ++i)
        s.v[i] = -1.0 + 2.0 * unit_double(splitmix64_at(seed, n_osc + i));
    return s;
}

Crossing locate_crossing(const Rhs& rhs, std::span<const double> y0, std::size_t index, double target,
                         const CrossingOptions& options)
{
    if (!(options.dt > 0.0)) throw ParameterError("crossing search needs a positive step");
    if (index >= y0.size()) throw ParameterError("crossing coordinate out of range");

    Crossing result;
    std::vector<double> y(y0.begin(), y0.end());
    if (y[index] >= target) {
        result.y = y;
        return result;
    }

    Rk4 rk(y.size());
    std::vector<double> start(y.size());
    std::vector<double> f0(y.size());
    std::vector<double> probe(y.size());
    double t = 0.0;
    while (t < options.max_time) {
        start = y;
        rhs(start, f0);
        rk.advance(rhs, y, options.dt, f0);
        if (!all_finite(y)) throw IntegrationError("non-finite state during crossing search", t + options.dt);

        if (y[index] >= target) {
            // Bisect on the sub-step length within [0, dt]; `probe` always holds the state
            // reached with sub-step `h_best`.
            double lo = 0.0;
            double hi = options.dt;
            double h_best = hi;
            probe = y;
            int iterations = 0;
            while (std::abs(probe[index] - target) > options.tolerance && iterations < options.max_bisections) {
                const double mid = 0.5 * (lo + hi);
                probe = start;
                rk.advance(rhs, probe, mid, f0);
                if (probe[index] >= target)
                    hi = mid;
                else
                    lo = mid;
                h_best = mid;
                ++iterations;
            }
            if (std::abs(probe[index] - target) > options.tolerance && h_best != hi) {
                h_best = hi;
                probe = start;
                rk.advance(rhs, probe, hi, f0);
            }
            result.status = CrossingStatus::found;
            result.time = t + h_best;
            result.y = probe;
            result.bisection_steps = iterations;
            return result;
        }
        t += options.dt;
        if (options.stop && options.stop(y)) {
            result.status = CrossingStatus::stopped;
            result.time = t;
            result.y = y;
            return result;
        }
    }
    result.time = t;
    result.y = y;
    return result;
}

Crossing locate_crossing(const Ensemble& ensemble, const State& state, std::size_t oscillator, double target,
                         const CrossingOptions& options)
{
    check_dimensions(ensemble, state);
    if (oscillator >= ensemble.size()) throw ParameterError("oscillator index out of range");
    const Rhs rhs = [&ensemble](std::span<const double> in, std::span<double> out) {
        evaluate_field(ensemble, in, out);
    };
    return locate_crossing(rhs, pack(state), oscillator, target, options);
}

} // namespace hkflow
