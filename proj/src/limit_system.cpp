#include "hkflow/limit_system.hpp"

#include "hkflow/diagnostics.hpp"
#include "hkflow/errors.hpp"
#include "hkflow/integrator.hpp"
#include "hkflow/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

namespace hkflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool at_threshold(double lamR, double omega)
{
    return std::abs(lamR - std::abs(omega)) <= 1e-12 * std::max(1.0, std::abs(omega));
}

// Rest angles of omega + lamR sin(Theta - theta) = 0, without any condition on m.
std::vector<double> rest_angles(double omega, double lamR, double Theta)
{
    if (!(lamR > 0.0)) return {};
    if (lamR < std::abs(omega) && !at_threshold(lamR, omega)) return {};
    const double a = std::asin(std::clamp(-omega / lamR, -1.0, 1.0));  // Theta - theta
    std::vector<double> out{wrap_pi(Theta - a)};
    const double second = wrap_pi(Theta - (kPi - a));
    if (circle_distance(second, out[0]) > 1e-12) out.push_back(second);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

void LimitParams::validate() const
{
    if (!(m > 0.0)) throw ParameterError("limit system needs m > 0");
    if (!(d > 0.0)) throw ParameterError("limit system needs d > 0");
    if (!(lamR >= 0.0)) throw ParameterError("limit system needs lamR >= 0");
    if (!std::isfinite(omega) || !std::isfinite(Theta_star) || !std::isfinite(lamR))
        throw ParameterError("limit system parameters must be finite");
}

LimitField limit_vector_field(const LimitParams& p, double v, double theta)
{
    return {(-p.d * v + p.omega + p.lamR * std::sin(p.Theta_star - theta)) / p.m, v};
}

std::vector<double> limit_equilibria(const LimitParams& p)
{
    p.validate();
    return rest_angles(p.omega, p.lamR, p.Theta_star);
}

double divergence_check(const LimitParams& p, std::size_t sample_count, double h, std::uint64_t seed)
{
    p.validate();
    if (!(h > 0.0)) throw ParameterError("divergence_check needs h > 0");
    CounterRng rng(seed);
    const double expected = -p.d / p.m;
    double worst = 0.0;
    for (std::size_t k = 0; k < sample_count; ++k) {
        const double v = rng.uniform(-10.0, 10.0);
        const double theta = rng.uniform(-kPi, kPi);
        const double dv = (limit_vector_field(p, v + h, theta).v_dot - limit_vector_field(p, v - h, theta).v_dot) /
                          (2.0 * h);
        const double dth =
            (limit_vector_field(p, v, theta + h).theta_dot - limit_vector_field(p, v, theta - h).theta_dot) /
            (2.0 * h);
        worst = std::max(worst, std::abs(dv + dth - expected));
    }
    return worst;
}

double lyapunov_L(const LimitParams& p, double v, double theta)
{
    return 0.5 * p.m * v * v - p.omega * theta - p.lamR * std::cos(p.Theta_star - theta);
}

double poincare_anchor(const LimitParams& p)
{
    p.validate();
    if (!(p.lamR > 0.0) || (p.lamR < std::abs(p.omega) && !at_threshold(p.lamR, p.omega)))
        throw ParameterError("drift regime: lamR < |omega| leaves no section anchor");
    return wrap_two_pi(p.Theta_star + std::asin(std::clamp(p.omega / p.lamR, -1.0, 1.0)));
}

std::string_view outcome_name(PoincareOutcome outcome)
{
    switch (outcome) {
    case PoincareOutcome::crossed: return "crossed";
    case PoincareOutcome::captured: return "captured";
    case PoincareOutcome::horizon: return "horizon";
    case PoincareOutcome::refused: return "refused";
    }
    return "refused";
}

PoincareResult poincare_return(const LimitParams& p, double v0, const PoincareOptions& options)
{
    p.validate();
    PoincareResult out;
    out.v0 = v0;
    if (!(v0 > 0.0)) {
        out.reason = "v0 must be positive";
        return out;
    }
    if (!(p.lamR > 0.0) || (p.lamR < std::abs(p.omega) && !at_threshold(p.lamR, p.omega))) {
        out.reason = "drift regime: lamR < |omega|, the section has no anchor";
        return out;
    }
    out.theta0 = poincare_anchor(p);

    // y = (v, theta, int v^2)
    const Rhs rhs = [&p](std::span<const double> y, std::span<double> dy) {
        const auto f = limit_vector_field(p, y[0], y[1]);
        dy[0] = f.v_dot;
        dy[1] = f.theta_dot;
        dy[2] = y[0] * y[0];
    };
    CrossingOptions copt;
    copt.dt = options.dt;
    copt.max_time = options.horizon;
    copt.tolerance = options.tolerance;
    copt.stop = [](std::span<const double> y) { return y[0] <= 0.0; };

    const std::vector<double> y0{v0, out.theta0, 0.0};
    const Crossing c = locate_crossing(rhs, y0, 1, out.theta0 + kTwoPi, copt);
    switch (c.status) {
    case CrossingStatus::found: {
        out.crossed = true;
        out.outcome = PoincareOutcome::crossed;
        out.tau = c.time;
        out.P = c.y[0];
        const double predicted = 4.0 * kPi * p.omega / p.m - 2.0 * p.d / p.m * c.y[2];
        out.energy_residual = (out.P * out.P - v0 * v0) - predicted;
        out.exp_identity_residual = out.P - std::exp(p.d / p.m * out.tau) * v0;
        break;
    }
    case CrossingStatus::stopped:
        out.outcome = PoincareOutcome::captured;
        out.tau = c.time;
        out.reason = "velocity reached 0 before the section";
        break;
    case CrossingStatus::not_found:
        out.outcome = PoincareOutcome::horizon;
        out.tau = c.time;
        out.reason = "section not reached within the horizon";
        break;
    }
    return out;
}

std::vector<PoincareResult> poincare_sweep(const LimitParams& p, const std::vector<double>& v0_grid,
                                           const PoincareOptions& options, unsigned threads)
{
    p.validate();
    std::vector<PoincareResult> out(v0_grid.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(v0_grid.size(), 1)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < v0_grid.size(); i = next++) out[i] = poincare_return(p, v0_grid[i], options);
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return out;
}

AutonomyReport autonomy_audit(const Trajectory& trajectory, std::size_t oscillator, const Tolerances& tol)
{
    const Ensemble& e = trajectory.ensemble;
    if (oscillator >= e.size()) throw ParameterError("oscillator index out of range");
    AutonomyReport report;
    report.oscillator = oscillator;

    const OpssResult opss = detect_opss(trajectory, tol);
    if (opss.verdict != Verdict::yes) {
        report.reason = "order parameter has not settled (OPSS verdict " + std::string(verdict_name(opss.verdict)) + ")";
        return report;
    }
    report.applicable = true;
    report.R_star = opss.R_star;
    report.Theta_star = opss.Theta_star;

    const auto& samples = trajectory.samples;
    for (std::size_t k = tail_begin(trajectory, tol.tail_fraction); k < samples.size(); ++k) {
        const auto& op = samples[k].op;
        report.tail_deviation =
            std::max(report.tail_deviation, std::abs(op.R - report.R_star) + std::abs(op.Theta - report.Theta_star));
    }

    const auto angles = rest_angles(e.omega()[oscillator], e.coupling() * report.R_star, report.Theta_star);
    if (angles.empty()) {
        report.applicable = false;
        report.reason = "limit system has no rest point (lambda R* < |omega_j|)";
        return report;
    }
    const State& last = samples.back().state;
    const double v = frequencies(e, last)[oscillator];
    double best = std::numeric_limits<double>::infinity();
    for (double a : angles) {
        const double dist = std::hypot(v, circle_distance(last.theta[oscillator], a));
        if (dist < best) {
            best = dist;
            report.nearest_equilibrium = a;
        }
    }
    report.equilibrium_distance = best;
    return report;
}

} // namespace hkflow
