#include "hkflow/diagnostics.hpp"

#include "hkflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hkflow {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
} // namespace

OrderParameterSample order_parameter(std::span<const double> theta)
{
    double re = 0.0;
    double im = 0.0;
    for (double th : theta) {
        re += std::cos(th);
        im += std::sin(th);
    }
    const double inv_n = 1.0 / static_cast<double>(theta.size());
    re *= inv_n;
    im *= inv_n;
    return {std::hypot(re, im), std::atan2(im, re), re, im};
}

double wrap_pi(double x)
{
    double r = std::remainder(x, kTwoPi);  // [-pi, pi]
    if (r <= -kPi) r += kTwoPi;
    return r;
}

double wrap_two_pi(double x)
{
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r -= kTwoPi;
    return r;
}

double circle_distance(double a, double b)
{
    return std::abs(wrap_pi(a - b));
}

double unwrap_next(double previous_unwrapped, double angle)
{
    return previous_unwrapped + wrap_pi(angle - previous_unwrapped);
}

std::vector<double> unwrap_angle_series(std::span<const double> angles,
                                        std::span<const double> magnitudes,
                                        double floor)
{
    std::vector<double> out;
    out.reserve(angles.size());
    const bool gated = !magnitudes.empty();
    for (std::size_t i = 0; i < angles.size(); ++i) {
        if (i == 0) {
            out.push_back(wrap_two_pi(angles[0]));
        } else if (gated && magnitudes[i] < floor) {
            out.push_back(out.back());
        } else {
            out.push_back(unwrap_next(out.back(), angles[i]));
        }
    }
    return out;
}

double phase_diameter(std::span<const double> theta)
{
    if (theta.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(theta.begin(), theta.end());
    return *hi - *lo;
}

EnergyLedger::EnergyLedger(const Ensemble& ensemble) : ensemble_(ensemble) {}

double EnergyLedger::kinetic(std::span<const double> v) const
{
    const auto inertia = ensemble_.inertia();
    double k = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) k += 0.5 * inertia[ensemble_.first_order_count() + i] * v[i] * v[i];
    return k;
}

namespace {

// |sum_j e^{i theta_j}|^2 = N + 2 sum_{j<k} cos(theta_k - theta_j)
double pair_cosines(const OrderParameterSample& op, std::size_t n_osc)
{
    const double n = static_cast<double>(n_osc);
    return 0.5 * (n * n * (op.Z_re * op.Z_re + op.Z_im * op.Z_im) - n);
}

} // namespace

double EnergyLedger::push(const State& state, std::span<const double> theta_dot)
{
    return push(state.t, state.theta, state.v, theta_dot, order_parameter(state.theta));
}

double EnergyLedger::push(double t, std::span<const double> theta, std::span<const double> v,
                          std::span<const double> theta_dot, const OrderParameterSample& op)
{
    const auto damping = ensemble_.damping();
    double rate = 0.0;
    for (std::size_t j = 0; j < theta_dot.size(); ++j) rate += damping[j] * theta_dot[j] * theta_dot[j];

    if (!started_) {
        started_ = true;
        t_prev_ = t;
        dissipation_rate_prev_ = rate;
        kinetic0_ = kinetic(v);
        cosines0_ = pair_cosines(op, theta.size());
        theta0_.assign(theta.begin(), theta.end());
        return 0.0;
    }

    dissipated_ += 0.5 * (t - t_prev_) * (rate + dissipation_rate_prev_);
    t_prev_ = t;
    dissipation_rate_prev_ = rate;

    const auto omega = ensemble_.omega();
    double work = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) work += omega[j] * (theta[j] - theta0_[j]);

    const double coupling_term = ensemble_.coupling() / static_cast<double>(ensemble_.size()) *
                                 (pair_cosines(op, theta.size()) - cosines0_);
    const double lhs = kinetic(v) + dissipated_;
    const double rhs = kinetic0_ + work + coupling_term;
    return lhs - rhs;
}

std::vector<double> energy_ledger(const Trajectory& trajectory)
{
    std::vector<double> out;
    out.reserve(trajectory.samples.size());
    EnergyLedger ledger(trajectory.ensemble);
    for (const auto& sample : trajectory.samples)
        out.push_back(ledger.push(sample.state, frequencies(trajectory.ensemble, sample.state)));
    return out;
}

LkResult lk_check(std::span<const double> f, double h)
{
    if (f.size() < 5) throw ParameterError("lk_check needs at least 5 samples");
    if (!(h > 0.0)) throw ParameterError("lk_check needs a positive spacing");

    LkResult r;
    for (double x : f) r.sup_f = std::max(r.sup_f, std::abs(x));
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
        r.sup_df = std::max(r.sup_df, std::abs(f[i + 1] - f[i - 1]) / (2.0 * h));
        r.sup_d2f = std::max(r.sup_d2f, std::abs(f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h));
    }
    const double slack = 10.0 * h * h;
    r.satisfied = r.sup_df - slack <= 2.0 * std::sqrt((r.sup_f + slack) * (r.sup_d2f + slack));
    return r;
}

double AprioriReport::worst() const
{
    double w = -std::numeric_limits<double>::infinity();
    for (double x : worst_violation) w = std::max(w, x);
    return w;
}

double AprioriReport::worst_m_scaled() const
{
    double w = -std::numeric_limits<double>::infinity();
    for (double x : worst_violation_m_scaled) w = std::max(w, x);
    return w;
}

AprioriReport apriori_check(const Trajectory& trajectory)
{
    const Ensemble& e = trajectory.ensemble;
    const std::size_t n_osc = e.size();
    AprioriReport report;
    report.worst_violation.assign(n_osc, -std::numeric_limits<double>::infinity());
    report.worst_violation_m_scaled.assign(n_osc, -std::numeric_limits<double>::infinity());
    if (trajectory.samples.empty()) return report;

    const auto omega = e.omega();
    const auto damping = e.damping();
    const auto inertia = e.inertia();
    const double lambda = e.coupling();
    const State& first = trajectory.samples.front().state;

    for (const auto& sample : trajectory.samples) {
        const State& s = sample.state;
        const double elapsed = s.t - first.t;
        const auto freq = frequencies(e, s);
        for (std::size_t j = 0; j < n_osc; ++j) {
            const double forcing = std::abs(omega[j]) + lambda;
            double bound = forcing / damping[j];
            double bound_m = bound;
            if (e.is_inertial(j)) {
                const double decay = std::exp(-damping[j] * elapsed / inertia[j]);
                const double v0 = std::abs(first.v[j - e.first_order_count()]);
                bound = v0 * decay + forcing / damping[j] * (1.0 - decay);
                bound_m = v0 * decay + forcing / inertia[j] * (1.0 - decay);
            }
            const double observed = std::abs(freq[j]);
            report.worst_violation[j] = std::max(report.worst_violation[j], observed - bound);
            report.worst_violation_m_scaled[j] = std::max(report.worst_violation_m_scaled[j], observed - bound_m);
        }
    }
    return report;
}

} // namespace hkflow
