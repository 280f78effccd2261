#include "hkflow/equilibria.hpp"

#include "hkflow/diagnostics.hpp"
#include "hkflow/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hkflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRootMerge = 1e-9;
constexpr double kClassMerge = 1e-8;
constexpr double kInvariantTol = 1e-9;

double root_term(double omega, double x)
{
    if (omega == 0.0) return 1.0;
    const double q = omega / x;
    return std::sqrt(std::max(0.0, 1.0 - q * q));
}

double scale_of(const Ensemble& e)
{
    return std::max(1.0, e.coupling());
}

bool zero_frequencies(const Ensemble& e)
{
    return e.omega_max() <= 1e-12 * scale_of(e);
}

// Bisection on a bracket [lo, hi] with h(lo) and h(hi) of opposite sign.
template <class F>
double bisect(const F& h, double lo, double hi, double h_lo)
{
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double h_mid = h(mid);
        if (h_mid == 0.0) return mid;
        if ((h_mid < 0.0) == (h_lo < 0.0)) {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }
    return std::abs(h(lo)) <= std::abs(h(hi)) ? lo : hi;
}

// Golden-section minimisation of |h| on [lo, hi].
template <class F>
double minimise_abs(const F& h, double lo, double hi)
{
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo;
    double b = hi;
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = std::abs(h(c));
    double fd = std::abs(h(d));
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = std::abs(h(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = std::abs(h(d));
        }
    }
    return fc < fd ? c : d;
}

// Roots from H sampled on a uniform grid xs (values hs).
std::vector<double> refine_roots(const Ensemble& e, std::span<const int> sigma, std::span<const double> xs,
                                 std::span<const double> hs)
{
    const auto h = [&](double x) { return h_sigma(e, sigma, x); };
    const double tangency_tol = 1e-12 * scale_of(e);
    const double candidate_tol = 1e-4 * scale_of(e);
    const std::size_t last = xs.size() - 1;

    std::vector<double> roots;
    for (std::size_t i = 0; i <= last; ++i) {
        if (hs[i] == 0.0) roots.push_back(xs[i]);
        if (i < last && hs[i] != 0.0 && hs[i + 1] != 0.0 && (hs[i] < 0.0) != (hs[i + 1] < 0.0))
            roots.push_back(bisect(h, xs[i], xs[i + 1], hs[i]));
    }
    // Endpoints: tangential contact with the axis.
    if (hs[0] != 0.0 && std::abs(hs[0]) <= tangency_tol) roots.push_back(xs[0]);
    if (hs[last] != 0.0 && std::abs(hs[last]) <= tangency_tol) roots.push_back(xs[last]);
    // Interior double roots: local minima of |H| without a sign change.
    for (std::size_t i = 1; i < last; ++i) {
        const double a = std::abs(hs[i - 1]);
        const double b = std::abs(hs[i]);
        const double c = std::abs(hs[i + 1]);
        if (b > candidate_tol || b > a || b > c) continue;
        if ((hs[i - 1] < 0.0) != (hs[i] < 0.0) || (hs[i] < 0.0) != (hs[i + 1] < 0.0)) continue;
        const double x = minimise_abs(h, xs[i - 1], xs[i + 1]);
        if (std::abs(h(x)) <= tangency_tol) roots.push_back(x);
    }

    std::sort(roots.begin(), roots.end());
    std::vector<double> merged;
    for (double x : roots)
        if (merged.empty() || x - merged.back() > kRootMerge) merged.push_back(x);
    return merged;
}

std::vector<double> grid_points(double lo, double hi, std::size_t cells)
{
    std::vector<double> xs(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cells);
    xs[cells] = hi;
    return xs;
}

bool same_deltas(std::span<const double> a, std::span<const double> b, double tol)
{
    for (std::size_t j = 0; j < a.size(); ++j)
        if (circle_distance(a[j], b[j]) > tol) return false;
    return true;
}

EquilibriumClass degenerate_class(const Ensemble& e, std::span<const double> psi)
{
    EquilibriumClass cls;
    cls.degenerate = true;
    cls.r = order_parameter(psi).R;
    cls.delta = delta_of(psi);
    cls.representative.resize(psi.size());
    cls.sigma.resize(psi.size());
    for (std::size_t j = 0; j < psi.size(); ++j) {
        cls.representative[j] = -cls.delta[j];
        cls.sigma[j] = std::cos(cls.delta[j]) >= 0.0 ? 1 : -1;
    }
    const auto g = stationarity_residual(e, cls.representative);
    for (double x : g) cls.residual = std::max(cls.residual, std::abs(x));
    return cls;
}

} // namespace

double h_sigma(const Ensemble& ensemble, std::span<const int> sigma, double x)
{
    const auto omega = ensemble.omega();
    double sum = 0.0;
    for (std::size_t j = 0; j < omega.size(); ++j) sum += sigma[j] * root_term(omega[j], x);
    return x - ensemble.coupling() / static_cast<double>(omega.size()) * sum;
}

std::vector<double> solve_h_sigma(const Ensemble& ensemble, std::span<const int> sigma, std::size_t subdivisions)
{
    if (sigma.size() != ensemble.size()) throw ParameterError("sign vector must have N entries");
    if (subdivisions < 2) throw ParameterError("need at least two subdivisions");
    const double lo = ensemble.omega_max();
    const double hi = ensemble.coupling();
    if (hi < lo) return {};  // r <= 1 and |sin| <= 1 leave no solution

    const auto xs = grid_points(lo, hi, subdivisions);
    std::vector<double> hs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) hs[i] = h_sigma(ensemble, sigma, xs[i]);
    return refine_roots(ensemble, sigma, xs, hs);
}

Reconstruction reconstruct_phases(const Ensemble& ensemble, double r, std::span<const int> sigma)
{
    const std::size_t n_osc = ensemble.size();
    if (sigma.size() != n_osc) throw ParameterError("sign vector must have N entries");
    if (!(r > 1e-12)) return {std::nullopt, "order parameter r must be positive"};
    if (r > 1.0 + 1e-12) return {std::nullopt, "order parameter r exceeds 1"};

    const auto omega = ensemble.omega();
    const double x = ensemble.coupling() * r;
    EquilibriumClass cls;
    cls.r = r;
    cls.sigma.assign(sigma.begin(), sigma.end());
    cls.delta.resize(n_osc);
    cls.representative.resize(n_osc);

    double sum_c = 0.0;
    double sum_s = 0.0;
    for (std::size_t j = 0; j < n_osc; ++j) {
        double s = omega[j] == 0.0 ? 0.0 : -omega[j] / x;
        if (std::abs(s) > 1.0 + 1e-12)
            return {std::nullopt, "|omega_" + std::to_string(j + 1) + " / (lambda r)| exceeds 1"};
        s = std::clamp(s, -1.0, 1.0);
        const double c = sigma[j] * std::sqrt(1.0 - s * s);
        cls.delta[j] = wrap_pi(std::atan2(s, c));
        cls.representative[j] = -cls.delta[j];
        sum_c += c;
        sum_s += s;

        const double sin_err = std::abs(std::sin(cls.delta[j]) - s);
        const double cos_err = std::abs(std::cos(cls.delta[j]) - c);
        if (sin_err > 1e-10 || cos_err > 1e-10)
            return {std::nullopt, "angle reconstruction failed for oscillator " + std::to_string(j + 1)};
    }
    const double n = static_cast<double>(n_osc);
    if (std::abs(sum_c - r * n) > kInvariantTol) return {std::nullopt, "self-consistency sum c_j = rN violated"};
    if (std::abs(sum_s) > kInvariantTol) return {std::nullopt, "sum s_j = 0 violated"};

    const auto g = stationarity_residual(ensemble, cls.representative);
    for (double v : g) cls.residual = std::max(cls.residual, std::abs(v));
    if (cls.residual > kInvariantTol) return {std::nullopt, "stationarity residual above 1e-9"};
    return {std::move(cls), {}};
}

EquilibriumSet enumerate_equilibria(const Ensemble& ensemble, const EnumerationOptions& options)
{
    const std::size_t n_osc = ensemble.size();
    if (n_osc > options.max_oscillators)
        throw ParameterError("enumeration sweeps 2^N sign vectors and is limited to N <= " +
                             std::to_string(options.max_oscillators) + "; got N = " + std::to_string(n_osc) +
                             ". Reduce N or use brute-force continuation on a subsystem.");
    if (!ensemble.is_normalized())
        throw ParameterError("enumerate_equilibria expects a normalized ensemble (sum of omega = 0)");

    EquilibriumSet result;
    const double lo = ensemble.omega_max();
    const double hi = ensemble.coupling();
    if (hi < lo) {
        result.note = "no solution: lambda < omega_M";
        return result;
    }

    // Sample every H_sigma on one grid. Sign vectors are visited in Gray-code order so each
    // one differs from the previous in a single entry and the sums update in O(grid).
    const auto xs = grid_points(lo, hi, options.subdivisions);
    const std::size_t m = xs.size();
    const auto omega = ensemble.omega();
    std::vector<std::vector<double>> terms(n_osc, std::vector<double>(m));
    for (std::size_t j = 0; j < n_osc; ++j)
        for (std::size_t i = 0; i < m; ++i) terms[j][i] = root_term(omega[j], xs[i]);

    std::vector<int> sigma(n_osc, 1);
    std::vector<double> sums(m, 0.0);
    for (std::size_t j = 0; j < n_osc; ++j)
        for (std::size_t i = 0; i < m; ++i) sums[i] += terms[j][i];
    std::vector<double> hs(m);
    const double k = ensemble.coupling() / static_cast<double>(n_osc);

    std::vector<EquilibriumClass> candidates;
    const std::uint64_t total = std::uint64_t{1} << n_osc;
    std::size_t plus = n_osc;
    for (std::uint64_t g = 0; g < total; ++g) {
        if (g > 0) {
            const auto flip = static_cast<std::size_t>(std::countr_zero(g));
            sigma[flip] = -sigma[flip];
            plus = sigma[flip] > 0 ? plus + 1 : plus - 1;
            const double sign = 2.0 * sigma[flip];
            for (std::size_t i = 0; i < m; ++i) sums[i] += sign * terms[flip][i];
        }
        // H >= x - k * (#plus) > 0 on the whole interval: nothing to find.
        if (k * static_cast<double>(plus) < lo) continue;
        for (std::size_t i = 0; i < m; ++i) hs[i] = xs[i] - k * sums[i];
        for (double x : refine_roots(ensemble, sigma, xs, hs)) {
            auto rec = reconstruct_phases(ensemble, x / ensemble.coupling(), sigma);
            if (rec.cls) candidates.push_back(std::move(*rec.cls));
        }
    }

    if (zero_frequencies(ensemble)) {
        if (n_osc <= 3) {
            for (const auto& psi : brute_force_equilibria(ensemble, options.degenerate_grid))
                if (order_parameter(psi).R < 1e-6) candidates.push_back(degenerate_class(ensemble, psi));
        } else {
            result.degenerate_family = true;
            result.note = "identical frequencies with N >= 4: r = 0 configurations may form a continuum "
                          "and are not listed";
        }
    }

    std::sort(candidates.begin(), candidates.end(), [](const EquilibriumClass& a, const EquilibriumClass& b) {
        if (a.r != b.r) return a.r > b.r;
        return std::lexicographical_compare(a.delta.begin(), a.delta.end(), b.delta.begin(), b.delta.end());
    });
    for (auto& c : candidates) {
        const bool duplicate = std::any_of(result.classes.begin(), result.classes.end(), [&](const auto& kept) {
            return same_deltas(kept.delta, c.delta, kClassMerge);
        });
        if (!duplicate) result.classes.push_back(std::move(c));
    }
    return result;
}

std::vector<double> gauge_anchor(const EquilibriumClass& cls, const Ensemble& ensemble, double c0)
{
    const auto damping = ensemble.damping();
    double weighted = 0.0;
    for (std::size_t j = 0; j < cls.representative.size(); ++j) weighted += damping[j] * cls.representative[j];
    const double shift = (c0 - weighted) / ensemble.damping_sum();
    std::vector<double> out = cls.representative;
    for (double& x : out) x += shift;
    return out;
}

std::vector<double> anchor_near(const EquilibriumClass& cls, const Ensemble& ensemble, double c0,
                                std::span<const double> reference)
{
    EquilibriumClass lifted = cls;
    auto& psi = lifted.representative;
    for (std::size_t j = 1; j < psi.size(); ++j) {
        const double mismatch = (reference[j] - reference[0]) - (psi[j] - psi[0]);
        psi[j] += kTwoPi * std::round(mismatch / kTwoPi);
    }
    return gauge_anchor(lifted, ensemble, c0);
}

std::optional<NearestClass> nearest_class(const EquilibriumSet& set, const Ensemble& ensemble, double c0,
                                          std::span<const double> theta)
{
    std::optional<NearestClass> best;
    for (std::size_t i = 0; i < set.classes.size(); ++i) {
        auto anchored = anchor_near(set.classes[i], ensemble, c0, theta);
        double dist = 0.0;
        for (std::size_t j = 0; j < theta.size(); ++j) dist = std::max(dist, std::abs(theta[j] - anchored[j]));
        if (!best || dist < best->distance) best = NearestClass{i, dist, std::move(anchored)};
    }
    return best;
}

std::vector<double> delta_of(std::span<const double> psi)
{
    const auto op = order_parameter(psi);
    std::vector<double> delta(psi.size());
    if (op.R < 1e-9) {
        for (std::size_t j = 0; j < psi.size(); ++j) delta[j] = wrap_pi(psi[0] - psi[j]);
    } else {
        for (std::size_t j = 0; j < psi.size(); ++j) delta[j] = wrap_pi(op.Theta - psi[j]);
    }
    return delta;
}

std::vector<std::vector<double>> brute_force_equilibria(const Ensemble& ensemble, std::size_t grid_per_axis)
{
    const std::size_t n_osc = ensemble.size();
    if (n_osc > 4) throw ParameterError("brute-force oracle is limited to N <= 4");
    if (grid_per_axis < 3) throw ParameterError("brute-force grid needs at least 3 points per axis");

    const double accept_tol = 1e-10;
    if (n_osc == 1) {
        if (std::abs(ensemble.omega()[0]) <= accept_tol) return {{0.0}};
        return {};
    }

    const std::size_t dims = n_osc - 1;
    std::size_t cells = 1;
    for (std::size_t d = 0; d < dims; ++d) cells *= grid_per_axis;
    const double step = kTwoPi / static_cast<double>(grid_per_axis);

    auto config_of = [&](std::size_t cell) {
        std::vector<double> psi(n_osc, 0.0);
        for (std::size_t d = 0; d < dims; ++d) {
            psi[d + 1] = step * static_cast<double>(cell % grid_per_axis);
            cell /= grid_per_axis;
        }
        return psi;
    };
    auto objective = [&](std::span<const double> psi) {
        const auto g = stationarity_residual(ensemble, psi);
        double f = 0.0;
        for (std::size_t j = 1; j < n_osc; ++j) f += g[j] * g[j];
        return f;
    };

    std::vector<double> values(cells);
    for (std::size_t c = 0; c < cells; ++c) values[c] = objective(config_of(c));

    // Neighbour offsets in {-1, 0, 1}^dims minus the origin, periodic.
    std::size_t n_offsets = 1;
    for (std::size_t d = 0; d < dims; ++d) n_offsets *= 3;
    auto is_local_min = [&](std::size_t cell) {
        std::vector<std::size_t> idx(dims);
        std::size_t rest = cell;
        for (std::size_t d = 0; d < dims; ++d) {
            idx[d] = rest % grid_per_axis;
            rest /= grid_per_axis;
        }
        for (std::size_t o = 0; o < n_offsets; ++o) {
            std::size_t code = o;
            std::size_t neighbour = 0;
            std::size_t stride = 1;
            bool origin = true;
            for (std::size_t d = 0; d < dims; ++d) {
                const int shift = static_cast<int>(code % 3) - 1;
                code /= 3;
                if (shift != 0) origin = false;
                const std::size_t k =
                    (idx[d] + grid_per_axis + static_cast<std::size_t>(shift + 1) - 1) % grid_per_axis;
                neighbour += k * stride;
                stride *= grid_per_axis;
            }
            if (!origin && values[neighbour] < values[cell]) return false;
        }
        return true;
    };

    const double lambda_n = ensemble.coupling() / static_cast<double>(n_osc);
    std::vector<std::vector<double>> roots;
    for (std::size_t c = 0; c < cells; ++c) {
        if (!is_local_min(c)) continue;
        auto psi = config_of(c);

        // Damped Newton on g_2..g_N with psi_1 held at 0.
        auto g = stationarity_residual(ensemble, psi);
        auto norm = [&](const std::vector<double>& gv) {
            double s = 0.0;
            for (std::size_t j = 1; j < n_osc; ++j) s = std::max(s, std::abs(gv[j]));
            return s;
        };
        double current = norm(g);
        for (int it = 0; it < 100 && current > 1e-14; ++it) {
            Eigen::MatrixXd jac(dims, dims);
            Eigen::VectorXd rhs(dims);
            for (std::size_t a = 0; a < dims; ++a) {
                const std::size_t j = a + 1;
                rhs(static_cast<Eigen::Index>(a)) = -g[j];
                for (std::size_t b = 0; b < dims; ++b) {
                    const std::size_t l = b + 1;
                    double entry;
                    if (l == j) {
                        entry = 0.0;
                        for (std::size_t q = 0; q < n_osc; ++q)
                            if (q != j) entry -= lambda_n * std::cos(psi[q] - psi[j]);
                    } else {
                        entry = lambda_n * std::cos(psi[l] - psi[j]);
                    }
                    jac(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = entry;
                }
            }
            const Eigen::VectorXd delta = jac.completeOrthogonalDecomposition().solve(rhs);
            double scale = 1.0;
            bool improved = false;
            for (int half = 0; half < 40; ++half) {
                auto trial = psi;
                for (std::size_t a = 0; a < dims; ++a) trial[a + 1] += scale * delta(static_cast<Eigen::Index>(a));
                auto g_trial = stationarity_residual(ensemble, trial);
                const double n_trial = norm(g_trial);
                if (n_trial < current) {
                    psi = std::move(trial);
                    g = std::move(g_trial);
                    current = n_trial;
                    improved = true;
                    break;
                }
                scale *= 0.5;
            }
            if (!improved) break;
        }

        double full = 0.0;
        for (double x : g) full = std::max(full, std::abs(x));
        if (full > accept_tol) continue;

        for (std::size_t j = 1; j < n_osc; ++j) psi[j] = wrap_two_pi(psi[j]);
        const bool duplicate = std::any_of(roots.begin(), roots.end(), [&](const auto& kept) {
            return same_deltas(kept, psi, 1e-7);
        });
        if (!duplicate) roots.push_back(std::move(psi));
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

OracleComparison compare_with_oracle(const EquilibriumSet& set, const std::vector<std::vector<double>>& oracle,
                                     double tolerance)
{
    OracleComparison cmp;
    cmp.enumerated = set.classes.size();
    cmp.oracle = oracle.size();
    std::vector<bool> used(set.classes.size(), false);
    for (const auto& psi : oracle) {
        const auto delta = delta_of(psi);
        std::optional<std::size_t> best;
        double best_err = 0.0;
        for (std::size_t i = 0; i < set.classes.size(); ++i) {
            if (used[i]) continue;
            double err = 0.0;
            for (std::size_t j = 0; j < delta.size(); ++j)
                err = std::max(err, circle_distance(delta[j], set.classes[i].delta[j]));
            if (!best || err < best_err) {
                best = i;
                best_err = err;
            }
        }
        if (best && best_err <= tolerance) {
            used[*best] = true;
            ++cmp.matched;
            cmp.max_delta_error = std::max(cmp.max_delta_error, best_err);
        }
    }
    cmp.agree = cmp.enumerated == cmp.oracle && cmp.matched == cmp.oracle;
    return cmp;
}

} // namespace hkflow
