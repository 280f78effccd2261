#include "hkflow/classifier.hpp"

#include "hkflow/errors.hpp"
#include "hkflow/integrator.hpp"
#include "hkflow/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

namespace hkflow {

namespace {

bool zero_frequencies(const Ensemble& e)
{
    return e.omega_max() <= 1e-12 * std::max(1.0, e.coupling());
}

bool horizon_too_short(const Trajectory& traj)
{
    return traj.samples.size() < 2 || traj.end_time() < kMinHorizon;
}

Verdict three_way(double value, double yes_below, double no_above)
{
    if (value < yes_below) return Verdict::yes;
    if (value > no_above) return Verdict::no;
    return Verdict::inconclusive;
}

} // namespace

std::string_view verdict_name(Verdict verdict)
{
    switch (verdict) {
    case Verdict::yes: return "true";
    case Verdict::no: return "false";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::not_applicable: return "not_applicable";
    }
    return "inconclusive";
}

Verdict parse_verdict(std::string_view name)
{
    if (name == "true") return Verdict::yes;
    if (name == "false") return Verdict::no;
    if (name == "inconclusive") return Verdict::inconclusive;
    if (name == "not_applicable") return Verdict::not_applicable;
    throw ParameterError("unknown verdict '" + std::string(name) + "'");
}

void Tolerances::validate() const
{
    if (!(freq_tol > 0.0) || !(lock_var_tol > 0.0) || !(op_var_tol > 0.0) || !(opss_margin > 0.0) ||
        !(diameter_cap > 0.0))
        throw ParameterError("tolerances must be positive");
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw ParameterError("tail_fraction must lie in (0, 1)");
}

std::size_t tail_begin(const Trajectory& trajectory, double tail_fraction)
{
    const auto& s = trajectory.samples;
    if (s.size() < 2) return 0;
    const double t0 = s.front().state.t;
    const double start = trajectory.end_time() - tail_fraction * (trajectory.end_time() - t0);
    const auto it = std::lower_bound(s.begin(), s.end(), start,
                                     [](const Sample& a, double t) { return a.state.t < t; });
    const auto idx = static_cast<std::size_t>(it - s.begin());
    return std::min(idx, s.size() - 2);
}

FssResult detect_fss(const Trajectory& trajectory, const Tolerances& tol)
{
    FssResult r;
    if (horizon_too_short(trajectory)) return r;
    const auto& samples = trajectory.samples;
    for (std::size_t k = tail_begin(trajectory, tol.tail_fraction); k < samples.size(); ++k)
        for (double w : frequencies(trajectory.ensemble, samples[k].state))
            r.tail_max_frequency = std::max(r.tail_max_frequency, std::abs(w));
    r.verdict = three_way(r.tail_max_frequency, tol.freq_tol, kHysteresis * tol.freq_tol);
    return r;
}

PlsResult detect_pls(const Trajectory& trajectory, const Tolerances& tol)
{
    PlsResult r;
    if (trajectory.samples.empty()) return r;
    const auto& samples = trajectory.samples;
    for (const auto& s : samples) r.max_diameter = std::max(r.max_diameter, phase_diameter(s.state.theta));
    if (r.max_diameter > tol.diameter_cap) {
        r.verdict = Verdict::no;
        return r;
    }
    if (horizon_too_short(trajectory)) return r;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = tail_begin(trajectory, tol.tail_fraction); k < samples.size(); ++k) {
        const double d = phase_diameter(samples[k].state.theta);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    r.tail_diameter_spread = hi - lo;
    r.verdict = three_way(r.tail_diameter_spread, tol.lock_var_tol, kHysteresis * tol.lock_var_tol);
    return r;
}

FplsResult detect_fpls(const Trajectory& trajectory, const Tolerances& tol, const EquilibriumSet* equilibria)
{
    FplsResult r;
    if (horizon_too_short(trajectory)) return r;
    const auto& samples = trajectory.samples;
    const Ensemble& e = trajectory.ensemble;
    const std::size_t n_osc = e.size();
    const std::size_t begin = tail_begin(trajectory, tol.tail_fraction);

    for (std::size_t j = 0; j < n_osc; ++j) {
        for (std::size_t k = j + 1; k < n_osc; ++k) {
            double tv = 0.0;
            for (std::size_t s = begin + 1; s < samples.size(); ++s) {
                const auto& a = samples[s].state.theta;
                const auto& b = samples[s - 1].state.theta;
                tv += std::abs((a[j] - a[k]) - (b[j] - b[k]));
            }
            r.tail_variation = std::max(r.tail_variation, tv);
        }
    }
    const auto& last = samples.back();
    for (double g : stationarity_residual(e, last.state.theta))
        r.final_residual = std::max(r.final_residual, std::abs(g));

    if (equilibria != nullptr) {
        // At rest the momentum reduces to sum d_j theta_j, which fixes the gauge.
        if (auto nearest = nearest_class(*equilibria, e, samples.front().momentum, last.state.theta)) {
            r.nearest_class = nearest->index;
            r.nearest_distance = nearest->distance;
        }
    }

    const double residual_tol = 10.0 * tol.freq_tol;
    if (r.tail_variation < tol.lock_var_tol && r.final_residual < residual_tol)
        r.verdict = Verdict::yes;
    else if (r.tail_variation > kHysteresis * tol.lock_var_tol || r.final_residual > kHysteresis * residual_tol)
        r.verdict = Verdict::no;
    return r;
}

OpssResult detect_opss(const Trajectory& trajectory, const Tolerances& tol)
{
    OpssResult r;
    const Ensemble& e = trajectory.ensemble;
    r.threshold = e.coupling() > 0.0 ? e.omega_max() / e.coupling() : std::numeric_limits<double>::infinity();
    if (horizon_too_short(trajectory)) return r;
    const auto& samples = trajectory.samples;
    const std::size_t begin = tail_begin(trajectory, tol.tail_fraction);

    double re_lo = std::numeric_limits<double>::infinity(), re_hi = -re_lo;
    double im_lo = re_lo, im_hi = -re_lo;
    double sum_r = 0.0;
    double sum_theta = 0.0;
    for (std::size_t k = begin; k < samples.size(); ++k) {
        const auto& op = samples[k].op;
        re_lo = std::min(re_lo, op.Z_re);
        re_hi = std::max(re_hi, op.Z_re);
        im_lo = std::min(im_lo, op.Z_im);
        im_hi = std::max(im_hi, op.Z_im);
        sum_r += op.R;
        sum_theta += op.Theta;
    }
    const auto count = static_cast<double>(samples.size() - begin);
    r.tail_variation = std::max(re_hi - re_lo, im_hi - im_lo);
    r.R_star = sum_r / count;
    r.Theta_star = sum_theta / count;

    const bool steady = r.tail_variation < tol.op_var_tol;
    const bool large = r.R_star >= r.threshold - tol.opss_margin;
    if (steady && large)
        r.verdict = Verdict::yes;
    else if (r.tail_variation > kHysteresis * tol.op_var_tol ||
             r.R_star < r.threshold - kHysteresis * tol.opss_margin)
        r.verdict = Verdict::no;
    return r;
}

PssResult detect_pss(const Trajectory& trajectory, const Tolerances& tol)
{
    PssResult r;
    if (!zero_frequencies(trajectory.ensemble)) return r;
    r.verdict = Verdict::inconclusive;
    if (horizon_too_short(trajectory)) return r;
    const auto& samples = trajectory.samples;
    const std::size_t n_osc = trajectory.ensemble.size();
    for (std::size_t s = tail_begin(trajectory, tol.tail_fraction); s < samples.size(); ++s) {
        const auto& th = samples[s].state.theta;
        for (std::size_t j = 0; j < n_osc; ++j)
            for (std::size_t k = j + 1; k < n_osc; ++k)
                r.tail_max_spread = std::max(r.tail_max_spread, circle_distance(th[j], th[k]));
    }
    r.verdict = three_way(r.tail_max_spread, tol.lock_var_tol, kHysteresis * tol.lock_var_tol);
    return r;
}

std::array<Verdict, 4> ClassificationReport::theorem_verdicts() const
{
    return {fpls.verdict, pls.verdict, fss.verdict, opss.verdict};
}

bool ClassificationReport::disagreement() const
{
    const auto v = theorem_verdicts();
    if (!std::all_of(v.begin(), v.end(), decided)) return false;
    return !std::all_of(v.begin(), v.end(), [&](Verdict x) { return x == v[0]; });
}

ClassificationReport classify(const Trajectory& trajectory, const Tolerances& tol, const EquilibriumSet* equilibria)
{
    tol.validate();
    ClassificationReport report;
    report.fss = detect_fss(trajectory, tol);
    report.pls = detect_pls(trajectory, tol);
    report.fpls = detect_fpls(trajectory, tol, equilibria);
    report.opss = detect_opss(trajectory, tol);
    report.pss = detect_pss(trajectory, tol);

    if (report.fpls.verdict == Verdict::yes &&
        (report.pls.verdict != Verdict::yes || report.fss.verdict != Verdict::yes))
        report.fpls.verdict = Verdict::inconclusive;
    if (report.pss.verdict == Verdict::yes && report.fpls.verdict != Verdict::yes)
        report.pss.verdict = Verdict::inconclusive;
    return report;
}

SuiteKind parse_suite_kind(std::string_view name)
{
    if (name == "random") return SuiteKind::random;
    if (name == "drift") return SuiteKind::drift;
    if (name == "equilibrium") return SuiteKind::equilibrium;
    throw ParameterError("unknown suite kind '" + std::string(name) + "' (expected random, drift or equilibrium)");
}

namespace {

AuditCase draw_case(const SuiteRecipe& recipe, std::size_t id)
{
    CounterRng rng(splitmix64_at(recipe.seed, id));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const bool drift = recipe.kind == SuiteKind::drift;
        const auto n_osc = drift ? std::size_t{2}
                                 : static_cast<std::size_t>(rng.uniform_int(static_cast<long>(recipe.n_min),
                                                                            static_cast<long>(recipe.n_max)));
        const auto first_order =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(n_osc)));
        std::vector<double> m(n_osc, 0.0), d(n_osc), omega(n_osc);
        for (std::size_t j = 0; j < n_osc; ++j) {
            d[j] = rng.uniform(recipe.d_lo, recipe.d_hi);
            if (j >= first_order) m[j] = rng.uniform(recipe.m_lo, recipe.m_hi);
            omega[j] = rng.uniform(-1.0, 1.0);
        }
        const double u = rng.uniform(0.3, 1.0);
        const std::uint64_t state_seed = rng.next();

        auto raw = Ensemble::make(first_order, m, d, omega, 1.0);
        const Ensemble norm = normalize_frame(raw).ensemble;
        const double w = norm.omega_max();
        if (w < recipe.min_omega_max) continue;
        const double lambda = drift ? u * 2.0 * w * (1.0 - recipe.drift_margin) : recipe.lambda_factor * w;
        Ensemble ens = norm.with_coupling(lambda);

        State initial;
        if (recipe.kind == SuiteKind::equilibrium) {
            const auto set = enumerate_equilibria(ens);
            if (set.classes.empty()) continue;
            initial.theta = gauge_anchor(set.classes.front(), ens, 0.0);
            initial.v.assign(ens.inertial_count(), 0.0);
        } else {
            initial = random_initial_state(ens, state_seed);
        }
        return AuditCase{id, std::move(ens), std::move(initial)};
    }
    throw ParameterError("suite recipe rejected 1000 consecutive draws; check min_omega_max");
}

CaseResult run_case(const AuditCase& c, const IntegratorConfig& integrator, const Tolerances& tol)
{
    CaseResult out;
    out.id = c.id;
    Trajectory traj = integrate(c.ensemble, c.initial, integrator);
    out.fault = traj.fault;
    out.end_time = traj.end_time();

    std::optional<EquilibriumSet> set;
    if (c.ensemble.size() <= 12) set = enumerate_equilibria(c.ensemble);
    out.report = classify(traj, tol, set ? &*set : nullptr);
    out.flagged = out.report.disagreement();

    for (const auto& s : traj.samples) out.max_energy_residual = std::max(out.max_energy_residual, std::abs(s.energy_residual));
    if (!traj.samples.empty())
        out.momentum_drift = std::abs(traj.samples.back().momentum - traj.samples.front().momentum);
    out.apriori_worst = apriori_check(traj).worst();
    if (out.flagged || out.fault) out.trajectory = std::move(traj);
    return out;
}

} // namespace

AuditSuite generate_suite(const SuiteRecipe& recipe, const IntegratorConfig& integrator, const Tolerances& tol)
{
    if (recipe.n_min < 1 || recipe.n_max < recipe.n_min) throw ParameterError("suite needs 1 <= n_min <= n_max");
    if (!(recipe.m_lo > 0.0 && recipe.m_hi >= recipe.m_lo && recipe.d_lo > 0.0 && recipe.d_hi >= recipe.d_lo))
        throw ParameterError("suite inertia and damping ranges must be positive and ordered");
    integrator.validate();
    tol.validate();

    AuditSuite suite{{}, integrator, tol};
    suite.cases.reserve(recipe.count);
    for (std::size_t id = 0; id < recipe.count; ++id) suite.cases.push_back(draw_case(recipe, id));
    return suite;
}

AuditReport equivalence_audit(const AuditSuite& suite, unsigned threads)
{
    const auto wall_start = std::chrono::steady_clock::now();
    AuditReport report;
    const std::size_t count = suite.cases.size();
    report.cases.resize(count);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            const AuditCase& c = suite.cases[i];
            try {
                report.cases[i] = run_case(c, suite.integrator, suite.tolerances);
            } catch (const std::exception& err) {
                CaseResult failed;
                failed.id = c.id;
                failed.fault = IntegrationFault{0.0, err.what()};
                report.cases[i] = std::move(failed);
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (const auto& c : report.cases) {
        const auto v = c.report.theorem_verdicts();
        for (std::size_t a = 0; a < 4; ++a)
            for (std::size_t b = 0; b < 4; ++b)
                if (decided(v[a]) && decided(v[b]) && v[a] == v[b]) ++report.agreement[a][b];
        if (c.flagged) report.flags.push_back(c.id);
        report.apriori_worst = std::max(report.apriori_worst, c.apriori_worst);
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return report;
}

} // namespace hkflow
