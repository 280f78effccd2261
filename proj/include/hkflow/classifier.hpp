#pragma once

#include "hkflow/diagnostics.hpp"
#include "hkflow/equilibria.hpp"
#include "hkflow/model.hpp"
#include "hkflow/trajectory.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

namespace hkflow {

enum class Verdict { yes, no, inconclusive, not_applicable };

/// "true", "false", "inconclusive", "not_applicable"
std::string_view verdict_name(Verdict verdict);
Verdict parse_verdict(std::string_view name);

inline bool decided(Verdict v) { return v == Verdict::yes || v == Verdict::no; }

struct Tolerances {
    double freq_tol = 1e-6;
    double lock_var_tol = 1e-6;
    double op_var_tol = 1e-6;
    double opss_margin = 1e-6;
    double tail_fraction = 0.2;
    double diameter_cap = 100.0 * 2.0 * std::numbers::pi;

    /// Throws ParameterError.
    void validate() const;
};

/// Ratio between the "false" and "true" thresholds of every detector.
inline constexpr double kHysteresis = 1e3;
/// Detectors need at least this much simulated time.
inline constexpr double kMinHorizon = 10.0;

struct FssResult {
    Verdict verdict = Verdict::inconclusive;
    double tail_max_frequency = 0.0;
};

struct PlsResult {
    Verdict verdict = Verdict::inconclusive;
    double max_diameter = 0.0;
    double tail_diameter_spread = 0.0;  // max - min of the diameter over the trailing window
};

struct FplsResult {
    Verdict verdict = Verdict::inconclusive;
    double tail_variation = 0.0;   // max over pairs of the total variation of theta_j - theta_k
    double final_residual = 0.0;   // max_j |g_j| at the last sample
    std::optional<std::size_t> nearest_class;
    double nearest_distance = 0.0;
};

struct OpssResult {
    Verdict verdict = Verdict::inconclusive;
    double tail_variation = 0.0;  // max(spread of Z_re, spread of Z_im) over the window
    double R_star = 0.0;          // tail mean of R
    double Theta_star = 0.0;      // tail mean of the unwrapped Theta
    double threshold = 0.0;       // omega_M / lambda
};

struct PssResult {
    Verdict verdict = Verdict::not_applicable;
    double tail_max_spread = 0.0;  // max over the window of the largest pairwise circle distance
};

/// Index of the first sample inside the trailing window [t_end (1 - tail_fraction), t_end].
std::size_t tail_begin(const Trajectory& trajectory, double tail_fraction);

FssResult detect_fss(const Trajectory& trajectory, const Tolerances& tol);
PlsResult detect_pls(const Trajectory& trajectory, const Tolerances& tol);
/// `equilibria` may be null; the nearest class is attached only when it is given.
FplsResult detect_fpls(const Trajectory& trajectory, const Tolerances& tol, const EquilibriumSet* equilibria);
OpssResult detect_opss(const Trajectory& trajectory, const Tolerances& tol);
PssResult detect_pss(const Trajectory& trajectory, const Tolerances& tol);

/// Order of the theorem states in agreement matrices.
enum class TheoremState : std::size_t { fpls = 0, pls = 1, fss = 2, opss = 3 };
inline constexpr std::array<std::string_view, 4> kTheoremStateNames{"FPLS", "PLS", "FSS", "OPSS"};

struct ClassificationReport {
    PssResult pss;
    FplsResult fpls;
    PlsResult pls;
    FssResult fss;
    OpssResult opss;

    std::array<Verdict, 4> theorem_verdicts() const;
    /// All four theorem verdicts decided and not all equal.
    bool disagreement() const;
};

/// Runs every detector and enforces FPLS = true => PLS = FSS = true and
/// PSS = true => FPLS = true by downgrading the stronger verdict to inconclusive.
ClassificationReport classify(const Trajectory& trajectory, const Tolerances& tol,
                              const EquilibriumSet* equilibria = nullptr);

struct AuditCase {
    std::size_t id = 0;
    Ensemble ensemble;
    State initial;
};

struct AuditSuite {
    std::vector<AuditCase> cases;
    IntegratorConfig integrator;
    Tolerances tolerances;
};

enum class SuiteKind { random, drift, equilibrium };

/// Recipe for generated suites. Every case draws from its own counter stream of `seed`.
///
/// random:      N in [n_min, n_max], first-order count uniform in [0, N], omega uniform on
///              [-1, 1] then normalized, m and d uniform on [m_lo, m_hi] and [d_lo, d_hi],
///              lambda = lambda_factor * omega_M, random initial state.
/// drift:       N = 2 with lambda = u * 2 omega_M (1 - drift_margin), u uniform on [0.3, 1).
/// equilibrium: as random, started on the anchored largest-r class with zero velocities.
struct SuiteRecipe {
    SuiteKind kind = SuiteKind::random;
    std::size_t count = 50;
    std::size_t n_min = 2;
    std::size_t n_max = 6;
    double lambda_factor = 4.0;
    double m_lo = 0.5, m_hi = 2.0;
    double d_lo = 0.5, d_hi = 2.0;
    double drift_margin = 0.1;
    /// Draws with a smaller spread of normalized frequencies are redrawn.
    double min_omega_max = 0.1;
    std::uint64_t seed = 0;
};

AuditSuite generate_suite(const SuiteRecipe& recipe, const IntegratorConfig& integrator, const Tolerances& tol);

SuiteKind parse_suite_kind(std::string_view name);

struct CaseResult {
    std::size_t id = 0;
    ClassificationReport report;
    bool flagged = false;
    double end_time = 0.0;
    double max_energy_residual = 0.0;
    double momentum_drift = 0.0;
    double apriori_worst = 0.0;
    std::optional<IntegrationFault> fault;
    /// Kept for flagged or faulted cases only.
    std::optional<Trajectory> trajectory;
};

struct AuditReport {
    std::vector<CaseResult> cases;  // case-id order
    /// entry (a, b): cases where states a and b are both decided and equal.
    std::array<std::array<std::size_t, 4>, 4> agreement{};
    std::vector<std::size_t> flags;  // ids of flagged cases
    double apriori_worst = -std::numeric_limits<double>::infinity();  // max over cases
    double wall_seconds = 0.0;
};

/// Integrates and classifies every case on `threads` workers (0 = hardware concurrency).
/// Never throws for per-case problems; they show up in the case results.
AuditReport equivalence_audit(const AuditSuite& suite, unsigned threads = 0);

} // namespace hkflow
