#pragma once

#include "hkflow/model.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hkflow {

/// One phase-locked configuration modulo the common phase shift.
struct EquilibriumClass {
    double r = 0.0;                       // order-parameter magnitude
    std::vector<int> sigma;               // sign of cos(Delta_j), +1 / -1
    std::vector<double> delta;            // Delta_j = Psi - psi_j in (-pi, pi]
    std::vector<double> representative;   // psi with Psi = 0, i.e. psi_j = -Delta_j
    double residual = 0.0;                // max_j |g_j(representative)|
    /// r = 0 configuration: the mean phase is undefined, delta uses the gauge psi_1 = 0.
    bool degenerate = false;
};

struct EquilibriumSet {
    std::vector<EquilibriumClass> classes;  // sorted by r descending
    /// Identical frequencies with N >= 4: zero-order-parameter states may form continua
    /// and are not listed.
    bool degenerate_family = false;
    std::string note;
};

struct EnumerationOptions {
    std::size_t subdivisions = 4096;
    std::size_t max_oscillators = 20;
    /// Grid used by the oracle for the r = 0 states of identical-frequency ensembles (N <= 3).
    std::size_t degenerate_grid = 120;
};

/// H_sigma(x) = x - (lambda/N) sum_j sigma_j sqrt(1 - (omega_j/x)^2).
double h_sigma(const Ensemble& ensemble, std::span<const int> sigma, double x);

/// Roots of H_sigma on [omega_M, lambda], by uniform subdivision, bisection on sign changes,
/// and a tangency check at local minima of |H| and at both endpoints. Roots closer than
/// 1e-9 are merged. Empty when lambda < omega_M.
std::vector<double> solve_h_sigma(const Ensemble& ensemble, std::span<const int> sigma,
                                  std::size_t subdivisions = 4096);

struct Reconstruction {
    std::optional<EquilibriumClass> cls;
    std::string rejection;  // set when cls is empty
};

/// Builds Delta_j = atan2(s_j, c_j) with s_j = -omega_j/(lambda r), c_j = sigma_j sqrt(1 - s_j^2)
/// and validates the class invariants (self-consistency sum c_j = rN, sum s_j = 0, residual).
Reconstruction reconstruct_phases(const Ensemble& ensemble, double r, std::span<const int> sigma);

/// All equilibrium classes of a normalized ensemble.
/// Throws ParameterError for N > options.max_oscillators.
EquilibriumSet enumerate_equilibria(const Ensemble& ensemble, const EnumerationOptions& options = {});

/// psi + s 1 with s chosen so that sum_j d_j (psi_j + s) = c0.
std::vector<double> gauge_anchor(const EquilibriumClass& cls, const Ensemble& ensemble, double c0);

/// Lifts the class so its relative phases follow `reference` (windings included) and then
/// anchors it with c0. This is the configuration a run with momentum c0 would settle on.
std::vector<double> anchor_near(const EquilibriumClass& cls, const Ensemble& ensemble, double c0,
                                std::span<const double> reference);

struct NearestClass {
    std::size_t index = 0;
    double distance = 0.0;            // max_j |theta_j - anchored_j|
    std::vector<double> anchored;
};

/// Class whose anchored configuration is closest to `theta`.
std::optional<NearestClass> nearest_class(const EquilibriumSet& set, const Ensemble& ensemble, double c0,
                                          std::span<const double> theta);

/// Oracle: fixes psi_1 = 0, scans a uniform grid on the remaining N-1 torus axes, runs damped
/// Newton on g_2..g_N from every local minimum of sum g_j^2, and de-duplicates the roots.
/// Returned configurations have psi_1 = 0 and the other phases in [0, 2pi).
/// Throws ParameterError for N > 4.
std::vector<std::vector<double>> brute_force_equilibria(const Ensemble& ensemble, std::size_t grid_per_axis);

/// Delta sequence of an arbitrary configuration (Psi from its order parameter). For r below
/// 1e-9 the gauge psi_1 = 0 is used instead.
std::vector<double> delta_of(std::span<const double> psi);

struct OracleComparison {
    std::size_t enumerated = 0;
    std::size_t oracle = 0;
    std::size_t matched = 0;
    double max_delta_error = 0.0;
    bool agree = false;
};

OracleComparison compare_with_oracle(const EquilibriumSet& set, const std::vector<std::vector<double>>& oracle,
                                     double tolerance = 1e-6);

} // namespace hkflow
