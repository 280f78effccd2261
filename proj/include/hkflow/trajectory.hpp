#pragma once

#include "hkflow/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hkflow {

/// Z = R e^{i Theta} = (1/N) sum_j e^{i theta_j}.
struct OrderParameterSample {
    double R = 0.0;
    double Theta = 0.0;  // principal angle from order_parameter(); unwrapped inside a Trajectory
    double Z_re = 0.0;
    double Z_im = 0.0;
};

enum class Method { rk4_fixed, rk45_adaptive };

struct IntegratorConfig {
    double dt = 1e-3;
    double T = 100.0;
    std::size_t sample_every = 1;
    Method method = Method::rk4_fixed;
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    std::uint64_t seed = 0;

    /// Throws ParameterError.
    void validate() const;
};

struct Sample {
    State state;
    OrderParameterSample op;
    double momentum = 0.0;
    double energy_residual = 0.0;
};

struct IntegrationFault {
    double time = 0.0;
    std::string message;
};

/// Sampled solution. Sample times are strictly increasing and start at t = 0.
struct Trajectory {
    Ensemble ensemble;
    IntegratorConfig config;
    std::vector<Sample> samples;
    double wall_seconds = 0.0;
    /// Set when stepping produced non-finite values; samples end at the last good one.
    std::optional<IntegrationFault> fault;

    double end_time() const { return samples.empty() ? 0.0 : samples.back().state.t; }
};

} // namespace hkflow
