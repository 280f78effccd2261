#pragma once

#include "hkflow/integrator.hpp"
#include "hkflow/model.hpp"
#include "hkflow/random.hpp"

#include <cstdint>
#include <vector>

namespace hkflow::test {

/// Normalized ensemble with N oscillators, a random first-order count, m and d in [0.5, 2],
/// omega uniform on [-1, 1] and lambda = lambda_factor * omega_M.
inline Ensemble random_ensemble(std::uint64_t seed, std::size_t N, double lambda_factor = 4.0)
{
    CounterRng rng(seed);
    const auto n = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(N)));
    std::vector<double> m(N, 0.0), d(N), omega(N);
    for (std::size_t j = 0; j < N; ++j) {
        if (j >= n) m[j] = rng.uniform(0.5, 2.0);
        d[j] = rng.uniform(0.5, 2.0);
        omega[j] = rng.uniform(-1.0, 1.0);
    }
    const auto raw = Ensemble::make(n, m, d, omega, 1.0);
    const auto normalized = normalize_frame(raw).ensemble;
    return normalized.with_coupling(lambda_factor * normalized.omega_max());
}

inline Ensemble two_oscillators(double w, double lambda, std::size_t n = 2)
{
    std::vector<double> m(2, 0.0);
    for (std::size_t j = n; j < 2; ++j) m[j] = 1.0;
    return Ensemble::make(n, m, {1.0, 1.0}, {w, -w}, lambda);
}

inline IntegratorConfig config(double dt, double T, std::size_t sample_every = 1)
{
    IntegratorConfig c;
    c.dt = dt;
    c.T = T;
    c.sample_every = sample_every;
    return c;
}

} // namespace hkflow::test
