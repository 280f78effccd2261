#pragma once

#include "hkflow/classifier.hpp"
#include "hkflow/model.hpp"
#include "hkflow/trajectory.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hkflow {

enum class InitKind { given, random, zero };

/// Initial phases are "random" or an array; velocities are "random", "zero" or an array.
/// Given and zero velocities are lab-frame values; random ones are drawn in the co-rotating frame.
struct InitialSpec {
    InitKind theta_kind = InitKind::random;
    std::vector<double> theta;
    InitKind v_kind = InitKind::random;
    std::vector<double> v;
};

struct OutputSpec {
    std::string dir = "out";
    bool emit_trajectory = true;
    bool emit_plots = false;
};

struct RunConfig {
    Ensemble ensemble;  // as written, possibly not normalized
    InitialSpec initial;
    IntegratorConfig integrator;
    Tolerances tolerances;
    OutputSpec outputs;
};

/// Normalized ensemble, removed drift and the co-rotating initial state.
struct PreparedRun {
    Ensemble ensemble;
    double drift = 0.0;
    State initial;
};

PreparedRun prepare_run(const Ensemble& ensemble, const InitialSpec& initial, std::uint64_t seed);

/// All parsers reject unknown keys and throw ConfigError carrying "source:line:column: message".
RunConfig parse_run_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_run_config(const std::string& path);

/// Accepts a run config (uses its "ensemble") or a bare ensemble object.
Ensemble load_ensemble(const std::string& path);

/// Suite file: {"recipe": {...}} or {"cases": [{"ensemble": ..., "initial": ...}]}, plus optional
/// "integrator", "tolerances" and "seed".
AuditSuite parse_audit_suite(std::string_view text, std::string_view source = "<suite>");
AuditSuite load_audit_suite(const std::string& path);

std::string read_text_file(const std::string& path);

} // namespace hkflow
