#pragma once

#include "hkflow/classifier.hpp"
#include "hkflow/equilibria.hpp"
#include "hkflow/limit_system.hpp"
#include "hkflow/model.hpp"
#include "hkflow/trajectory.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace hkflow {

/// Key order follows insertion so reports are byte-stable.
using Json = nlohmann::ordered_json;

/// 17 significant digits, round-trip exact.
std::string format_double(double x);

/// {N, n, m, d, omega, lambda}
Json ensemble_to_json(const Ensemble& ensemble);

/// header: t,theta_1..theta_N,v_{n+1}..v_N,R,Theta,M,E_residual
std::string trajectory_csv_header(const Ensemble& ensemble);
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// Rebuilds samples from a trajectory CSV. Z is recomputed from the phases; R and Theta come
/// from their columns. Throws ConfigError with the offending line.
Trajectory read_trajectory_csv(std::istream& in, const Ensemble& ensemble, const IntegratorConfig& config);

/// R_final, Theta_final, max_phase_diameter, max_energy_residual, apriori_worst,
/// apriori_worst_m_scaled, momentum_drift, lk.
Json diagnostics_json(const Trajectory& trajectory);

Json equilibria_json(const EquilibriumSet& set);
Json oracle_json(const std::vector<std::vector<double>>& oracle, const OracleComparison& cmp);
Json classification_json(const ClassificationReport& report);
Json audit_json(const AuditReport& report);
Json autonomy_json(const AutonomyReport& report);

/// v0,tau,P,energy_residual,exp_identity_residual,crossed
void write_poincare_csv(std::ostream& out, const std::vector<PoincareResult>& results);

/// Plot data: t,R / t,diameter / t,f_1..f_N
void write_order_parameter_csv(std::ostream& out, const Trajectory& trajectory);
void write_diameter_csv(std::ostream& out, const Trajectory& trajectory);
void write_frequency_csv(std::ostream& out, const Trajectory& trajectory);

} // namespace hkflow
