#include "hkflow/io.hpp"

#include "hkflow/diagnostics.hpp"
#include "hkflow/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace hkflow {

namespace {

Json number(double x)
{
    // JSON has no NaN or infinity.
    if (!std::isfinite(x)) return nullptr;
    return x;
}

Json numbers(std::span<const double> xs)
{
    Json a = Json::array();
    for (double x : xs) a.push_back(number(x));
    return a;
}

void write_row(std::ostream& out, std::span<const double> values)
{
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out << ',';
        out << format_double(values[i]);
    }
    out << '\n';
}

} // namespace

std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Json ensemble_to_json(const Ensemble& e)
{
    Json j;
    j["N"] = e.size();
    j["n"] = e.first_order_count();
    j["m"] = numbers(e.inertia());
    j["d"] = numbers(e.damping());
    j["omega"] = numbers(e.omega());
    j["lambda"] = e.coupling();
    return j;
}

std::string trajectory_csv_header(const Ensemble& e)
{
    std::string h = "t";
    for (std::size_t j = 0; j < e.size(); ++j) h += ",theta_" + std::to_string(j + 1);
    for (std::size_t j = e.first_order_count(); j < e.size(); ++j) h += ",v_" + std::to_string(j + 1);
    h += ",R,Theta,M,E_residual";
    return h;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj)
{
    out << trajectory_csv_header(traj.ensemble) << '\n';
    std::vector<double> row;
    for (const auto& s : traj.samples) {
        row.clear();
        row.push_back(s.state.t);
        row.insert(row.end(), s.state.theta.begin(), s.state.theta.end());
        row.insert(row.end(), s.state.v.begin(), s.state.v.end());
        row.push_back(s.op.R);
        row.push_back(s.op.Theta);
        row.push_back(s.momentum);
        row.push_back(s.energy_residual);
        write_row(out, row);
    }
}

Trajectory read_trajectory_csv(std::istream& in, const Ensemble& e, const IntegratorConfig& config)
{
    Trajectory traj{e, config, {}, 0.0, std::nullopt};
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ConfigError("trajectory CSV is empty", 1, 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != trajectory_csv_header(e))
        throw ConfigError("trajectory CSV header does not match the ensemble (expected '" +
                              trajectory_csv_header(e) + "')",
                          1, 1);

    const std::size_t n_osc = e.size();
    const std::size_t n_vel = e.inertial_count();
    const std::size_t columns = 1 + n_osc + n_vel + 4;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        row.clear();
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = std::min(line.find(',', pos), line.size());
            const std::string cell = line.substr(pos, comma - pos);
            char* end = nullptr;
            const double x = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size())
                throw ConfigError("trajectory CSV: cannot parse '" + cell + "' as a number", line_no, pos + 1);
            row.push_back(x);
            pos = comma + 1;
        }
        if (row.size() != columns)
            throw ConfigError("trajectory CSV: expected " + std::to_string(columns) + " columns, found " +
                                  std::to_string(row.size()),
                              line_no, 1);
        Sample s;
        s.state.t = row[0];
        s.state.theta.assign(row.begin() + 1, row.begin() + 1 + static_cast<long>(n_osc));
        s.state.v.assign(row.begin() + 1 + static_cast<long>(n_osc),
                         row.begin() + 1 + static_cast<long>(n_osc + n_vel));
        s.op = order_parameter(s.state.theta);
        s.op.R = row[1 + n_osc + n_vel];
        s.op.Theta = row[2 + n_osc + n_vel];
        s.momentum = row[3 + n_osc + n_vel];
        s.energy_residual = row[4 + n_osc + n_vel];
        if (!traj.samples.empty() && !(s.state.t > traj.samples.back().state.t))
            throw ConfigError("trajectory CSV: times must increase", line_no, 1);
        traj.samples.push_back(std::move(s));
    }
    return traj;
}

Json diagnostics_json(const Trajectory& traj)
{
    Json j;
    if (traj.samples.empty()) {
        j["samples"] = 0;
        return j;
    }
    const auto& last = traj.samples.back();
    double max_diameter = 0.0;
    double max_residual = 0.0;
    std::vector<double> r_series;
    r_series.reserve(traj.samples.size());
    for (const auto& s : traj.samples) {
        max_diameter = std::max(max_diameter, phase_diameter(s.state.theta));
        max_residual = std::max(max_residual, std::abs(s.energy_residual));
        r_series.push_back(s.op.R);
    }
    const auto apriori = apriori_check(traj);

    j["samples"] = traj.samples.size();
    j["t_final"] = last.state.t;
    j["R_final"] = last.op.R;
    j["Theta_final"] = last.op.Theta;
    j["max_phase_diameter"] = max_diameter;
    j["max_energy_residual"] = max_residual;
    j["momentum_drift"] = std::abs(last.momentum - traj.samples.front().momentum);
    j["apriori_worst"] = number(apriori.worst());
    j["apriori_worst_m_scaled"] = number(apriori.worst_m_scaled());
    j["apriori_per_oscillator"] = numbers(apriori.worst_violation);

    Json lk;
    lk["signal"] = "R";
    if (r_series.size() >= 5) {
        const double h = traj.config.dt * static_cast<double>(traj.config.sample_every);
        const auto res = lk_check(r_series, h);
        lk["h"] = h;
        lk["sup_f"] = res.sup_f;
        lk["sup_df"] = res.sup_df;
        lk["sup_d2f"] = res.sup_d2f;
        lk["satisfied"] = res.satisfied;
    } else {
        lk["satisfied"] = nullptr;
    }
    j["lk"] = lk;
    if (traj.fault) j["fault"] = {{"time", traj.fault->time}, {"message", traj.fault->message}};
    return j;
}

Json equilibria_json(const EquilibriumSet& set)
{
    Json classes = Json::array();
    for (const auto& c : set.classes) {
        Json k;
        k["r"] = c.r;
        k["sigma"] = c.sigma;
        k["Delta"] = numbers(c.delta);
        k["representative"] = numbers(c.representative);
        k["residual"] = c.residual;
        k["degenerate"] = c.degenerate;
        classes.push_back(std::move(k));
    }
    Json j;
    j["classes"] = std::move(classes);
    j["degenerate_family"] = set.degenerate_family;
    if (!set.note.empty()) j["note"] = set.note;
    return j;
}

Json oracle_json(const std::vector<std::vector<double>>& oracle, const OracleComparison& cmp)
{
    Json configs = Json::array();
    for (const auto& psi : oracle) configs.push_back(numbers(psi));
    Json j;
    j["configurations"] = std::move(configs);
    j["enumerated"] = cmp.enumerated;
    j["oracle"] = cmp.oracle;
    j["matched"] = cmp.matched;
    j["max_delta_error"] = cmp.max_delta_error;
    j["agree"] = cmp.agree;
    return j;
}

Json classification_json(const ClassificationReport& r)
{
    Json j;
    j["PSS"] = {{"verdict", verdict_name(r.pss.verdict)}, {"tail_max_spread", r.pss.tail_max_spread}};
    Json fpls = {{"verdict", verdict_name(r.fpls.verdict)},
                 {"tail_variation", r.fpls.tail_variation},
                 {"final_residual", r.fpls.final_residual}};
    if (r.fpls.nearest_class) {
        fpls["nearest_class"] = *r.fpls.nearest_class;
        fpls["nearest_distance"] = r.fpls.nearest_distance;
    }
    j["FPLS"] = std::move(fpls);
    j["PLS"] = {{"verdict", verdict_name(r.pls.verdict)},
                {"max_diameter", r.pls.max_diameter},
                {"tail_diameter_spread", r.pls.tail_diameter_spread}};
    j["FSS"] = {{"verdict", verdict_name(r.fss.verdict)}, {"tail_max_frequency", r.fss.tail_max_frequency}};
    j["OPSS"] = {{"verdict", verdict_name(r.opss.verdict)},
                 {"tail_variation", r.opss.tail_variation},
                 {"R_star", r.opss.R_star},
                 {"Theta_star", r.opss.Theta_star},
                 {"threshold", number(r.opss.threshold)}};
    j["disagreement"] = r.disagreement();
    return j;
}

Json audit_json(const AuditReport& report)
{
    Json cases = Json::array();
    for (const auto& c : report.cases) {
        Json k;
        k["id"] = c.id;
        k["verdicts"] = classification_json(c.report);
        k["flagged"] = c.flagged;
        k["end_time"] = c.end_time;
        k["max_energy_residual"] = c.max_energy_residual;
        k["momentum_drift"] = c.momentum_drift;
        k["apriori_worst"] = number(c.apriori_worst);
        if (c.fault) k["fault"] = {{"time", c.fault->time}, {"message", c.fault->message}};
        if (c.trajectory) {
            k["ensemble"] = ensemble_to_json(c.trajectory->ensemble);
            std::ostringstream csv;
            write_trajectory_csv(csv, *c.trajectory);
            k["trajectory_csv"] = csv.str();
        }
        cases.push_back(std::move(k));
    }
    Json matrix = Json::array();
    for (const auto& row : report.agreement) matrix.push_back(row);

    Json j;
    j["states"] = kTheoremStateNames;
    j["agreement_matrix"] = std::move(matrix);
    j["flags"] = report.flags;
    j["apriori_worst"] = number(report.apriori_worst);
    j["cases"] = std::move(cases);
    return j;
}

Json autonomy_json(const AutonomyReport& r)
{
    Json j;
    j["oscillator"] = r.oscillator + 1;
    j["applicable"] = r.applicable;
    if (!r.reason.empty()) j["reason"] = r.reason;
    j["R_star"] = r.R_star;
    j["Theta_star"] = r.Theta_star;
    j["tail_deviation"] = r.tail_deviation;
    j["equilibrium_distance"] = number(r.equilibrium_distance);
    j["nearest_equilibrium"] = r.nearest_equilibrium;
    return j;
}

void write_poincare_csv(std::ostream& out, const std::vector<PoincareResult>& results)
{
    out << "v0,tau,P,energy_residual,exp_identity_residual,crossed\n";
    for (const auto& r : results) {
        out << format_double(r.v0) << ',' << format_double(r.tau) << ',' << format_double(r.P) << ','
            << format_double(r.energy_residual) << ',' << format_double(r.exp_identity_residual) << ','
            << (r.crossed ? "true" : "false") << '\n';
    }
}

void write_order_parameter_csv(std::ostream& out, const Trajectory& traj)
{
    out << "t,R\n";
    for (const auto& s : traj.samples) out << format_double(s.state.t) << ',' << format_double(s.op.R) << '\n';
}

void write_diameter_csv(std::ostream& out, const Trajectory& traj)
{
    out << "t,diameter\n";
    for (const auto& s : traj.samples)
        out << format_double(s.state.t) << ',' << format_double(phase_diameter(s.state.theta)) << '\n';
}

void write_frequency_csv(std::ostream& out, const Trajectory& traj)
{
    out << 't';
    for (std::size_t j = 0; j < traj.ensemble.size(); ++j) out << ",f_" << j + 1;
    out << '\n';
    std::vector<double> row;
    for (const auto& s : traj.samples) {
        row.assign(1, s.state.t);
        const auto f = frequencies(traj.ensemble, s.state);
        row.insert(row.end(), f.begin(), f.end());
        write_row(out, row);
    }
}

} // namespace hkflow
