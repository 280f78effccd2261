#include "hkflow/config.hpp"

#include "hkflow/errors.hpp"
#include "hkflow/integrator.hpp"
#include "hkflow/io.hpp"
#include "hkflow/random.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace hkflow {

namespace {

struct Position {
    std::size_t line = 0;
    std::size_t column = 0;
};

// Maps JSON pointers to the position of the member key (object members) or the value
// (array elements and the root). Runs on text that nlohmann has already accepted.
class Locator {
public:
    explicit Locator(std::string_view text) : text_(text)
    {
        value("");
    }

    Position find(const std::string& pointer) const
    {
        std::string p = pointer;
        while (true) {
            if (auto it = positions_.find(p); it != positions_.end()) return it->second;
            if (p.empty()) return {};
            p.erase(p.rfind('/'));
        }
    }

private:
    Position here() const { return {line_, column_}; }

    void advance()
    {
        if (text_[i_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++i_;
    }

    void skip_ws()
    {
        while (i_ < text_.size() && (text_[i_] == ' ' || text_[i_] == '\t' || text_[i_] == '\n' || text_[i_] == '\r'))
            advance();
    }

    std::string string()
    {
        std::string out;
        advance();  // opening quote
        while (i_ < text_.size() && text_[i_] != '"') {
            if (text_[i_] == '\\') {
                advance();
                if (i_ < text_.size()) out += text_[i_];
                advance();
                continue;
            }
            out += text_[i_];
            advance();
        }
        if (i_ < text_.size()) advance();  // closing quote
        return out;
    }

    static std::string escape(const std::string& key)
    {
        std::string out;
        for (char c : key) {
            if (c == '~') out += "~0";
            else if (c == '/') out += "~1";
            else out += c;
        }
        return out;
    }

    void value(const std::string& path)
    {
        skip_ws();
        if (i_ >= text_.size()) return;
        if (!positions_.count(path)) positions_[path] = here();
        const char c = text_[i_];
        if (c == '{') {
            advance();
            while (true) {
                skip_ws();
                if (i_ >= text_.size() || text_[i_] == '}') break;
                if (text_[i_] == ',') {
                    advance();
                    continue;
                }
                const Position key_pos = here();
                const std::string key = string();
                const std::string child = path + "/" + escape(key);
                positions_[child] = key_pos;
                skip_ws();
                if (i_ < text_.size() && text_[i_] == ':') advance();
                value(child);
            }
            if (i_ < text_.size()) advance();
        } else if (c == '[') {
            advance();
            std::size_t index = 0;
            while (true) {
                skip_ws();
                if (i_ >= text_.size() || text_[i_] == ']') break;
                if (text_[i_] == ',') {
                    advance();
                    continue;
                }
                value(path + "/" + std::to_string(index++));
            }
            if (i_ < text_.size()) advance();
        } else if (c == '"') {
            string();
        } else {
            while (i_ < text_.size() && text_[i_] != ',' && text_[i_] != '}' && text_[i_] != ']' && text_[i_] != ' ' &&
                   text_[i_] != '\n' && text_[i_] != '\r' && text_[i_] != '\t')
                advance();
        }
    }

    std::string_view text_;
    std::size_t i_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
    std::map<std::string, Position> positions_;
};

class Reader {
public:
    Reader(std::string_view text, std::string_view source) : source_(source), locator_(text)
    {
        try {
            root_ = Json::parse(text.begin(), text.end());
        } catch (const Json::parse_error& err) {
            const auto [line, col] = line_column(text, err.byte == 0 ? 0 : err.byte - 1);
            std::string msg = err.what();
            if (auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
            throw ConfigError(source_ + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg, line,
                              col);
        }
    }

    const Json& root() const { return root_; }

    [[noreturn]] void fail(const std::string& path, const std::string& message) const
    {
        const Position p = locator_.find(path);
        const std::string where = p.line == 0 ? source_
                                              : source_ + ":" + std::to_string(p.line) + ":" + std::to_string(p.column);
        const std::string field = path.empty() ? "" : " (at " + path + ")";
        throw ConfigError(where + ": " + message + field, p.line, p.column);
    }

    void require_object(const Json& j, const std::string& path) const
    {
        if (!j.is_object()) fail(path, "expected an object");
    }

    void reject_unknown(const Json& j, const std::string& path, std::initializer_list<std::string_view> allowed) const
    {
        for (const auto& [key, _] : j.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                std::string list;
                for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
                fail(path + "/" + key, "unknown key '" + key + "' (allowed: " + list + ")");
            }
        }
    }

    double number(const Json& j, const std::string& path) const
    {
        if (!j.is_number()) fail(path, "expected a number");
        return j.get<double>();
    }

    std::uint64_t unsigned_int(const Json& j, const std::string& path) const
    {
        if (!j.is_number_unsigned()) fail(path, "expected a non-negative integer");
        return j.get<std::uint64_t>();
    }

    bool boolean(const Json& j, const std::string& path) const
    {
        if (!j.is_boolean()) fail(path, "expected true or false");
        return j.get<bool>();
    }

    std::string string(const Json& j, const std::string& path) const
    {
        if (!j.is_string()) fail(path, "expected a string");
        return j.get<std::string>();
    }

    std::vector<double> numbers(const Json& j, const std::string& path, std::optional<std::size_t> length = {}) const
    {
        if (!j.is_array()) fail(path, "expected an array of numbers");
        if (length && j.size() != *length)
            fail(path, "expected " + std::to_string(*length) + " entries, found " + std::to_string(j.size()));
        std::vector<double> out;
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "/" + std::to_string(i)));
        return out;
    }

private:
    static std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte)
    {
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        return {line, col};
    }

    std::string source_;
    Locator locator_;
    Json root_;
};

Ensemble parse_ensemble(const Reader& rd, const Json& j, const std::string& path)
{
    rd.require_object(j, path);
    rd.reject_unknown(j, path, {"N", "n", "m", "d", "omega", "lambda"});
    for (const char* key : {"N", "n", "m", "d", "omega", "lambda"})
        if (!j.contains(key)) rd.fail(path, std::string("missing key '") + key + "'");

    const auto n_osc = rd.unsigned_int(j["N"], path + "/N");
    if (n_osc < 1) rd.fail(path + "/N", "N must be at least 1");
    const auto first_order = rd.unsigned_int(j["n"], path + "/n");
    if (first_order > n_osc) rd.fail(path + "/n", "n must not exceed N");
    auto m = rd.numbers(j["m"], path + "/m", n_osc);
    auto d = rd.numbers(j["d"], path + "/d", n_osc);
    auto omega = rd.numbers(j["omega"], path + "/omega", n_osc);
    const double lambda = rd.number(j["lambda"], path + "/lambda");

    for (std::size_t k = 0; k < n_osc; ++k) {
        const std::string at = path + "/m/" + std::to_string(k);
        if (k < first_order && m[k] != 0.0)
            rd.fail(at, "m_" + std::to_string(k + 1) + " must be exactly 0 for the first n = " +
                            std::to_string(first_order) + " (first-order) oscillators");
        if (k >= first_order && !(m[k] > 0.0))
            rd.fail(at, "m_" + std::to_string(k + 1) + " must be positive for inertial oscillators");
        if (!(d[k] > 0.0)) rd.fail(path + "/d/" + std::to_string(k), "damping must be positive");
    }
    try {
        return Ensemble::make(first_order, std::move(m), std::move(d), std::move(omega), lambda);
    } catch (const ParameterError& err) {
        rd.fail(path, err.what());
    }
}

IntegratorConfig parse_integrator(const Reader& rd, const Json& j, const std::string& path)
{
    IntegratorConfig c;
    rd.require_object(j, path);
    rd.reject_unknown(j, path, {"dt", "T", "sample_every", "method", "abs_tol", "rel_tol", "seed"});
    if (j.contains("dt")) c.dt = rd.number(j["dt"], path + "/dt");
    if (j.contains("T")) c.T = rd.number(j["T"], path + "/T");
    if (j.contains("sample_every")) c.sample_every = rd.unsigned_int(j["sample_every"], path + "/sample_every");
    if (j.contains("abs_tol")) c.abs_tol = rd.number(j["abs_tol"], path + "/abs_tol");
    if (j.contains("rel_tol")) c.rel_tol = rd.number(j["rel_tol"], path + "/rel_tol");
    if (j.contains("seed")) c.seed = rd.unsigned_int(j["seed"], path + "/seed");
    if (j.contains("method")) {
        try {
            c.method = parse_method(rd.string(j["method"], path + "/method"));
        } catch (const ParameterError& err) {
            rd.fail(path + "/method", err.what());
        }
    }
    try {
        c.validate();
    } catch (const ParameterError& err) {
        rd.fail(path, err.what());
    }
    return c;
}

Tolerances parse_tolerances(const Reader& rd, const Json& j, const std::string& path)
{
    Tolerances t;
    rd.require_object(j, path);
    rd.reject_unknown(j, path,
                      {"freq_tol", "lock_var_tol", "op_var_tol", "opss_margin", "tail_fraction", "diameter_cap"});
    if (j.contains("freq_tol")) t.freq_tol = rd.number(j["freq_tol"], path + "/freq_tol");
    if (j.contains("lock_var_tol")) t.lock_var_tol = rd.number(j["lock_var_tol"], path + "/lock_var_tol");
    if (j.contains("op_var_tol")) t.op_var_tol = rd.number(j["op_var_tol"], path + "/op_var_tol");
    if (j.contains("opss_margin")) t.opss_margin = rd.number(j["opss_margin"], path + "/opss_margin");
    if (j.contains("tail_fraction")) t.tail_fraction = rd.number(j["tail_fraction"], path + "/tail_fraction");
    if (j.contains("diameter_cap")) t.diameter_cap = rd.number(j["diameter_cap"], path + "/diameter_cap");
    try {
        t.validate();
    } catch (const ParameterError& err) {
        rd.fail(path, err.what());
    }
    return t;
}

InitialSpec parse_initial(const Reader& rd, const Json& j, const std::string& path, const Ensemble& e)
{
    InitialSpec s;
    rd.require_object(j, path);
    rd.reject_unknown(j, path, {"theta", "v"});
    if (j.contains("theta")) {
        const auto& t = j["theta"];
        if (t.is_string()) {
            if (t.get<std::string>() != "random") rd.fail(path + "/theta", "theta must be an array or \"random\"");
        } else {
            s.theta_kind = InitKind::given;
            s.theta = rd.numbers(t, path + "/theta", e.size());
        }
    }
    if (j.contains("v")) {
        const auto& v = j["v"];
        if (v.is_string()) {
            const auto name = v.get<std::string>();
            if (name == "zero")
                s.v_kind = InitKind::zero;
            else if (name != "random")
                rd.fail(path + "/v", "v must be an array, \"random\" or \"zero\"");
        } else {
            s.v_kind = InitKind::given;
            s.v = rd.numbers(v, path + "/v", e.inertial_count());
        }
    }
    return s;
}

OutputSpec parse_outputs(const Reader& rd, const Json& j, const std::string& path)
{
    OutputSpec o;
    rd.require_object(j, path);
    rd.reject_unknown(j, path, {"dir", "emit_trajectory", "emit_plots"});
    if (j.contains("dir")) o.dir = rd.string(j["dir"], path + "/dir");
    if (j.contains("emit_trajectory")) o.emit_trajectory = rd.boolean(j["emit_trajectory"], path + "/emit_trajectory");
    if (j.contains("emit_plots")) o.emit_plots = rd.boolean(j["emit_plots"], path + "/emit_plots");
    return o;
}

std::pair<double, double> parse_range(const Reader& rd, const Json& j, const std::string& path)
{
    const auto r = rd.numbers(j, path, 2);
    if (!(r[0] <= r[1])) rd.fail(path, "range must be [lo, hi] with lo <= hi");
    return {r[0], r[1]};
}

SuiteRecipe parse_recipe(const Reader& rd, const Json& j, const std::string& path)
{
    SuiteRecipe r;
    rd.require_object(j, path);
    rd.reject_unknown(j, path,
                      {"kind", "count", "n_min", "n_max", "lambda_factor", "m_range", "d_range", "drift_margin",
                       "min_omega_max"});
    if (j.contains("kind")) {
        try {
            r.kind = parse_suite_kind(rd.string(j["kind"], path + "/kind"));
        } catch (const ParameterError& err) {
            rd.fail(path + "/kind", err.what());
        }
    }
    if (j.contains("count")) r.count = rd.unsigned_int(j["count"], path + "/count");
    if (j.contains("n_min")) r.n_min = rd.unsigned_int(j["n_min"], path + "/n_min");
    if (j.contains("n_max")) r.n_max = rd.unsigned_int(j["n_max"], path + "/n_max");
    if (j.contains("lambda_factor")) r.lambda_factor = rd.number(j["lambda_factor"], path + "/lambda_factor");
    if (j.contains("m_range")) std::tie(r.m_lo, r.m_hi) = parse_range(rd, j["m_range"], path + "/m_range");
    if (j.contains("d_range")) std::tie(r.d_lo, r.d_hi) = parse_range(rd, j["d_range"], path + "/d_range");
    if (j.contains("drift_margin")) r.drift_margin = rd.number(j["drift_margin"], path + "/drift_margin");
    if (j.contains("min_omega_max")) r.min_omega_max = rd.number(j["min_omega_max"], path + "/min_omega_max");
    return r;
}

} // namespace

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PreparedRun prepare_run(const Ensemble& ensemble, const InitialSpec& initial, std::uint64_t seed)
{
    auto [norm, drift] = normalize_frame(ensemble);
    const State drawn = random_initial_state(norm, seed);
    State s;
    s.theta = initial.theta_kind == InitKind::given ? initial.theta : drawn.theta;
    switch (initial.v_kind) {
    case InitKind::random: s.v = drawn.v; break;
    case InitKind::zero: s.v.assign(norm.inertial_count(), -drift); break;
    case InitKind::given:
        s.v = initial.v;
        for (double& v : s.v) v -= drift;
        break;
    }
    check_dimensions(norm, s);
    return {std::move(norm), drift, std::move(s)};
}

RunConfig parse_run_config(std::string_view text, std::string_view source)
{
    const Reader rd(text, source);
    const Json& j = rd.root();
    rd.require_object(j, "");
    rd.reject_unknown(j, "", {"ensemble", "initial", "integrator", "tolerances", "outputs"});
    if (!j.contains("ensemble")) rd.fail("", "missing key 'ensemble'");

    Ensemble e = parse_ensemble(rd, j["ensemble"], "/ensemble");
    InitialSpec init = j.contains("initial") ? parse_initial(rd, j["initial"], "/initial", e) : InitialSpec{};
    IntegratorConfig integ = j.contains("integrator") ? parse_integrator(rd, j["integrator"], "/integrator")
                                                      : IntegratorConfig{};
    Tolerances tol = j.contains("tolerances") ? parse_tolerances(rd, j["tolerances"], "/tolerances") : Tolerances{};
    OutputSpec out = j.contains("outputs") ? parse_outputs(rd, j["outputs"], "/outputs") : OutputSpec{};
    return RunConfig{std::move(e), std::move(init), integ, tol, std::move(out)};
}

RunConfig load_run_config(const std::string& path)
{
    return parse_run_config(read_text_file(path), path);
}

Ensemble load_ensemble(const std::string& path)
{
    const std::string text = read_text_file(path);
    const Reader rd(text, path);
    if (rd.root().is_object() && rd.root().contains("N")) return parse_ensemble(rd, rd.root(), "");
    return parse_run_config(text, path).ensemble;
}

AuditSuite parse_audit_suite(std::string_view text, std::string_view source)
{
    const Reader rd(text, source);
    const Json& j = rd.root();
    rd.require_object(j, "");
    rd.reject_unknown(j, "", {"recipe", "cases", "integrator", "tolerances", "seed"});
    if (j.contains("recipe") == j.contains("cases")) rd.fail("", "a suite needs exactly one of 'recipe' or 'cases'");

    IntegratorConfig integ;
    integ.T = 500.0;
    integ.sample_every = 100;
    if (j.contains("integrator")) integ = parse_integrator(rd, j["integrator"], "/integrator");
    const Tolerances tol = j.contains("tolerances") ? parse_tolerances(rd, j["tolerances"], "/tolerances") : Tolerances{};
    const std::uint64_t seed = j.contains("seed") ? rd.unsigned_int(j["seed"], "/seed") : integ.seed;

    if (j.contains("recipe")) {
        SuiteRecipe recipe = parse_recipe(rd, j["recipe"], "/recipe");
        recipe.seed = seed;
        try {
            return generate_suite(recipe, integ, tol);
        } catch (const ParameterError& err) {
            rd.fail("/recipe", err.what());
        }
    }

    const Json& cases = j["cases"];
    if (!cases.is_array()) rd.fail("/cases", "expected an array of cases");
    AuditSuite suite{{}, integ, tol};
    for (std::size_t id = 0; id < cases.size(); ++id) {
        const std::string path = "/cases/" + std::to_string(id);
        const Json& c = cases[id];
        rd.require_object(c, path);
        rd.reject_unknown(c, path, {"ensemble", "initial"});
        if (!c.contains("ensemble")) rd.fail(path, "missing key 'ensemble'");
        Ensemble e = parse_ensemble(rd, c["ensemble"], path + "/ensemble");
        const InitialSpec init = c.contains("initial") ? parse_initial(rd, c["initial"], path + "/initial", e)
                                                       : InitialSpec{};
        auto prepared = prepare_run(e, init, splitmix64_at(seed, id));
        suite.cases.push_back(AuditCase{id, std::move(prepared.ensemble), std::move(prepared.initial)});
    }
    return suite;
}

AuditSuite load_audit_suite(const std::string& path)
{
    return parse_audit_suite(read_text_file(path), path);
}

} // namespace hkflow
