#include "memsync/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace memsync {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ValidationError(key, "missing required field");
    return j.at(key);
}

double as_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ValidationError(field, "expected a number");
    return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback,
                 const std::string& prefix = "") {
    return j.contains(key) ? as_number(j.at(key), prefix + key) : fallback;
}

std::vector<double> as_vector(const json& v, const std::string& field, std::size_t m) {
    if (!v.is_array()) throw ValidationError(field, "expected an array");
    if (v.size() != m) {
        throw ValidationError(field, "expected " + std::to_string(m) + " entries (m = " +
                                         std::to_string(m) + "), got " + std::to_string(v.size()));
    }
    std::vector<double> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.push_back(as_number(v[i], field + "[" + std::to_string(i) + "]"));
    }
    return out;
}

SquareMatrix as_matrix(const json& v, const std::string& field, std::size_t m) {
    if (!v.is_array() || v.size() != m) {
        throw ValidationError(field, "expected an " + std::to_string(m) + "x" + std::to_string(m) +
                                         " nested array");
    }
    SquareMatrix M(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto row = as_vector(v[i], field + "[" + std::to_string(i) + "]", m);
        for (std::size_t j = 0; j < m; ++j) M(i, j) = row[j];
    }
    return M;
}

std::vector<ActivationSpec> parse_activations(const json& j, std::size_t m) {
    if (!j.contains("activations")) return std::vector<ActivationSpec>(m);
    const json& v = j.at("activations");
    if (!v.is_array() || v.size() != m) {
        throw ValidationError("activations", "expected " + std::to_string(m) + " activation objects");
    }
    std::vector<ActivationSpec> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::string field = "activations[" + std::to_string(i) + "]";
        if (!v[i].is_object()) throw ValidationError(field, "expected {kind, beta}");
        if (v[i].contains("kind")) {
            if (!v[i]["kind"].is_string()) throw ValidationError(field + ".kind", "expected a string");
            out[i].kind = activation_kind_from_string(v[i]["kind"].get<std::string>());
        }
        out[i].beta = number_or(v[i], "beta", 1.0, field + ".");
    }
    return out;
}

template <class Params>
void parse_common(const json& j, Params& p) {
    p.a = as_vector(require(j, "a"), "a", p.m);
    p.b = as_number(require(j, "b"), "b");
    p.eta = as_vector(require(j, "eta"), "eta", p.m);
    p.J = as_vector(require(j, "J"), "J", p.m);
    p.gamma = as_vector(require(j, "gamma"), "gamma", p.m);
    p.P = as_number(require(j, "P"), "P");
    p.activations = parse_activations(j, p.m);
}

MhnnParams parse_mhnn(const json& j, std::size_t m) {
    MhnnParams p;
    p.m = m;
    parse_common(j, p);
    const json& k = require(j, "k");
    if (!k.is_number()) throw ValidationError("k", "mhnn model takes a single scalar k");
    p.k = k.get<double>();
    p.w = as_matrix(require(j, "w"), "w", m);
    p.r = number_or(j, "r", 1.0);
    p.V = number_or(j, "V", 0.0);
    if (j.contains("coupling")) {
        const json& c = j.at("coupling");
        if (c == "weak") {
            p.coupling = CouplingKind::WeakSigmoidal;
        } else if (c == "linear") {
            p.coupling = CouplingKind::Linear;
        } else {
            throw ValidationError("coupling", "expected \"weak\" or \"linear\"");
        }
    }
    return p;
}

HebbianParams parse_hebbian(const json& j, std::size_t m) {
    HebbianParams p;
    p.m = m;
    parse_common(j, p);
    const json& k = require(j, "k");
    p.k = k.is_number() ? std::vector<double>(m, k.get<double>()) : as_vector(k, "k", m);
    p.c = as_matrix(require(j, "c"), "c", m);
    p.lambda = as_matrix(require(j, "lambda"), "lambda", m);
    p.w0 = j.contains("w0") ? as_matrix(j.at("w0"), "w0", m) : SquareMatrix(m, 1.0);
    if (j.contains("coupling") && j.at("coupling") != "linear") {
        throw ValidationError("coupling", "the Hebbian model uses linear coupling only");
    }
    return p;
}

IntegratorConfig parse_integrator(const json& j) {
    IntegratorConfig cfg;
    if (!j.contains("integrator")) return cfg;
    const json& v = j.at("integrator");
    if (!v.is_object()) throw ValidationError("integrator", "expected an object");
    if (v.contains("method")) {
        if (!v["method"].is_string()) throw ValidationError("integrator.method", "expected a string");
        cfg.method = method_from_string(v["method"].get<std::string>());
    }
    if (v.contains("dt")) {
        cfg.dt = as_number(v["dt"], "integrator.dt");
        if (!(*cfg.dt > 0.0)) throw ValidationError("integrator.dt", "must be > 0");
    }
    if (v.contains("t_end")) {
        cfg.t_end = as_number(v["t_end"], "integrator.t_end");
        if (!(*cfg.t_end > 0.0)) throw ValidationError("integrator.t_end", "must be > 0");
    }
    if (cfg.dt && cfg.t_end && !(*cfg.dt < *cfg.t_end)) {
        throw ValidationError("integrator.dt", "must be < t_end");
    }
    if (v.contains("record_stride")) {
        if (!v["record_stride"].is_number_integer() || v["record_stride"].get<long long>() < 1) {
            throw ValidationError("integrator.record_stride", "must be a positive integer");
        }
        cfg.record_stride = v["record_stride"].get<std::size_t>();
    }
    cfg.abs_tol = number_or(v, "abs_tol", cfg.abs_tol, "integrator.");
    cfg.rel_tol = number_or(v, "rel_tol", cfg.rel_tol, "integrator.");
    if (!(cfg.abs_tol > 0.0 && cfg.abs_tol < 1.0)) {
        throw ValidationError("integrator.abs_tol", "must lie in (0, 1)");
    }
    if (!(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0)) {
        throw ValidationError("integrator.rel_tol", "must lie in (0, 1)");
    }
    return cfg;
}

EnsembleSpec parse_ensemble(const json& j) {
    EnsembleSpec ens;
    if (!j.contains("ensemble")) return ens;
    const json& v = j.at("ensemble");
    if (!v.is_object()) throw ValidationError("ensemble", "expected an object");
    if (v.contains("count")) {
        if (!v["count"].is_number_integer() || v["count"].get<long long>() < 1) {
            throw ValidationError("ensemble.count", "must be a positive integer");
        }
        ens.count = v["count"].get<std::size_t>();
    }
    ens.radius = number_or(v, "radius", ens.radius, "ensemble.");
    if (v.contains("seed")) {
        const json& seed = v["seed"];
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
            throw ValidationError("ensemble.seed", "must be an unsigned 64-bit integer");
        }
        ens.seed = v["seed"].get<std::uint64_t>();
    }
    ens.tail_fraction = number_or(v, "tail_fraction", ens.tail_fraction, "ensemble.");
    validate(ens);
    return ens;
}

NetworkState parse_initial(const json& v, const ModelParams& p) {
    const std::size_t m = node_count(p);
    if (!v.is_object()) throw ValidationError("initial", "expected {u, rho}");
    NetworkState s;
    s.u = as_vector(require(v, "u"), "initial.u", m);
    s.rho = v.contains("rho") ? as_number(v["rho"], "initial.rho") : 0.0;
    if (const auto* q = std::get_if<HebbianParams>(&p)) {
        s.weights = v.contains("w") ? as_matrix(v["w"], "initial.w", m) : q->w0;
    }
    return s;
}

json matrix_json(const SquareMatrix& M) {
    json rows = json::array();
    for (std::size_t i = 0; i < M.size(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < M.size(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return rows;
}

json number_json(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

double number_from_json(const json& v, const std::string& field) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw ValidationError(field, "expected a number");
}

json optional_json(const std::optional<double>& x) {
    return x ? number_json(*x) : json(nullptr);
}

std::optional<double> optional_from_json(const json& v, const std::string& field) {
    if (v.is_null()) return std::nullopt;
    return number_from_json(v, field);
}

}  // namespace

RunConfig parse_config(const json& j, const std::optional<std::string>& model_override) {
    if (!j.is_object()) throw ValidationError("<root>", "config must be a JSON object");
    std::string model;
    if (model_override) {
        model = *model_override;
    } else {
        const json& v = require(j, "model");
        if (!v.is_string()) throw ValidationError("model", "expected \"mhnn\" or \"hebbian\"");
        model = v.get<std::string>();
    }
    const json& mj = require(j, "m");
    if (!mj.is_number_integer() || mj.get<long long>() < 2) {
        throw ValidationError("m", "node count must be an integer >= 2");
    }
    const auto m = mj.get<std::size_t>();

    RunConfig cfg;
    if (model == "mhnn") {
        cfg.params = parse_mhnn(j, m);
    } else if (model == "hebbian") {
        cfg.params = parse_hebbian(j, m);
    } else {
        throw ValidationError("model", "unknown model '" + model + "' (expected mhnn or hebbian)");
    }
    validate(cfg.params);
    cfg.integrator = parse_integrator(j);
    cfg.ensemble = parse_ensemble(j);
    if (j.contains("epsilon")) {
        cfg.epsilon = as_number(j.at("epsilon"), "epsilon");
        if (!(*cfg.epsilon > 0.0)) throw ValidationError("epsilon", "must be > 0");
    }
    if (j.contains("initial")) cfg.initial = parse_initial(j.at("initial"), cfg.params);
    return cfg;
}

RunConfig load_config(const std::string& path, const std::optional<std::string>& model_override) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigParseError("malformed JSON in '" + path + "': " + e.what());
    }
    return parse_config(j, model_override);
}

json params_to_json(const ModelParams& p) {
    json j;
    std::visit(
        [&j](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            j["m"] = q.m;
            j["a"] = q.a;
            j["b"] = q.b;
            j["eta"] = q.eta;
            j["J"] = q.J;
            j["gamma"] = q.gamma;
            j["P"] = q.P;
            json acts = json::array();
            for (const auto& f : q.activations) {
                acts.push_back({{"kind", to_string(f.kind)}, {"beta", f.beta}});
            }
            j["activations"] = acts;
            if constexpr (std::is_same_v<T, MhnnParams>) {
                j["model"] = "mhnn";
                j["k"] = q.k;
                j["w"] = matrix_json(q.w);
                j["r"] = q.r;
                j["V"] = q.V;
                j["coupling"] = to_string(q.coupling);
            } else {
                j["model"] = "hebbian";
                j["k"] = q.k;
                j["c"] = matrix_json(q.c);
                j["lambda"] = matrix_json(q.lambda);
                j["w0"] = matrix_json(q.w0);
                j["coupling"] = "linear";
            }
        },
        p);
    return j;
}

json constants_to_json(const ModelParams& p, const DerivedConstants& dc, const Extremes& e,
                       double absorb_time_radius) {
    json j;
    const bool heb = dc.model == ModelKind::Hebbian;
    j["model"] = heb ? "hebbian" : "mhnn";
    j[heb ? "C3" : "C1"] = number_json(dc.scaling);
    j[heb ? "C4" : "C2"] = number_json(dc.forcing);
    j[heb ? "sigma" : "mu"] = number_json(dc.dissipation);
    j[heb ? "G" : "Q"] = number_json(dc.ultimate_bound);
    j["T_B"] = number_json(absorb_time_radius);
    j["extremes"] = {
        {"a_min", e.a_min},         {"W_max", e.W_max},     {"J_max", e.J_max},
        {"gamma_max", e.gamma_max}, {"a_star", e.a_star},   {"W_star", e.W_star},
        {"eta_star", e.eta_star},   {"J_star", e.J_star},   {"W0_star", e.W0_star},
        {"beta", e.beta},           {"eta_min", e.eta_min}, {"k_max", e.k_max},
        {"lambda_max", e.lambda_max}, {"c_min", e.c_min},
    };
    j["params_digest"] = params_digest(p);
    return j;
}

json threshold_to_json(const Threshold& th, double epsilon, double P) {
    return {
        {"epsilon", epsilon},
        {"p_star", number_json(th.p_star)},
        {"rate_base", number_json(th.budget.rate_base)},
        {"rate_slope", number_json(th.budget.rate_slope)},
        {"P", P},
        {"rate_at_P", number_json(th.rate_at(P))},
        {"residual_at_P", number_json(th.budget.residual(P))},
        {"synchronizes", P > th.p_star},
    };
}

json report_to_json(const SyncReport& r) {
    json entries = json::array();
    for (const auto& t : r.entry_times) entries.push_back(optional_json(t));
    json violations = json::array();
    for (const auto& v : r.violations) {
        violations.push_back({{"trajectory", v.trajectory},
                              {"time", number_json(v.time)},
                              {"measured", number_json(v.measured)},
                              {"bound", number_json(v.bound)},
                              {"kind", to_string(v.kind)}});
    }
    json j;
    j["deg_estimate"] = number_json(r.deg_estimate);
    j["epsilon"] = number_json(r.epsilon);
    j["p_used"] = number_json(r.p_used);
    j["p_star"] = number_json(r.p_star);
    j["entry_times"] = entries;
    j["violations"] = violations;
    j["fitted_rate"] = optional_json(r.fitted_rate);
    j["rate_theory"] = number_json(r.rate_theory);
    j["verdict"] = r.pass ? "pass" : "fail";
    return j;
}

SyncReport report_from_json(const json& j) {
    SyncReport r;
    r.deg_estimate = number_from_json(require(j, "deg_estimate"), "deg_estimate");
    r.epsilon = number_from_json(require(j, "epsilon"), "epsilon");
    r.p_used = number_from_json(require(j, "p_used"), "p_used");
    r.p_star = number_from_json(require(j, "p_star"), "p_star");
    for (const auto& t : require(j, "entry_times")) {
        r.entry_times.push_back(optional_from_json(t, "entry_times"));
    }
    for (const auto& v : require(j, "violations")) {
        Violation x;
        x.trajectory = require(v, "trajectory").get<std::size_t>();
        x.time = number_from_json(require(v, "time"), "violations.time");
        x.measured = number_from_json(require(v, "measured"), "violations.measured");
        x.bound = number_from_json(require(v, "bound"), "violations.bound");
        x.kind = violation_kind_from_string(require(v, "kind").get<std::string>());
        r.violations.push_back(x);
    }
    r.fitted_rate = optional_from_json(require(j, "fitted_rate"), "fitted_rate");
    r.rate_theory = number_from_json(require(j, "rate_theory"), "rate_theory");
    r.pass = require(j, "verdict") == "pass";
    return r;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    if (traj.states.empty()) return;
    const std::size_t m = traj.states.front().u.size();
    const bool weights = traj.states.front().weights.has_value();
    os << "t";
    for (std::size_t i = 1; i <= m; ++i) os << ",u" << i;
    os << ",rho";
    if (weights) {
        for (std::size_t i = 1; i <= m; ++i) {
            for (std::size_t j = 1; j <= m; ++j) os << ",w" << i << j;
        }
    }
    os << '\n';
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const NetworkState& s = traj.states[k];
        os << format_double(traj.times[k]);
        for (double x : s.u) os << ',' << format_double(x);
        os << ',' << format_double(s.rho);
        if (weights) {
            for (double x : s.weights->data()) os << ',' << format_double(x);
        }
        os << '\n';
    }
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "P,deg_estimate,p_star,rate_theory,rate_fitted,verdict\n";
    for (const auto& r : rows) {
        os << format_double(r.P) << ',' << format_double(r.deg_estimate) << ','
           << format_double(r.p_star) << ',' << format_double(r.rate_theory) << ','
           << (r.rate_fitted ? format_double(*r.rate_fitted) : std::string("nan")) << ','
           << r.verdict << '\n';
    }
}

}  // namespace memsync
