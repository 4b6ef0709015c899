#include "memsync/cli.hpp"

#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "memsync/analysis.hpp"
#include "memsync/constants.hpp"
#include "memsync/integrate.hpp"
#include "memsync/io.hpp"
#include "memsync/model.hpp"

namespace memsync::cli {

namespace {

struct Options {
    std::string config;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> model;
    std::optional<double> epsilon;
    std::optional<double> coupling;
    std::optional<double> p_factor;
    std::vector<double> p_values;
    std::vector<double> p_factors;
    std::size_t member = 0;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

RunConfig load(const Options& opt) {
    RunConfig cfg = load_config(opt.config, opt.model);
    if (opt.seed) cfg.ensemble.seed = *opt.seed;
    if (opt.coupling) {
        if (!(*opt.coupling >= 0.0)) throw ValidationError("P", "coupling strength must be >= 0");
        set_coupling_strength(cfg.params, *opt.coupling);
    }
    return cfg;
}

double resolve_epsilon(const Options& opt, const RunConfig& cfg) {
    const std::optional<double> eps = opt.epsilon ? opt.epsilon : cfg.epsilon;
    if (!eps) throw ValidationError("epsilon", "required (config key or --epsilon)");
    if (!(*eps > 0.0)) throw ValidationError("epsilon", "must be > 0");
    return *eps;
}

void emit_json(const nlohmann::json& j, std::ostream& os) { os << j.dump(2) << '\n'; }

int run_constants(const Options& opt, std::ostream& os) {
    const RunConfig cfg = load(opt);
    const DerivedConstants dc = derive_constants(cfg.params);
    const double L = cfg.ensemble.radius * cfg.ensemble.radius;
    emit_json(constants_to_json(cfg.params, dc, derive_extremes(cfg.params), absorb_time(dc, L)), os);
    return kExitOk;
}

int run_threshold(const Options& opt, std::ostream& os) {
    const RunConfig cfg = load(opt);
    const double eps = resolve_epsilon(opt, cfg);
    emit_json(threshold_to_json(threshold(cfg.params, eps), eps, coupling_strength(cfg.params)), os);
    return kExitOk;
}

int run_simulate(const Options& opt, std::ostream& os) {
    const RunConfig cfg = load(opt);
    if (opt.member >= cfg.ensemble.count && !cfg.initial) {
        throw ValidationError("member", "index exceeds ensemble.count");
    }
    const NetworkState s0 =
        cfg.initial ? *cfg.initial : sample_initial_state(cfg.params, cfg.ensemble, opt.member);
    const IntegratorConfig ic = resolve_integrator(cfg.params, cfg.integrator, cfg.ensemble);
    const Trajectory traj =
        integrate(make_vector_field(cfg.params), s0, ic, params_digest(cfg.params));
    write_trajectory_csv(os, traj);
    return kExitOk;
}

int run_verify(const Options& opt, std::ostream& os) {
    RunConfig cfg = load(opt);
    const double eps = resolve_epsilon(opt, cfg);
    if (opt.p_factor) {
        if (!(*opt.p_factor > 0.0)) throw ValidationError("p-factor", "must be > 0");
        set_coupling_strength(cfg.params, *opt.p_factor * threshold(cfg.params, eps).p_star);
    }
    const SyncReport report = verify_guarantees(cfg.params, cfg.integrator, cfg.ensemble, eps);
    emit_json(report_to_json(report), os);
    return report.pass ? kExitOk : kExitVerdictFail;
}

int run_sweep(const Options& opt, std::ostream& os) {
    const RunConfig cfg = load(opt);
    const double eps = resolve_epsilon(opt, cfg);
    std::vector<double> ps = opt.p_values;
    if (!opt.p_factors.empty()) {
        const double p_star = threshold(cfg.params, eps).p_star;
        for (double f : opt.p_factors) ps.push_back(f * p_star);
    }
    if (ps.empty()) throw UsageError("sweep needs --p-values or --p-factors");
    for (double P : ps) {
        if (!(P >= 0.0)) throw ValidationError("p-values", "coupling strengths must be >= 0");
    }
    write_sweep_csv(os, sweep_coupling(cfg.params, cfg.integrator, cfg.ensemble, ps, eps));
    return kExitOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Memristive Hopfield network synchronization toolkit", "memsync"};
    app.require_subcommand(1);
    app.fallthrough();

    Options opt;
    app.add_option("--config", opt.config, "Config JSON path")->required();
    app.add_option("--output", opt.output, "Output path (default stdout)");
    app.add_option("--seed", opt.seed, "Override ensemble seed");
    app.add_option("--model", opt.model, "Override model (mhnn | hebbian)")
        ->check(CLI::IsMember({"mhnn", "hebbian"}));

    auto* constants = app.add_subcommand("constants", "Dissipativity constants as JSON");
    auto* thresh = app.add_subcommand("threshold", "Synchronization threshold as JSON");
    thresh->add_option("--epsilon", opt.epsilon, "Target synchronization gap");
    thresh->add_option("--P", opt.coupling, "Override coupling strength");
    auto* simulate = app.add_subcommand("simulate", "Integrate one ensemble member, CSV out");
    simulate->add_option("--member", opt.member, "Ensemble member index");
    simulate->add_option("--P", opt.coupling, "Override coupling strength");
    auto* verify = app.add_subcommand("verify", "Check every guarantee on the ensemble");
    verify->add_option("--epsilon", opt.epsilon, "Target synchronization gap");
    verify->add_option("--P", opt.coupling, "Override coupling strength");
    verify->add_option("--p-factor", opt.p_factor, "Run at this multiple of p_star(epsilon)");
    auto* sweep = app.add_subcommand("sweep", "Verify across coupling strengths, CSV out");
    sweep->add_option("--epsilon", opt.epsilon, "Target synchronization gap");
    sweep->add_option("--p-values", opt.p_values, "Coupling strengths")->delimiter(',');
    sweep->add_option("--p-factors", opt.p_factors, "Multiples of p_star(epsilon)")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    std::function<int(const Options&, std::ostream&)> run;
    if (*constants) run = run_constants;
    if (*thresh) run = run_threshold;
    if (*simulate) run = run_simulate;
    if (*verify) run = run_verify;
    if (*sweep) run = run_sweep;

    try {
        if (opt.output.empty()) return run(opt, out);
        std::ostringstream buffer;
        const int code = run(opt, buffer);
        std::ofstream file(opt.output, std::ios::binary);
        if (!file) {
            err << "error: cannot write '" << opt.output << "'\n";
            return kExitUsage;
        }
        file << buffer.str();
        return code;
    } catch (const ConfigParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const IntegrationError& e) {
        err << "numerical blow-up: " << e.what() << '\n';
        return kExitBlowUp;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    }
}

}  // namespace memsync::cli
