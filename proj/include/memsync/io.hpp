#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "memsync/analysis.hpp"
#include "memsync/constants.hpp"
#include "memsync/integrate.hpp"
#include "memsync/model.hpp"

namespace memsync {

/// Unreadable file or malformed JSON.
class ConfigParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    ModelParams params;
    IntegratorConfig integrator;
    EnsembleSpec ensemble;
    std::optional<double> epsilon;
    std::optional<NetworkState> initial;  // optional explicit start for `simulate`
};

/// `model_override` replaces the config's "model" key ("mhnn" | "hebbian").
/// Throws ConfigParseError or ValidationError (with the offending field).
RunConfig parse_config(const nlohmann::json& j, const std::optional<std::string>& model_override = {});
RunConfig load_config(const std::string& path, const std::optional<std::string>& model_override = {});

nlohmann::json params_to_json(const ModelParams& p);
nlohmann::json constants_to_json(const ModelParams& p, const DerivedConstants& dc,
                                 const Extremes& e, double absorb_time_radius);
nlohmann::json threshold_to_json(const Threshold& th, double epsilon, double P);

nlohmann::json report_to_json(const SyncReport& r);
SyncReport report_from_json(const nlohmann::json& j);

/// Doubles are written with 17 significant digits.
std::string format_double(double x);

/// Header: t,u1..um,rho[,w11..wmm]
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// Header: P,deg_estimate,p_star,rate_theory,rate_fitted,verdict
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace memsync
