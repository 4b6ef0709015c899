#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsync/model.hpp"

namespace memsync {

enum class Method { Rk4Fixed, Rk45Adaptive };

/// Unset `dt`, `t_end` and `record_stride` are resolved from the model
/// (see resolve_integrator in analysis.hpp).
struct IntegratorConfig {
    Method method = Method::Rk4Fixed;
    std::optional<double> dt;     // fixed step, or initial step for rk45
    std::optional<double> t_end;
    std::optional<std::size_t> record_stride;
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;

    bool operator==(const IntegratorConfig&) const = default;
};

/// Throws ValidationError unless dt and t_end are set and consistent.
/// An unset record_stride means every step.
void validate(const IntegratorConfig& cfg);

/// Non-finite or runaway state (|y_i| > 1e12).
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(double time, const std::string& what)
        : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<NetworkState> states;
    std::string params_digest;
};

/// Called for every recorded sample.
using Observer = std::function<void(double t, std::span<const double> y)>;

inline constexpr double kBlowUpThreshold = 1e12;

/// Integrates on the flat layout. Records t = 0, every record_stride-th
/// accepted step and the final state at exactly t_end.
void integrate_flat(const VectorField& rhs, std::vector<double> y0, const IntegratorConfig& cfg,
                    const Observer& observe);

Trajectory integrate(const VectorField& rhs, const NetworkState& s0, const IntegratorConfig& cfg,
                     std::string params_digest = {});

std::string to_string(Method method);
Method method_from_string(const std::string& name);

}  // namespace memsync
