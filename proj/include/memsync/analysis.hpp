#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsync/constants.hpp"
#include "memsync/integrate.hpp"
#include "memsync/model.hpp"

namespace memsync {

/// Finite ensemble standing in for the supremum over initial states.
struct EnsembleSpec {
    std::size_t count = 8;
    double radius = 10.0;  // ||g0|| <= radius
    std::uint64_t seed = 0;
    double tail_fraction = 0.2;

    bool operator==(const EnsembleSpec&) const = default;
};

void validate(const EnsembleSpec& ens);

/// Uniform sample from the (u, rho) ball of the given radius. Hebbian states
/// start from the configured connectivity w0. Member `index` draws from
/// Philox stream `index` keyed by the ensemble seed.
NetworkState sample_initial_state(const ModelParams& p, const EnsembleSpec& ens,
                                  std::size_t index);
std::vector<NetworkState> sample_initial_states(const ModelParams& p, const EnsembleSpec& ens);

/// Fills unset integrator fields for coupling strength P:
///   t_end = max(5 T_B(radius^2), 20 / rate(P))
///   dt    = 1e-3 / max(a_max, b, k_max eta_max Q, m P [, c_max])
///   record_stride: 1 for rk45, otherwise about 1e5 samples per run.
IntegratorConfig resolve_integrator(const ModelParams& p, IntegratorConfig cfg,
                                    const EnsembleSpec& ens);

struct TimeSeries {
    std::vector<double> t;
    std::vector<double> v;
};

/// max_{i<j} |u_i - u_j| at each recorded time.
TimeSeries pairwise_gap_series(const Trajectory& traj);

/// Max over trajectories of the largest gap in the final tail_fraction of the
/// horizon.
double estimate_sync_degree(std::span<const Trajectory> trajs, double tail_fraction);

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Least-squares decay rate of ln(gap - floor) from the start of the series
/// until the gap first drops below max(2 floor, 1e-9). Positive means
/// decaying. Throws FitError with fewer than 5 usable points.
double fit_decay_rate(const TimeSeries& gap, double floor);

enum class ViolationKind { Dissipative, GapEnvelope, WeightBound };

struct Violation {
    std::size_t trajectory = 0;
    double time = 0;
    double measured = 0;
    double bound = 0;
    ViolationKind kind = ViolationKind::Dissipative;

    bool operator==(const Violation&) const = default;
};

struct SyncReport {
    double deg_estimate = 0;
    double epsilon = 0;
    double p_used = 0;
    double p_star = 0;
    std::vector<std::optional<double>> entry_times;  // empty optional: never settled in the ball
    std::vector<Violation> violations;
    std::optional<double> fitted_rate;
    double rate_theory = 0;
    bool pass = false;

    bool operator==(const SyncReport&) const = default;
};

/// One recorded sample reduced to what the checks need.
struct SampleSummary {
    double t = 0;
    double norm_sq = 0;
    double gap = 0;
};

struct MemberAnalysis {
    std::vector<SampleSummary> samples;
    std::optional<std::size_t> entry_index;
    std::optional<double> entry_time;
    double tail_gap = 0;
    std::optional<double> fitted_rate;
    std::vector<Violation> violations;
};

/// Stored violations are capped per trajectory and kind.
inline constexpr std::size_t kMaxViolationsPerKind = 100;

/// Integrates one ensemble member and runs every check on it.
/// `cfg` must already be resolved.
MemberAnalysis analyze_member(const ModelParams& p, const IntegratorConfig& cfg,
                              const NetworkState& s0, std::size_t id, double tail_fraction);

/// Runs the ensemble at the coupling strength stored in `p`.
/// Propagates IntegrationError; envelope violations are reported, not thrown.
SyncReport verify_guarantees(const ModelParams& p, const IntegratorConfig& cfg,
                             const EnsembleSpec& ens, double epsilon);

struct SweepRow {
    double P = 0;
    double deg_estimate = 0;
    double p_star = 0;
    double rate_theory = 0;
    std::optional<double> rate_fitted;
    std::string verdict;  // "pass", "fail" or "error"
    std::string error;
};

/// verify_guarantees for each P (same seed), rows ordered by P.
std::vector<SweepRow> sweep_coupling(const ModelParams& p, const IntegratorConfig& cfg,
                                     const EnsembleSpec& ens, std::span<const double> p_values,
                                     double epsilon);

std::string to_string(ViolationKind kind);
ViolationKind violation_kind_from_string(const std::string& name);

}  // namespace memsync
