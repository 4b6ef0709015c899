#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace memsync {

/// Raised when a parameter set or state violates a structural or analytic
/// precondition. `field()` names the offending parameter (e.g. "a[1]", "k").
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Dense row-major square matrix.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const SquareMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

enum class ActivationKind { TanhScaled, LogisticCentered, SineClamped };

/// Bounded activation f with |f(s)| <= beta.
struct ActivationSpec {
    ActivationKind kind = ActivationKind::TanhScaled;
    double beta = 1.0;

    double operator()(double s) const;
    bool operator==(const ActivationSpec&) const = default;
};

enum class CouplingKind { WeakSigmoidal, Linear };
enum class WindowKind { Quadratic, StrukovWilliams };

/// Memristive Hopfield network with static weights.
struct MhnnParams {
    std::size_t m = 0;
    std::vector<double> a;    // self-decay
    double b = 1.0;           // memristor decay
    double k = 0.0;           // memristive coupling strength
    std::vector<double> eta;  // window curvature
    SquareMatrix w;           // synaptic weights
    std::vector<double> J;    // input currents
    std::vector<double> gamma;
    double P = 0.0;           // network coupling strength
    double r = 1.0;           // sigmoid slope
    double V = 0.0;           // bursting switch
    std::vector<ActivationSpec> activations;
    CouplingKind coupling = CouplingKind::WeakSigmoidal;

    bool operator==(const MhnnParams&) const = default;
};

/// Memristive Hopfield network whose weights follow a Hebbian rule.
/// Always uses linear (diffusive) interneuron coupling.
struct HebbianParams {
    std::size_t m = 0;
    std::vector<double> a;
    double b = 1.0;
    std::vector<double> k;  // per-node memristive strength
    std::vector<double> eta;
    std::vector<double> J;
    std::vector<double> gamma;
    double P = 0.0;
    std::vector<ActivationSpec> activations;
    SquareMatrix c;       // weight decay, entries > 0
    SquareMatrix lambda;  // Hebbian coefficients
    SquareMatrix w0;      // initial connectivity, entries in {0, 1}

    bool operator==(const HebbianParams&) const = default;
};

using ModelParams = std::variant<MhnnParams, HebbianParams>;

/// State g = (u, rho) or (u, W, rho). The squared norm covers (u, rho) only.
struct NetworkState {
    std::vector<double> u;
    double rho = 0.0;
    std::optional<SquareMatrix> weights;

    double norm_sq() const;
    std::size_t flat_size() const;
    /// Layout: u_1..u_m, rho, then weights row-major.
    std::vector<double> to_flat() const;
    static NetworkState from_flat(std::span<const double> y, std::size_t m, bool has_weights);

    bool operator==(const NetworkState&) const = default;
};

/// Right-hand side on the flat layout used by the integrators.
using VectorField = std::function<void(std::span<const double> y, std::span<double> dydt)>;

/// Overflow-safe logistic 1/(1 + exp(-r(s - V))).
double sigmoid_gamma(double s, double r, double V);

/// quadratic: 1 - eta*rho^2; strukov-williams: rho*(eta - rho).
double window_eval(WindowKind kind, double rho, double eta);

void validate(const MhnnParams& p);
void validate(const HebbianParams& p);
void validate(const ModelParams& p);

std::size_t node_count(const ModelParams& p);
double coupling_strength(const ModelParams& p);
void set_coupling_strength(ModelParams& p, double P);
bool is_hebbian(const ModelParams& p);

/// Flat-layout evaluators; `scratch` must hold at least m doubles.
void mhnn_rhs_into(const MhnnParams& p, std::span<const double> y, std::span<double> dydt,
                   std::span<double> scratch);
void hebbian_rhs_into(const HebbianParams& p, std::span<const double> y, std::span<double> dydt,
                      std::span<double> scratch);

/// Returns the time derivative, packaged as a NetworkState.
NetworkState mhnn_rhs(const MhnnParams& p, const NetworkState& s);
NetworkState hebbian_rhs(const HebbianParams& p, const NetworkState& s);

/// Owns a copy of the parameters and its own scratch space.
VectorField make_vector_field(const ModelParams& p);

/// FNV-1a digest over every numeric field; stable for equal parameter sets.
std::string params_digest(const ModelParams& p);

std::string to_string(ActivationKind kind);
ActivationKind activation_kind_from_string(const std::string& name);
std::string to_string(CouplingKind kind);

}  // namespace memsync
