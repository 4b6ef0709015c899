#pragma once

#include "memsync/model.hpp"

namespace memsync {

/// Extremal parameter statistics used by every closed-form bound.
/// Starred quantities are maximal pairwise mismatches between nodes.
struct Extremes {
    double a_min = 0, a_max = 0;
    double W_max = 0;  // max |w_ij|  (Hebbian: max |w0_ij|)
    double J_max = 0;
    double gamma_max = 0;
    double a_star = 0, W_star = 0, eta_star = 0, J_star = 0;
    double W0_star = 0;  // Hebbian only; mirrors W_star of w0
    double beta = 0;     // uniform activation bound, max_i beta_i
    double eta_min = 0, eta_max = 0;
    double k_max = 0;
    double lambda_max = 0;  // Hebbian only
    double c_min = 0;       // Hebbian only

    bool operator==(const Extremes&) const = default;
};

enum class ModelKind { Mhnn, Hebbian };

/// Dissipativity constants. For the static-weight model the fields hold
/// (C1, C2, mu, Q); for the Hebbian model (C3, C4, sigma, G).
struct DerivedConstants {
    ModelKind model = ModelKind::Mhnn;
    double scaling = 0;         // C1 | C3
    double forcing = 0;         // C2 | C4
    double dissipation = 0;     // mu | sigma
    double ultimate_bound = 0;  // Q | G, bound on ||(u, rho)||^2
};

Extremes derive_extremes(const MhnnParams& p);
Extremes derive_extremes(const HebbianParams& p);
Extremes derive_extremes(const ModelParams& p);

/// Throws ValidationError when the model assumption fails.
DerivedConstants derive_constants(const MhnnParams& p);
DerivedConstants derive_constants(const HebbianParams& p);
DerivedConstants derive_constants(const ModelParams& p);

/// Time after which every trajectory started in ||g||^2 <= L stays in the
/// absorbing ball.
double absorb_time(const DerivedConstants& dc, double L);

/// Upper bound on ||g(t)||^2 given ||g(0)||^2.
double dissipative_envelope(const DerivedConstants& dc, double t, double g0_norm_sq);

/// Ingredients of the synchronization threshold for one parameter set.
///
/// With N the mismatch numerator and B the sigmoid saturation factor
/// (B = 1 for diffusive coupling):
///   p_star(eps)  = N B / (m eps)
///   rate(P)      = rate_base + rate_slope P
///   residual(P)  = N / (residual_base + m P / B)
/// residual(P) bounds the asymptotic pairwise gap for any P >= 0.
struct SyncBudget {
    double numerator = 0;
    double saturation = 1;
    double m = 2;
    double rate_base = 0;
    double rate_slope = 0;
    double residual_base = 0;

    double p_star(double epsilon) const;
    double rate(double P) const { return rate_base + rate_slope * P; }
    double residual(double P) const;
};

SyncBudget sync_budget(const ModelParams& p, const DerivedConstants& dc);
SyncBudget sync_budget(const ModelParams& p);

struct Threshold {
    double p_star = 0;
    SyncBudget budget;

    double rate_at(double P) const { return budget.rate(P); }
};

/// Throws std::invalid_argument for epsilon <= 0.
Threshold threshold(const ModelParams& p, double epsilon);

/// exp(-rate(P) t) * gap_at_entry_sq + residual(P)^2
double gap_envelope(const ModelParams& p, const DerivedConstants& dc, double P,
                    double t_since_entry, double gap_at_entry_sq);

/// Bound on w_ij(t)^2 - w_ij(0)^2 for the Hebbian model: lambda_max^2 beta^4 / c_min^2.
double weight_excess_bound(const HebbianParams& p);

}  // namespace memsync
