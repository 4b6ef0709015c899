#include "memsync/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace memsync {

namespace {

double max_abs(std::span<const double> v) {
    double r = 0.0;
    for (double x : v) r = std::max(r, std::abs(x));
    return r;
}

// max_{ij} |v_i - v_j|
double spread(std::span<const double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

// max_{i,j,l} |M_il - M_jl|, i.e. the largest column spread
double row_mismatch(const SquareMatrix& M) {
    const std::size_t n = M.size();
    double r = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        double lo = M(0, l), hi = M(0, l);
        for (std::size_t i = 1; i < n; ++i) {
            lo = std::min(lo, M(i, l));
            hi = std::max(hi, M(i, l));
        }
        r = std::max(r, hi - lo);
    }
    return r;
}

double beta_max(const std::vector<ActivationSpec>& acts) {
    double b = 0.0;
    for (const auto& f : acts) b = std::max(b, f.beta);
    return b;
}

template <class Params>
Extremes common_extremes(const Params& p) {
    Extremes e;
    e.a_min = *std::min_element(p.a.begin(), p.a.end());
    e.a_max = *std::max_element(p.a.begin(), p.a.end());
    e.J_max = max_abs(p.J);
    e.gamma_max = max_abs(p.gamma);
    e.a_star = spread(p.a);
    e.eta_star = spread(p.eta);
    e.J_star = spread(p.J);
    e.beta = beta_max(p.activations);
    e.eta_min = *std::min_element(p.eta.begin(), p.eta.end());
    e.eta_max = *std::max_element(p.eta.begin(), p.eta.end());
    return e;
}

// sqrt(1 + lambda^2 beta^4 / c^2): bound on |w_ij(t)| when w_ij(0) in {0, 1}
double weight_bound(const Extremes& e) {
    const double q = e.lambda_max * e.beta * e.beta / e.c_min;
    return std::sqrt(1.0 + q * q);
}

DerivedConstants finish(ModelKind model, double scaling, double forcing, double b) {
    DerivedConstants dc;
    dc.model = model;
    dc.scaling = scaling;
    dc.forcing = forcing;
    dc.dissipation = b * std::min(1.0 / scaling, 1.0);
    dc.ultimate_bound = 1.0 + forcing / (dc.dissipation * std::min(scaling, 1.0));
    return dc;
}

}  // namespace

Extremes derive_extremes(const MhnnParams& p) {
    Extremes e = common_extremes(p);
    e.W_max = max_abs(p.w.data());
    e.W_star = row_mismatch(p.w);
    e.k_max = p.k;
    return e;
}

Extremes derive_extremes(const HebbianParams& p) {
    Extremes e = common_extremes(p);
    e.W_max = max_abs(p.w0.data());
    e.W0_star = row_mismatch(p.w0);
    e.W_star = e.W0_star;
    e.k_max = *std::max_element(p.k.begin(), p.k.end());
    e.lambda_max = max_abs(p.lambda.data());
    e.c_min = *std::min_element(p.c.data().begin(), p.c.data().end());
    return e;
}

Extremes derive_extremes(const ModelParams& p) {
    return std::visit([](const auto& q) { return derive_extremes(q); }, p);
}

DerivedConstants derive_constants(const MhnnParams& p) {
    validate(p);
    const Extremes e = derive_extremes(p);
    const double m = static_cast<double>(p.m);
    const double gap = e.a_min - p.k;
    const double drive = m * e.gamma_max * e.gamma_max / p.b + p.b;
    const double source = m * e.W_max * e.beta + e.J_max;
    const double C1 = drive / gap;
    const double C2 = drive * m * source * source / (gap * gap);
    return finish(ModelKind::Mhnn, C1, C2, p.b);
}

DerivedConstants derive_constants(const HebbianParams& p) {
    validate(p);
    const Extremes e = derive_extremes(p);
    const double m = static_cast<double>(p.m);
    const double gap = e.a_min - 0.5 * e.k_max * e.eta_min * e.eta_min;
    const double drive = m * e.gamma_max * e.gamma_max / p.b + 0.5 * p.b;
    const double source = e.J_max + m * e.beta * weight_bound(e);
    const double C3 = drive / gap;
    const double C4 = drive * source * source / (gap * gap);
    return finish(ModelKind::Hebbian, C3, C4, p.b);
}

DerivedConstants derive_constants(const ModelParams& p) {
    return std::visit([](const auto& q) { return derive_constants(q); }, p);
}

double absorb_time(const DerivedConstants& dc, double L) {
    if (!(L > 0.0)) throw std::invalid_argument("absorb_time: L must be > 0");
    const double ratio = std::max(dc.scaling, 1.0) / std::min(dc.scaling, 1.0);
    return std::max(0.0, std::log(L * ratio)) / dc.dissipation;
}

double dissipative_envelope(const DerivedConstants& dc, double t, double g0_norm_sq) {
    const double lo = std::min(dc.scaling, 1.0);
    const double ratio = std::max(dc.scaling, 1.0) / lo;
    return ratio * std::exp(-dc.dissipation * t) * g0_norm_sq + dc.forcing / (dc.dissipation * lo);
}

double SyncBudget::p_star(double epsilon) const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    return numerator * saturation / (m * epsilon);
}

double SyncBudget::residual(double P) const {
    if (numerator == 0.0) return 0.0;
    return numerator / (residual_base + m * P / saturation);
}

SyncBudget sync_budget(const ModelParams& p, const DerivedConstants& dc) {
    const Extremes e = derive_extremes(p);
    SyncBudget s;
    s.m = static_cast<double>(node_count(p));
    const double bound = dc.ultimate_bound;
    const double root = std::sqrt(bound);
    if (const auto* q = std::get_if<MhnnParams>(&p)) {
        s.numerator = s.m * e.W_star * e.beta + e.a_star * root +
                      q->k * e.eta_star * bound * root + e.J_star;
        s.rate_base = e.a_min - q->k;
        s.residual_base = s.rate_base;
        if (q->coupling == CouplingKind::WeakSigmoidal) {
            s.saturation = 1.0 + std::exp(q->r * (root + std::abs(q->V)));
            s.rate_slope = s.m / s.saturation;
        } else {
            s.saturation = 1.0;
            s.rate_slope = 1.0;
        }
    } else {
        s.numerator = e.a_star * root + e.k_max * e.eta_star * bound * root +
                      2.0 * s.m * e.beta * weight_bound(e) + e.J_star;
        s.saturation = 1.0;
        s.rate_base = e.a_min - 0.5 * e.k_max * e.eta_min;
        s.rate_slope = s.m;
        s.residual_base = s.rate_base;
    }
    return s;
}

SyncBudget sync_budget(const ModelParams& p) { return sync_budget(p, derive_constants(p)); }

Threshold threshold(const ModelParams& p, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    Threshold t;
    t.budget = sync_budget(p);
    t.p_star = t.budget.p_star(epsilon);
    return t;
}

double gap_envelope(const ModelParams& p, const DerivedConstants& dc, double P,
                    double t_since_entry, double gap_at_entry_sq) {
    const SyncBudget s = sync_budget(p, dc);
    const double R = s.residual(P);
    return std::exp(-s.rate(P) * t_since_entry) * gap_at_entry_sq + R * R;
}

double weight_excess_bound(const HebbianParams& p) {
    const Extremes e = derive_extremes(p);
    const double q = e.lambda_max * e.beta * e.beta / e.c_min;
    return q * q;
}

}  // namespace memsync
