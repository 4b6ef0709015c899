#include "memsync/analysis.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "memsync/philox.hpp"

namespace memsync {

namespace {

double tolerance(double bound) { return 1e-6 * (1.0 + bound); }

double gap_of(std::span<const double> u) {
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    return *hi - *lo;
}

// Runs fn(i) for i in [0, n) on a small pool; results are written by index so
// the outcome does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers =
        std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    // lowest index wins, as in the sequential fold
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

void push_capped(std::vector<Violation>& out, std::array<std::size_t, 3>& counts, Violation v) {
    auto& c = counts[static_cast<std::size_t>(v.kind)];
    if (c++ < kMaxViolationsPerKind) out.push_back(v);
}

}  // namespace

void validate(const EnsembleSpec& ens) {
    if (ens.count < 1) throw ValidationError("ensemble.count", "must be >= 1");
    if (!(ens.radius > 0.0) || !std::isfinite(ens.radius)) {
        throw ValidationError("ensemble.radius", "must be a finite positive radius");
    }
    if (!(ens.tail_fraction > 0.0 && ens.tail_fraction < 1.0)) {
        throw ValidationError("ensemble.tail_fraction", "must lie in (0, 1)");
    }
}

NetworkState sample_initial_state(const ModelParams& p, const EnsembleSpec& ens,
                                  std::size_t index) {
    const std::size_t m = node_count(p);
    const std::size_t dim = m + 1;
    PhiloxStream rng(ens.seed, index);
    std::vector<double> x(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& xi : x) {
            xi = rng.normal();
            norm += xi * xi;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    const double scale = ens.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim)) / norm;
    NetworkState s;
    s.u.resize(m);
    for (std::size_t i = 0; i < m; ++i) s.u[i] = x[i] * scale;
    s.rho = x[m] * scale;
    if (const auto* q = std::get_if<HebbianParams>(&p)) s.weights = q->w0;
    return s;
}

std::vector<NetworkState> sample_initial_states(const ModelParams& p, const EnsembleSpec& ens) {
    std::vector<NetworkState> out;
    out.reserve(ens.count);
    for (std::size_t i = 0; i < ens.count; ++i) out.push_back(sample_initial_state(p, ens, i));
    return out;
}

IntegratorConfig resolve_integrator(const ModelParams& p, IntegratorConfig cfg,
                                    const EnsembleSpec& ens) {
    const DerivedConstants dc = derive_constants(p);
    const Extremes e = derive_extremes(p);
    const double m = static_cast<double>(node_count(p));
    const double P = coupling_strength(p);
    if (!cfg.t_end) {
        const SyncBudget budget = sync_budget(p, dc);
        const double settle = 5.0 * absorb_time(dc, ens.radius * ens.radius);
        cfg.t_end = std::max(settle, 20.0 / budget.rate(P));
    }
    if (!cfg.dt) {
        const double b = std::visit([](const auto& q) { return q.b; }, p);
        double stiff = std::max({e.a_max, b, e.k_max * e.eta_max * dc.ultimate_bound, m * P});
        if (const auto* q = std::get_if<HebbianParams>(&p)) {
            stiff = std::max(stiff, *std::max_element(q->c.data().begin(), q->c.data().end()));
        }
        cfg.dt = std::min(1e-3 / stiff, 0.5 * *cfg.t_end);
    }
    if (!cfg.record_stride) {
        if (cfg.method == Method::Rk45Adaptive) {
            cfg.record_stride = 1;
        } else {
            const double steps = std::ceil(*cfg.t_end / *cfg.dt);
            cfg.record_stride = std::max<std::size_t>(1, static_cast<std::size_t>(steps / 1e5));
        }
    }
    return cfg;
}

TimeSeries pairwise_gap_series(const Trajectory& traj) {
    TimeSeries out;
    out.t = traj.times;
    out.v.reserve(traj.states.size());
    for (const auto& s : traj.states) out.v.push_back(gap_of(s.u));
    return out;
}

double estimate_sync_degree(std::span<const Trajectory> trajs, double tail_fraction) {
    if (trajs.empty()) throw std::invalid_argument("estimate_sync_degree: empty ensemble");
    double deg = 0.0;
    for (const auto& traj : trajs) {
        if (traj.times.empty()) throw std::invalid_argument("estimate_sync_degree: empty trajectory");
        const double start = (1.0 - tail_fraction) * traj.times.back();
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            if (traj.times[i] >= start) deg = std::max(deg, gap_of(traj.states[i].u));
        }
    }
    return deg;
}

double fit_decay_rate(const TimeSeries& gap, double floor) {
    const double stop = std::max(2.0 * floor, 1e-9);
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < gap.v.size(); ++i) {
        if (gap.v[i] < stop) break;
        const double y = std::log(gap.v[i] - floor);
        const double t = gap.t[i];
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++n;
    }
    if (n < 5) {
        throw FitError("fit_decay_rate: " + std::to_string(n) +
                       " usable points above the floor (need at least 5)");
    }
    const double dn = static_cast<double>(n);
    const double denom = dn * stt - st * st;
    if (!(denom > 0.0)) throw FitError("fit_decay_rate: degenerate time axis");
    return -(dn * sty - st * sy) / denom;
}

MemberAnalysis analyze_member(const ModelParams& p, const IntegratorConfig& cfg,
                              const NetworkState& s0, std::size_t id, double tail_fraction) {
    const DerivedConstants dc = derive_constants(p);
    const SyncBudget budget = sync_budget(p, dc);
    const double P = coupling_strength(p);
    const std::size_t m = node_count(p);
    const double g0 = s0.norm_sq();
    const auto* heb = std::get_if<HebbianParams>(&p);
    const double w_excess = heb ? weight_excess_bound(*heb) : 0.0;

    MemberAnalysis out;
    std::array<std::size_t, 3> counts{};
    integrate_flat(make_vector_field(p), s0.to_flat(), cfg,
                   [&](double t, std::span<const double> y) {
                       const std::span<const double> u = y.first(m);
                       double nsq = y[m] * y[m];
                       for (double x : u) nsq += x * x;
                       out.samples.push_back({t, nsq, gap_of(u)});

                       const double env = dissipative_envelope(dc, t, g0);
                       if (nsq > env + tolerance(env)) {
                           push_capped(out.violations, counts,
                                       {id, t, nsq, env, ViolationKind::Dissipative});
                       }
                       if (heb) {
                           const std::span<const double> w0 = s0.weights->data();
                           const std::span<const double> w = y.subspan(m + 1);
                           for (std::size_t k = 0; k < w.size(); ++k) {
                               const double bound = w0[k] * w0[k] + w_excess;
                               if (w[k] * w[k] > bound + tolerance(bound)) {
                                   push_capped(out.violations, counts,
                                               {id, t, w[k] * w[k], bound,
                                                ViolationKind::WeightBound});
                               }
                           }
                       }
                   });

    const auto& samples = out.samples;
    const double Q = dc.ultimate_bound;
    // permanent entry: first sample after which the ball is never left
    std::size_t entry = samples.size();
    while (entry > 0 && samples[entry - 1].norm_sq < Q) --entry;
    if (entry < samples.size()) {
        out.entry_index = entry;
        out.entry_time = samples[entry].t;
    }

    const double t_end = samples.back().t;
    const double tail_start = (1.0 - tail_fraction) * t_end;
    for (const auto& s : samples) {
        if (s.t >= tail_start) out.tail_gap = std::max(out.tail_gap, s.gap);
    }

    if (out.entry_index) {
        const SampleSummary& e = samples[entry];
        const double rate = budget.rate(P);
        const double R = budget.residual(P);
        for (std::size_t j = entry + 1; j < samples.size(); ++j) {
            const double bound =
                std::exp(-rate * (samples[j].t - e.t)) * e.gap * e.gap + R * R;
            const double g2 = samples[j].gap * samples[j].gap;
            if (g2 > bound + tolerance(bound)) {
                push_capped(out.violations, counts,
                            {id, samples[j].t, g2, bound, ViolationKind::GapEnvelope});
            }
        }
    }
    // The gap usually collapses long before the state enters the ball, so the
    // fit runs from t = 0. Below the residual level the gap tracks the slow
    // (u, rho) relaxation instead of the coupling, hence the floor.
    TimeSeries series;
    for (const auto& s : samples) {
        series.t.push_back(s.t);
        series.v.push_back(s.gap);
    }
    try {
        out.fitted_rate =
            fit_decay_rate(series, std::max(budget.residual(P), out.tail_gap));
    } catch (const FitError&) {
    }
    std::stable_sort(out.violations.begin(), out.violations.end(),
                     [](const Violation& x, const Violation& y) { return x.time < y.time; });
    return out;
}

SyncReport verify_guarantees(const ModelParams& p, const IntegratorConfig& cfg,
                             const EnsembleSpec& ens, double epsilon) {
    validate(p);
    validate(ens);
    if (!(epsilon > 0.0)) throw ValidationError("epsilon", "must be > 0");
    const IntegratorConfig resolved = resolve_integrator(p, cfg, ens);
    validate(resolved);
    const Threshold th = threshold(p, epsilon);
    const double P = coupling_strength(p);

    std::vector<MemberAnalysis> members(ens.count);
    parallel_for(ens.count, [&](std::size_t i) {
        members[i] = analyze_member(p, resolved, sample_initial_state(p, ens, i), i,
                                    ens.tail_fraction);
        members[i].samples.clear();
        members[i].samples.shrink_to_fit();
    });

    SyncReport report;
    report.epsilon = epsilon;
    report.p_used = P;
    report.p_star = th.p_star;
    report.rate_theory = th.rate_at(P);
    for (const MemberAnalysis& mem : members) {
        report.entry_times.push_back(mem.entry_time);
        report.deg_estimate = std::max(report.deg_estimate, mem.tail_gap);
        report.violations.insert(report.violations.end(), mem.violations.begin(),
                                 mem.violations.end());
        if (mem.fitted_rate) {
            report.fitted_rate = report.fitted_rate ? std::min(*report.fitted_rate, *mem.fitted_rate)
                                                    : *mem.fitted_rate;
        }
    }
    report.pass = report.deg_estimate < epsilon && report.violations.empty();
    return report;
}

std::vector<SweepRow> sweep_coupling(const ModelParams& p, const IntegratorConfig& cfg,
                                     const EnsembleSpec& ens, std::span<const double> p_values,
                                     double epsilon) {
    if (p_values.empty()) throw std::invalid_argument("sweep_coupling: no coupling values");
    std::vector<double> values(p_values.begin(), p_values.end());
    std::stable_sort(values.begin(), values.end());
    const double p_star = threshold(p, epsilon).p_star;

    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (double P : values) {
        SweepRow row;
        row.P = P;
        row.p_star = p_star;
        try {
            ModelParams q = p;
            set_coupling_strength(q, P);
            const SyncReport rep = verify_guarantees(q, cfg, ens, epsilon);
            row.deg_estimate = rep.deg_estimate;
            row.rate_theory = rep.rate_theory;
            row.rate_fitted = rep.fitted_rate;
            row.verdict = rep.pass ? "pass" : "fail";
        } catch (const std::exception& ex) {
            row.deg_estimate = std::numeric_limits<double>::quiet_NaN();
            row.rate_theory = std::numeric_limits<double>::quiet_NaN();
            row.verdict = "error";
            row.error = ex.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::Dissipative: return "dissipative";
        case ViolationKind::GapEnvelope: return "gap-envelope";
        case ViolationKind::WeightBound: return "weight-bound";
    }
    return "unknown";
}

ViolationKind violation_kind_from_string(const std::string& name) {
    if (name == "dissipative") return ViolationKind::Dissipative;
    if (name == "gap-envelope") return ViolationKind::GapEnvelope;
    if (name == "weight-bound") return ViolationKind::WeightBound;
    throw std::invalid_argument("unknown violation kind '" + name + "'");
}

}  // namespace memsync
