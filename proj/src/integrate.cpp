#include "memsync/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace memsync {

namespace {

void check_state(double t, std::span<const double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i])) {
            throw IntegrationError(t, "non-finite state component " + std::to_string(i) +
                                          " at t = " + std::to_string(t));
        }
        if (std::abs(y[i]) > kBlowUpThreshold) {
            throw IntegrationError(t, "state component " + std::to_string(i) +
                                          " exceeded 1e12 at t = " + std::to_string(t) +
                                          " (blow-up or step too large)");
        }
    }
}

// Emits t = 0, every stride-th step and the last step exactly once.
class Recorder {
public:
    Recorder(const Observer& observe, std::size_t stride) : observe_(observe), stride_(stride) {}

    void initial(std::span<const double> y) { observe_(0.0, y); }

    void step(double t, std::span<const double> y, bool last) {
        ++count_;
        if (last || count_ % stride_ == 0) observe_(t, y);
    }

private:
    const Observer& observe_;
    std::size_t stride_;
    std::size_t count_ = 0;
};

std::size_t fixed_step_count(double t_end, double dt) {
    const double ratio = t_end / dt;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * ratio) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::ceil(ratio));
}

void run_rk4(const VectorField& rhs, std::vector<double> y, double dt, double t_end,
             Recorder& rec) {
    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    const std::size_t steps = fixed_step_count(t_end, dt);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t0 = static_cast<double>(s) * dt;
        const double t1 = (s + 1 == steps) ? t_end : static_cast<double>(s + 1) * dt;
        const double h = t1 - t0;
        rhs(y, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_state(t1, y);
        rec.step(t1, y, s + 1 == steps);
    }
}

// Dormand-Prince 5(4), FSAL.
struct DormandPrince {
    static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

double initial_step(const VectorField& rhs, std::span<const double> y, std::span<const double> f0,
                    double atol, double rtol, double t_end) {
    const std::size_t n = y.size();
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::abs(y[i]);
        d0 += (y[i] / sc) * (y[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(n));
    d1 = std::sqrt(d1 / static_cast<double>(n));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, t_end);
    std::vector<double> y1(n), f1(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y[i] + h0 * f0[i];
    rhs(y1, f1);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::abs(y[i]);
        d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
    }
    d2 = std::sqrt(d2 / static_cast<double>(n)) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
    return std::min({100.0 * h0, h1, t_end});
}

void run_rk45(const VectorField& rhs, std::vector<double> y, std::optional<double> dt_hint,
              double t_end, double atol, double rtol, Recorder& rec) {
    using DP = DormandPrince;
    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n);
    rhs(y, k1);
    double h = dt_hint ? std::min(*dt_hint, t_end) : initial_step(rhs, y, k1, atol, rtol, t_end);
    double t = 0.0;
    bool rejected_last = false;
    while (t < t_end) {
        bool last = false;
        if (t + h >= t_end || t_end - (t + h) < 1e-12 * t_end) {
            h = t_end - t;
            last = true;
        }
        if (h <= 1e-14 * std::max(1.0, std::abs(t))) {
            throw IntegrationError(t, "adaptive step size underflow at t = " + std::to_string(t));
        }
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * DP::a21 * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (DP::a31 * k1[i] + DP::a32 * k2[i]);
        rhs(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) {
            tmp[i] = y[i] + h * (DP::a41 * k1[i] + DP::a42 * k2[i] + DP::a43 * k3[i]);
        }
        rhs(tmp, k4);
        for (std::size_t i = 0; i < n; ++i) {
            tmp[i] = y[i] + h * (DP::a51 * k1[i] + DP::a52 * k2[i] + DP::a53 * k3[i] +
                                 DP::a54 * k4[i]);
        }
        rhs(tmp, k5);
        for (std::size_t i = 0; i < n; ++i) {
            tmp[i] = y[i] + h * (DP::a61 * k1[i] + DP::a62 * k2[i] + DP::a63 * k3[i] +
                                 DP::a64 * k4[i] + DP::a65 * k5[i]);
        }
        rhs(tmp, k6);
        for (std::size_t i = 0; i < n; ++i) {
            y_new[i] = y[i] + h * (DP::b1 * k1[i] + DP::b3 * k3[i] + DP::b4 * k4[i] +
                                   DP::b5 * k5[i] + DP::b6 * k6[i]);
        }
        rhs(y_new, k7);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (DP::e1 * k1[i] + DP::e3 * k3[i] + DP::e4 * k4[i] +
                                  DP::e5 * k5[i] + DP::e6 * k6[i] + DP::e7 * k7[i]);
            const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (!std::isfinite(err)) {
            rejected_last = true;
            h *= 0.2;
            continue;
        }
        if (err <= 1.0) {
            t = last ? t_end : t + h;
            y.swap(y_new);
            k1.swap(k7);
            check_state(t, y);
            rec.step(t, y, last);
            double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (rejected_last) factor = std::min(factor, 1.0);
            rejected_last = false;
            h *= factor;
        } else {
            rejected_last = true;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
    }
}

}  // namespace

void validate(const IntegratorConfig& cfg) {
    if (!cfg.dt || !(*cfg.dt > 0.0) || !std::isfinite(*cfg.dt)) {
        throw ValidationError("integrator.dt", "must be a finite positive step");
    }
    if (!cfg.t_end || !(*cfg.t_end > 0.0) || !std::isfinite(*cfg.t_end)) {
        throw ValidationError("integrator.t_end", "must be a finite positive horizon");
    }
    if (!(*cfg.dt < *cfg.t_end)) throw ValidationError("integrator.dt", "must be < t_end");
    if (cfg.record_stride && *cfg.record_stride < 1) {
        throw ValidationError("integrator.record_stride", "must be a positive integer");
    }
    if (!(cfg.abs_tol > 0.0 && cfg.abs_tol < 1.0)) {
        throw ValidationError("integrator.abs_tol", "must lie in (0, 1)");
    }
    if (!(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0)) {
        throw ValidationError("integrator.rel_tol", "must lie in (0, 1)");
    }
}

void integrate_flat(const VectorField& rhs, std::vector<double> y0, const IntegratorConfig& cfg,
                    const Observer& observe) {
    validate(cfg);
    check_state(0.0, y0);
    Recorder rec(observe, cfg.record_stride.value_or(1));
    rec.initial(y0);
    if (cfg.method == Method::Rk4Fixed) {
        run_rk4(rhs, std::move(y0), *cfg.dt, *cfg.t_end, rec);
    } else {
        run_rk45(rhs, std::move(y0), cfg.dt, *cfg.t_end, cfg.abs_tol, cfg.rel_tol, rec);
    }
}

Trajectory integrate(const VectorField& rhs, const NetworkState& s0, const IntegratorConfig& cfg,
                     std::string params_digest) {
    Trajectory traj;
    traj.params_digest = std::move(params_digest);
    const std::size_t m = s0.u.size();
    const bool has_weights = s0.weights.has_value();
    integrate_flat(rhs, s0.to_flat(), cfg, [&](double t, std::span<const double> y) {
        traj.times.push_back(t);
        traj.states.push_back(NetworkState::from_flat(y, m, has_weights));
    });
    return traj;
}

std::string to_string(Method method) {
    return method == Method::Rk4Fixed ? "rk4-fixed" : "rk45-adaptive";
}

Method method_from_string(const std::string& name) {
    if (name == "rk4-fixed") return Method::Rk4Fixed;
    if (name == "rk45-adaptive") return Method::Rk45Adaptive;
    throw ValidationError("integrator.method",
                          "unknown method '" + name + "' (expected rk4-fixed or rk45-adaptive)");
}

}  // namespace memsync
