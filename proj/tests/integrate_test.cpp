#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "memsync/integrate.hpp"
#include "random_params.hpp"

using namespace memsync;

namespace {

void decay(std::span<const double> y, std::span<double> dy) {
    for (std::size_t i = 0; i < y.size(); ++i) dy[i] = -y[i];
}

IntegratorConfig fixed(double dt, double t_end, std::size_t stride = 1) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.record_stride = stride;
    return cfg;
}

double endpoint(const VectorField& f, std::vector<double> y0, const IntegratorConfig& cfg,
                double* t_last = nullptr) {
    double last = 0;
    integrate_flat(f, std::move(y0), cfg, [&](double t, std::span<const double> y) {
        last = y[0];
        if (t_last) *t_last = t;
    });
    return last;
}

}  // namespace

TEST(Rk4, ZeroFieldKeepsState) {
    NetworkState s0;
    s0.u = {1.5, -2.0};
    s0.rho = 0.25;
    const Trajectory tr = integrate(
        [](std::span<const double>, std::span<double> dy) { std::fill(dy.begin(), dy.end(), 0.0); },
        s0, fixed(0.1, 2.0), "digest");
    ASSERT_EQ(tr.states.size(), 21u);
    for (const auto& s : tr.states) EXPECT_EQ(s, s0);
    EXPECT_EQ(tr.params_digest, "digest");
}

TEST(Rk4, LinearDecayAccuracy) {
    double t_last = 0;
    const double u = endpoint(decay, {1.0}, fixed(0.01, 1.0), &t_last);
    EXPECT_EQ(t_last, 1.0);
    EXPECT_NEAR(u, 0.3678794, 1e-7);
    EXPECT_LT(std::abs(u - std::exp(-1.0)), 1e-9);
}

TEST(Rk4, FourthOrderConvergence) {
    const double e1 = std::abs(endpoint(decay, {1.0}, fixed(0.01, 1.0)) - std::exp(-1.0));
    const double e2 = std::abs(endpoint(decay, {1.0}, fixed(0.02, 1.0)) - std::exp(-1.0));
    const double order = std::log2(e2 / e1);
    EXPECT_GE(order, 3.8);
    EXPECT_LE(order, 4.2);
}

TEST(Rk4, FinalStepLandsOnHorizon) {
    double t_last = 0;
    std::size_t samples = 0;
    integrate_flat(decay, {1.0}, fixed(0.3, 1.0), [&](double t, std::span<const double>) {
        t_last = t;
        ++samples;
    });
    EXPECT_EQ(t_last, 1.0);
    EXPECT_EQ(samples, 5u);
}

TEST(Rk4, RecordStride) {
    std::vector<double> times;
    integrate_flat(decay, {1.0}, fixed(0.1, 1.0, 3),
                   [&](double t, std::span<const double>) { times.push_back(t); });
    ASSERT_EQ(times.size(), 5u);
    EXPECT_EQ(times.front(), 0.0);
    EXPECT_NEAR(times[1], 0.3, 1e-15);
    EXPECT_NEAR(times[3], 0.9, 1e-15);
    EXPECT_EQ(times.back(), 1.0);
}

TEST(Rk45, MatchesExactSolution) {
    IntegratorConfig cfg;
    cfg.method = Method::Rk45Adaptive;
    cfg.dt = 0.1;
    cfg.t_end = 5.0;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-13;
    double t_last = 0;
    const double u = endpoint(decay, {2.0}, cfg, &t_last);
    EXPECT_EQ(t_last, 5.0);
    EXPECT_NEAR(u, 2.0 * std::exp(-5.0), 1e-10);
}

TEST(Rk45, HarmonicOscillatorConservesEnergy) {
    IntegratorConfig cfg;
    cfg.method = Method::Rk45Adaptive;
    cfg.dt = 0.01;
    cfg.t_end = 20.0;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    std::vector<double> last;
    integrate_flat(
        [](std::span<const double> y, std::span<double> dy) {
            dy[0] = y[1];
            dy[1] = -y[0];
        },
        {1.0, 0.0}, cfg, [&](double, std::span<const double> y) { last.assign(y.begin(), y.end()); });
    EXPECT_NEAR(last[0], std::cos(20.0), 1e-8);
    EXPECT_NEAR(last[1], -std::sin(20.0), 1e-8);
}

TEST(Rk45, TakesFewStepsOnSmoothProblems) {
    IntegratorConfig cfg;
    cfg.method = Method::Rk45Adaptive;
    cfg.dt = 1e-3;
    cfg.t_end = 10.0;
    std::size_t samples = 0;
    integrate_flat(decay, {1.0}, cfg, [&](double, std::span<const double>) { ++samples; });
    EXPECT_LT(samples, 500u);
}

TEST(Integrate, BlowUpIsReported) {
    const VectorField grow = [](std::span<const double> y, std::span<double> dy) { dy[0] = y[0] * y[0]; };
    try {
        endpoint(grow, {1.0}, fixed(1e-3, 2.0));
        FAIL() << "expected IntegrationError";
    } catch (const IntegrationError& e) {
        EXPECT_GT(e.time(), 0.9);
        EXPECT_LT(e.time(), 1.01);
    }
    IntegratorConfig cfg = fixed(1e-3, 2.0);
    cfg.method = Method::Rk45Adaptive;
    EXPECT_THROW(endpoint(grow, {1.0}, cfg), IntegrationError);
}

TEST(Integrate, NonFiniteInitialStateIsReported) {
    EXPECT_THROW(endpoint(decay, {std::nan("")}, fixed(0.1, 1.0)), IntegrationError);
}

TEST(Integrate, ValidatesConfig) {
    EXPECT_THROW(validate(fixed(1.0, 1.0)), ValidationError);
    EXPECT_THROW(validate(fixed(-0.1, 1.0)), ValidationError);
    EXPECT_THROW(validate(fixed(0.1, 1.0, 0)), ValidationError);
    IntegratorConfig cfg = fixed(0.1, 1.0);
    cfg.rel_tol = 0.0;
    EXPECT_THROW(validate(cfg), ValidationError);
    EXPECT_THROW(validate(IntegratorConfig{}), ValidationError);
    EXPECT_NO_THROW(validate(fixed(0.1, 1.0)));
}

TEST(Integrate, DeterministicOnModel) {
    test_support::ParamSampler sampler(21);
    MhnnParams p = sampler.mhnn(4);
    p.P = 2.0;
    NetworkState s0;
    s0.u = {1, -2, 3, 0.5};
    s0.rho = 0.3;
    for (Method method : {Method::Rk4Fixed, Method::Rk45Adaptive}) {
        IntegratorConfig cfg = fixed(1e-3, 3.0);
        cfg.method = method;
        const Trajectory a = integrate(make_vector_field(p), s0, cfg, params_digest(p));
        const Trajectory b = integrate(make_vector_field(p), s0, cfg, params_digest(p));
        EXPECT_EQ(a.times, b.times);
        EXPECT_EQ(a.states, b.states);
    }
}

TEST(Integrate, HebbianStateKeepsWeights) {
    test_support::ParamSampler sampler(22);
    const HebbianParams p = sampler.hebbian(3);
    NetworkState s0;
    s0.u = {0.1, 0.2, 0.3};
    s0.weights = p.w0;
    const Trajectory tr = integrate(make_vector_field(p), s0, fixed(0.01, 0.1), "");
    ASSERT_TRUE(tr.states.back().weights.has_value());
    EXPECT_EQ(tr.states.back().weights->size(), 3u);
    EXPECT_EQ(tr.states.front(), s0);
}

TEST(Integrate, MethodNames) {
    EXPECT_EQ(method_from_string(to_string(Method::Rk4Fixed)), Method::Rk4Fixed);
    EXPECT_EQ(method_from_string(to_string(Method::Rk45Adaptive)), Method::Rk45Adaptive);
    EXPECT_THROW(method_from_string("euler"), ValidationError);
}
