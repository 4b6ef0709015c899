#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "memsync/constants.hpp"
#include "random_params.hpp"

using namespace memsync;

namespace {

MhnnParams two_node(double J0 = 1.0, double J1 = 1.0) {
    MhnnParams p;
    p.m = 2;
    p.a = {2, 2};
    p.b = 1;
    p.k = 1;
    p.eta = {1, 1};
    p.w = SquareMatrix(2);
    p.J = {J0, J1};
    p.gamma = {1, 1};
    p.activations.assign(2, ActivationSpec{});
    return p;
}

HebbianParams two_node_hebbian() {
    HebbianParams p;
    p.m = 2;
    p.a = {2, 2};
    p.b = 1;
    p.k = {1, 1};
    p.eta = {1, 1};
    p.J = {1, 1};
    p.gamma = {1, 1};
    p.activations.assign(2, ActivationSpec{});
    p.c = SquareMatrix(2, 1.0);
    p.lambda = SquareMatrix(2, 1.0);
    p.w0 = SquareMatrix(2, 1.0);
    return p;
}

DerivedConstants manual(double C1, double C2, double mu) {
    DerivedConstants dc;
    dc.scaling = C1;
    dc.forcing = C2;
    dc.dissipation = mu;
    dc.ultimate_bound = 1.0 + C2 / (mu * std::min(C1, 1.0));
    return dc;
}

}  // namespace

TEST(Extremes, HomogeneousNetwork) {
    MhnnParams p = two_node();
    const Extremes e = derive_extremes(p);
    EXPECT_EQ(e.a_star, 0.0);
    EXPECT_EQ(e.W_star, 0.0);
    EXPECT_EQ(e.J_star, 0.0);
    EXPECT_EQ(e.gamma_max, 1.0);
}

TEST(Extremes, TwoElementDecay) {
    MhnnParams p = two_node();
    p.a = {1, 3};
    p.k = 0.5;
    const Extremes e = derive_extremes(p);
    EXPECT_EQ(e.a_min, 1.0);
    EXPECT_EQ(e.a_star, 2.0);
}

TEST(Extremes, WeightMismatch) {
    MhnnParams p = two_node();
    p.w(0, 1) = 1.0;
    p.w(1, 0) = 2.0;
    const Extremes e = derive_extremes(p);
    EXPECT_EQ(e.W_max, 2.0);
    EXPECT_EQ(e.W_star, 2.0);
}

TEST(Extremes, BruteForceOracle) {
    test_support::ParamSampler sampler(11);
    for (std::size_t m = 2; m <= 8; ++m) {
        for (int trial = 0; trial < 10; ++trial) {
            const MhnnParams p = sampler.mhnn(m);
            double a_star = 0, W_star = 0, W_max = 0, eta_star = 0, J_star = 0, g_max = 0;
            for (std::size_t i = 0; i < m; ++i) {
                g_max = std::max(g_max, std::abs(p.gamma[i]));
                for (std::size_t j = 0; j < m; ++j) {
                    a_star = std::max(a_star, std::abs(p.a[i] - p.a[j]));
                    eta_star = std::max(eta_star, std::abs(p.eta[i] - p.eta[j]));
                    J_star = std::max(J_star, std::abs(p.J[i] - p.J[j]));
                    W_max = std::max(W_max, std::abs(p.w(i, j)));
                    for (std::size_t l = 0; l < m; ++l) {
                        W_star = std::max(W_star, std::abs(p.w(i, l) - p.w(j, l)));
                    }
                }
            }
            const Extremes e = derive_extremes(p);
            EXPECT_EQ(e.a_star, a_star);
            EXPECT_EQ(e.W_star, W_star);
            EXPECT_EQ(e.W_max, W_max);
            EXPECT_EQ(e.eta_star, eta_star);
            EXPECT_EQ(e.J_star, J_star);
            EXPECT_EQ(e.gamma_max, g_max);
        }
    }
}

TEST(DeriveConstants, TwoNodeMhnnExact) {
    const DerivedConstants dc = derive_constants(two_node());
    EXPECT_EQ(dc.model, ModelKind::Mhnn);
    EXPECT_EQ(dc.scaling, 3.0);
    EXPECT_EQ(dc.forcing, 6.0);
    EXPECT_EQ(dc.dissipation, 1.0 / 3.0);
    EXPECT_EQ(dc.ultimate_bound, 19.0);
}

TEST(DeriveConstants, TwoNodeHebbian) {
    const DerivedConstants dc = derive_constants(two_node_hebbian());
    const double c4 = 2.5 * std::pow(1.0 + 2.0 * std::sqrt(2.0), 2) / 2.25;
    EXPECT_EQ(dc.model, ModelKind::Hebbian);
    EXPECT_NEAR(dc.scaling, 5.0 / 3.0, 1e-15);
    EXPECT_NEAR(dc.dissipation, 0.6, 1e-15);
    EXPECT_NEAR(dc.forcing / c4 - 1.0, 0.0, 1e-12);
    EXPECT_NEAR(dc.forcing, 16.285, 5e-4);
    EXPECT_NEAR(dc.ultimate_bound, 28.14, 5e-3);
    EXPECT_NEAR(dc.ultimate_bound, 1.0 + c4 / 0.6, 1e-12);
}

TEST(DeriveConstants, DivergeAsKApproachesAmin) {
    MhnnParams p = two_node();
    double prev_c1 = 0, prev_q = 0;
    for (double k : {0.5, 1.0, 1.5, 1.9, 1.99, 1.999999}) {
        p.k = k;
        const DerivedConstants dc = derive_constants(p);
        EXPECT_GT(dc.scaling, prev_c1);
        EXPECT_GT(dc.ultimate_bound, prev_q);
        prev_c1 = dc.scaling;
        prev_q = dc.ultimate_bound;
    }
    EXPECT_GT(prev_q, 1e10);
    p.k = 2.0;
    EXPECT_THROW(derive_constants(p), ValidationError);
    p.k = 2.5;
    EXPECT_THROW(derive_constants(p), ValidationError);
}

TEST(AbsorbTime, Examples) {
    const DerivedConstants dc = manual(3.0, 6.0, 1.0 / 3.0);
    EXPECT_EQ(absorb_time(dc, 1.0 / 3.0), 0.0);
    EXPECT_EQ(absorb_time(dc, 0.1), 0.0);
    EXPECT_NEAR(absorb_time(dc, 1.0), 3.0 * std::log(3.0), 1e-14);
    EXPECT_NEAR(absorb_time(dc, 1.0), 3.2958, 1e-4);
    EXPECT_EQ(absorb_time(manual(1.0, 2.0, 0.7), 1.0), 0.0);
    EXPECT_THROW(absorb_time(dc, 0.0), std::invalid_argument);
}

TEST(DissipativeEnvelope, Examples) {
    const DerivedConstants unit = manual(1.0, 2.0, 0.5);
    EXPECT_DOUBLE_EQ(dissipative_envelope(unit, 0.0, 7.0), 7.0 + 2.0 / 0.5);

    const DerivedConstants dc = derive_constants(two_node());
    EXPECT_NEAR(dissipative_envelope(dc, 1e4, 50.0), dc.ultimate_bound - 1.0, 1e-12);
    EXPECT_NEAR(dissipative_envelope(dc, 3.0 * std::log(3.0), 1.0), 19.0, 1e-12);
}

TEST(DissipativeEnvelope, NonIncreasingFromAbove) {
    const DerivedConstants dc = derive_constants(two_node());
    double prev = dissipative_envelope(dc, 0.0, 100.0);
    for (double t = 0.1; t < 50.0; t += 0.1) {
        const double v = dissipative_envelope(dc, t, 100.0);
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(Threshold, HomogeneousIsZero) {
    for (double eps : {1.0, 0.1, 1e-6}) {
        EXPECT_EQ(threshold(two_node(), eps).p_star, 0.0);
        MhnnParams lin = two_node();
        lin.coupling = CouplingKind::Linear;
        EXPECT_EQ(threshold(lin, eps).p_star, 0.0);
    }
}

TEST(Threshold, HalvesWhenEpsilonDoubles) {
    test_support::ParamSampler sampler(12);
    for (int i = 0; i < 30; ++i) {
        const ModelParams p = i % 2 ? ModelParams(sampler.mhnn(3)) : ModelParams(sampler.hebbian(3));
        const double eps = sampler.uniform(0.01, 2.0);
        EXPECT_EQ(threshold(p, 2.0 * eps).p_star, threshold(p, eps).p_star / 2.0);
    }
}

TEST(Threshold, WeakSigmoidalHandEvaluation) {
    MhnnParams p = two_node(0.0, 1.0);
    p.r = 0.1;
    p.V = 0.0;
    ASSERT_EQ(derive_constants(p).ultimate_bound, 19.0);
    const Threshold th = threshold(p, 1.0);
    const double B = 1.0 + std::exp(0.1 * std::sqrt(19.0));
    EXPECT_NEAR(th.budget.saturation, 2.5463, 1e-4);
    EXPECT_NEAR(th.budget.saturation, B, 1e-15);
    EXPECT_NEAR(th.p_star, 1.2731, 1e-4);
    EXPECT_NEAR(th.p_star, B / 2.0, 1e-15);
}

TEST(Threshold, LinearRateIsAminMinusKPlusP) {
    MhnnParams p = two_node(0.0, 1.0);
    p.coupling = CouplingKind::Linear;
    const Threshold th = threshold(p, 0.5);
    EXPECT_EQ(th.p_star, 1.0 / (2.0 * 0.5));
    EXPECT_DOUBLE_EQ(th.rate_at(3.0), 2.0 - 1.0 + 3.0);
}

TEST(Threshold, HebbianHomogeneousWeightTerm) {
    // only the weight term 2 m beta sqrt(1 + lambda^2 beta^4 / c^2) survives
    const Threshold th = threshold(two_node_hebbian(), 1.0);
    EXPECT_NEAR(th.p_star, 2.0 * std::sqrt(2.0), 1e-14);
    EXPECT_DOUBLE_EQ(th.rate_at(0.0), 2.0 - 0.5);
    EXPECT_DOUBLE_EQ(th.rate_at(1.0), 2.0 - 0.5 + 2.0);
}

TEST(Threshold, RejectsNonPositiveEpsilon) {
    EXPECT_THROW(threshold(two_node(), 0.0), std::invalid_argument);
    EXPECT_THROW(threshold(two_node(), -1.0), std::invalid_argument);
}

TEST(GapEnvelope, HomogeneousHasNoResidual) {
    MhnnParams p = two_node();
    const DerivedConstants dc = derive_constants(p);
    const double rate = sync_budget(p, dc).rate(0.7);
    EXPECT_DOUBLE_EQ(gap_envelope(p, dc, 0.7, 2.0, 4.0), std::exp(-rate * 2.0) * 4.0);
}

TEST(GapEnvelope, StartsAtEntryGapPlusResidual) {
    test_support::ParamSampler sampler(13);
    const MhnnParams p = sampler.mhnn(3);
    const DerivedConstants dc = derive_constants(p);
    const double R = sync_budget(p, dc).residual(5.0);
    EXPECT_DOUBLE_EQ(gap_envelope(p, dc, 5.0, 0.0, 2.5), 2.5 + R * R);
}

TEST(GapEnvelope, ResidualBelowEpsilonAboveThreshold) {
    test_support::ParamSampler sampler(14);
    for (int i = 0; i < 200; ++i) {
        const std::size_t m = 2 + i % 4;
        ModelParams p;
        switch (i % 3) {
            case 0: p = sampler.mhnn(m, CouplingKind::WeakSigmoidal); break;
            case 1: p = sampler.mhnn(m, CouplingKind::Linear); break;
            default: p = sampler.hebbian(m); break;
        }
        const double eps = sampler.uniform(1e-3, 1.0);
        const Threshold th = threshold(p, eps);
        EXPECT_LT(th.budget.residual(th.p_star), eps);
        EXPECT_LT(th.budget.residual(th.p_star * 1.5), eps);
        const DerivedConstants dc = derive_constants(p);
        const double tail = gap_envelope(p, dc, th.p_star * 1.01, 1e6, 100.0);
        EXPECT_LT(std::sqrt(tail), eps);
    }
}

TEST(ConstantsProperties, RandomDraws) {
    test_support::ParamSampler sampler(15);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t m = 2 + i % 5;
        ModelParams p;
        switch (i % 3) {
            case 0: p = sampler.mhnn(m, CouplingKind::WeakSigmoidal); break;
            case 1: p = sampler.mhnn(m, CouplingKind::Linear); break;
            default: p = sampler.hebbian(m); break;
        }
        const DerivedConstants dc = derive_constants(p);
        EXPECT_GT(dc.ultimate_bound, 1.0);
        const SyncBudget s = sync_budget(p, dc);
        const double ref = s.p_star(1.0);
        for (double eps : {0.5, 0.01, 3.0}) {
            EXPECT_NEAR(s.p_star(eps) * eps, ref, 1e-12 * ref);
        }
        const double r0 = s.rate(0.0), r1 = s.rate(1.0), r5 = s.rate(5.0);
        EXPECT_LT(r0, r1);
        EXPECT_LT(r1, r5);
        EXPECT_NEAR(r5 - r0, 5.0 * (r1 - r0), 1e-12 * r5);
    }
}

TEST(WeightExcessBound, Formula) {
    HebbianParams p = two_node_hebbian();
    p.lambda(1, 0) = -3.0;
    p.c(0, 0) = 0.5;
    p.activations[1].beta = 2.0;
    EXPECT_DOUBLE_EQ(weight_excess_bound(p), std::pow(3.0 * 4.0 / 0.5, 2));
    p.lambda = SquareMatrix(2, 0.0);
    EXPECT_EQ(weight_excess_bound(p), 0.0);
}
