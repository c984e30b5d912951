#include "oconnell/cbm.hpp"
#include "oconnell/fredholm.hpp"

#include <gtest/gtest.h>

using namespace oconnell;

namespace {
const DriftSpec canon{{-0.5, 0.5}, 0.5};
}

TEST(Sampling, Moments) {
    const double t = 2.0;
    const int n = 100000;
    RngCursor cur(RngStream{9, 0});
    double sv = 0, sv2 = 0, sw = 0, sw2 = 0;
    for (int i = 0; i < n; ++i) {
        CbmSample s = sample_endpoints(canon, t, cur);
        sv += s.V[1];
        sv2 += s.V[1] * s.V[1];
        sw += s.W[0];
        sw2 += s.W[0] * s.W[0];
    }
    double mv = sv / n, vv = sv2 / n - mv * mv, mw = sw / n, vw = sw2 / n - mw * mw;
    double se = std::sqrt(1 / t / n);
    EXPECT_NEAR(mv, 0.5, 3 * se);
    EXPECT_NEAR(mw, 0.0, 3 * se);
    // Var of the sample variance of a Gaussian is 2 sigma^4 / n
    EXPECT_NEAR(vv, 1 / t, 3 * std::sqrt(2.0 / n) / t);
    EXPECT_NEAR(vw, 1 / t, 3 * std::sqrt(2.0 / n) / t);
}

TEST(Sampling, IndexAddressing) {
    RngStream st{4, 2};
    RngCursor cur(st);
    CbmSample a, b;
    for (int i = 0; i < 6; ++i) a = sample_endpoints(canon, 1.0, cur);
    b = sample_endpoints(canon, 1.0, st, 5);
    EXPECT_EQ(a.V, b.V);
    EXPECT_EQ(a.W, b.W);
}

TEST(Weight, AllAboveIsOne) {
    CbmSample s{{0.5, 0.7}, {0.1, -0.3}};
    EXPECT_EQ(determinantal_weight(s, canon, {1.0, 0.0}), cplx(1.0));
}

TEST(Weight, SingleParticle) {
    DriftSpec d{{0.3}, 0.5};
    CbmSample s{{-0.2}, {0.4}};
    cplx z(-0.2, 0.4);
    cplx want = 1.0 - gamma_fn(1.0 - 0.5 * (0.3 - z));
    EXPECT_LT(std::abs(determinantal_weight(s, d, {1.0, 0.0}) - want), 1e-13);
    EXPECT_THROW(determinantal_weight(CbmSample{{0.1, 0.2}, {0, 0}}, d, {1.0, 0.0}), Error);
}

TEST(Estimate, LowHIsExactlyOne) {
    MCConfig mc;
    mc.sample_count = 1000;
    Estimate e = cbm_estimate(canon, {1.0, -60.0}, mc);
    EXPECT_EQ(e.value, 1.0);
    EXPECT_EQ(e.std_error, 0.0);
}

TEST(Estimate, TooFewSamples) {
    MCConfig mc;
    mc.sample_count = 50;
    try {
        cbm_estimate(canon, {1.0, 0.0}, mc);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::TooFewSamples);
    }
    mc.sample_count = 1000;
    mc.residue_correction = false;
    EXPECT_THROW(cbm_estimate(canon, {1.0, 0.0}, mc), Error);
}

TEST(Estimate, MatchesFredholm) {
    MCConfig mc;
    mc.sample_count = 20000;
    mc.seed = 17;
    for (double h : {-1.0, 0.0, 1.0}) {
        Estimate e = cbm_estimate(canon, {1.0, h}, mc);
        double f = fredholm_rank_det(canon, {1.0, h});
        EXPECT_LT(std::abs(e.value - f), 3.5 * e.std_error) << h;
        EXPECT_LT(std::abs(e.imag_residual), 3.5 * e.imag_std_error + 1e-15) << h;
        EXPECT_EQ(e.rejected, 0u);
    }
}

TEST(Estimate, StdErrorScaling) {
    MCConfig mc;
    mc.seed = 3;
    mc.sample_count = 4000;
    double s1 = cbm_estimate(canon, {1.0, 0.0}, mc).std_error;
    mc.sample_count = 16000;
    double s4 = cbm_estimate(canon, {1.0, 0.0}, mc).std_error;
    EXPECT_NEAR(s1 / s4, 2.0, 0.4);
}

TEST(Estimate, DeterministicAcrossWorkers) {
    MCConfig mc;
    mc.sample_count = 3000;
    mc.batch_size = 256;
    mc.seed = 99;
    mc.workers = 1;
    Estimate a = cbm_estimate(canon, {1.0, 0.0}, mc);
    mc.workers = 3;
    Estimate b = cbm_estimate(canon, {1.0, 0.0}, mc);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.std_error, b.std_error);
    EXPECT_EQ(a.mom_value, b.mom_value);
    mc.seed = 100;
    EXPECT_NE(cbm_estimate(canon, {1.0, 0.0}, mc).value, a.value);
}

TEST(Estimate, MedianOfMeansClose) {
    MCConfig mc;
    mc.sample_count = 20000;
    mc.seed = 8;
    mc.estimator = Estimator::median_of_means;
    Estimate e = cbm_estimate(canon, {1.0, 0.0}, mc);
    EXPECT_EQ(e.value, e.mom_value);
    EXPECT_LT(std::abs(e.mom_value - e.mean_value), 6 * e.std_error);
}

TEST(ResidueShift, VanishesFarBelow) {
    RMatrix r = residue_shift(canon, {1.0, -60.0});
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t k = 0; k < 2; ++k) EXPECT_LT(std::abs(r(j, k)), 1e-20);
}
