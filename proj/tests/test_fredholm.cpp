#include "oconnell/fredholm.hpp"

#include <gtest/gtest.h>

using namespace oconnell;

namespace {
const DriftSpec canon{{-0.5, 0.5}, 0.5};
const DriftSpec trio{{-0.6, 0.0, 0.7}, 0.4};
}  // namespace

TEST(Gram, EmptyRangeIsZero) {
    GramMatrix g = gram_matrix(canon, {1.0, -60.0});
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(g.entries(j, k), 0.0);
    EXPECT_EQ(fredholm_rank_det(canon, {1.0, -60.0}), 1.0);
}

TEST(Gram, LineRouteAgrees) {
    for (double h : {-1.0, 0.0, 1.0}) {
        GramMatrix a = gram_matrix(canon, {1.0, h}), b = gram_matrix_sline(canon, {1.0, h});
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(a.entries(j, k), b.entries(j, k), 1e-9) << h;
    }
}

TEST(Fredholm, CanonicalValues) {
    // frozen; matched the direct density oracle to ~1e-12
    EXPECT_NEAR(fredholm_rank_det(canon, {1.0, -1.0}), 0.389712120738008, 1e-10);
    EXPECT_NEAR(fredholm_rank_det(canon, {1.0, 0.0}), 0.097009289155765, 1e-10);
    EXPECT_NEAR(fredholm_rank_det(canon, {1.0, 1.0}), 0.008861580958052, 1e-10);
}

TEST(Fredholm, ThreeParticleValues) {
    EXPECT_NEAR(fredholm_rank_det(trio, {1.0, -1.0}), 0.14586916, 1e-7);
    EXPECT_NEAR(fredholm_rank_det(trio, {1.0, 0.0}), 0.01164558, 1e-7);
    EXPECT_NEAR(fredholm_rank_det(trio, {1.0, 1.0}), 0.00019727, 1e-7);
}

TEST(Fredholm, LargeHVanishes) { EXPECT_LT(fredholm_rank_det(canon, {1.0, 0.5 + 12.0}), 1e-3); }

TEST(Fredholm, ErrorEstimateSmall) {
    FredholmResult r = fredholm_evaluate(canon, {1.0, 0.0});
    EXPECT_LT(r.error_estimate, 1e-9);
    EXPECT_FALSE(r.gram.truncation_warning);
}

TEST(Fredholm, RangeAndMonotone) {
    double prev = 1.0 + 1e-12;
    for (int i = 0; i < 9; ++i) {
        double v = fredholm_rank_det(canon, {1.0, -2.0 + 0.5 * i});
        EXPECT_GE(v, -1e-6);
        EXPECT_LE(v, 1.0 + 1e-6);
        EXPECT_LE(v, prev + 1e-12);
        prev = v;
    }
}

TEST(Fredholm, PermutationInvariant) {
    DriftSpec sw{{0.5, -0.5}, 0.5};
    EXPECT_NEAR(fredholm_rank_det(sw, {1.0, 0.3}), fredholm_rank_det(canon, {1.0, 0.3}), 1e-12);
    DriftSpec t2{{0.7, -0.6, 0.0}, 0.4};
    EXPECT_NEAR(fredholm_rank_det(t2, {1.0, 0.0}), fredholm_rank_det(trio, {1.0, 0.0}), 1e-12);
}

TEST(Series, ZeroTermIsOne) { EXPECT_EQ(fredholm_series_direct(canon, {1.0, 0.0}, {}, 0), 1.0); }

TEST(Series, MatchesRankDeterminant) {
    for (double h : {-1.0, 0.0, 1.0})
        EXPECT_NEAR(fredholm_series_direct(canon, {1.0, h}, {}, 2), fredholm_rank_det(canon, {1.0, h}), 1e-6);
    EXPECT_THROW(fredholm_series_direct(canon, {1.0, 0.0}, {}, 3), Error);
}

TEST(Series, SingleParticleOneTerm) {
    DriftSpec d{{0.3}, 0.5};
    EXPECT_NEAR(fredholm_series_direct(d, {1.0, 0.0}, {}, 1), fredholm_rank_det(d, {1.0, 0.0}), 1e-8);
}

TEST(BcContour, PartialSums) {
    ObservablePoint obs{1.0, 0.0};
    ContourSpec cs = default_bc_contour(canon, obs);
    BcResult r = bc_fredholm_det(canon, obs, cs, 3);
    ASSERT_EQ(r.partial_sums.size(), 4u);
    EXPECT_EQ(r.partial_sums[0], 1.0);
    // the L = 0 term is the constant 1; the computed terms L = 1..3 must shrink
    for (int L = 2; L <= 3; ++L) EXPECT_LT(r.term_abs[L], r.term_abs[L - 1]);
    EXPECT_LT(std::abs(r.partial_sums[3] - fredholm_rank_det(canon, obs)), 1e-2);
    EXPECT_LT(r.max_imag, 1e-6);
}

TEST(BcContour, Violations) {
    ObservablePoint obs{1.0, 0.0};
    ContourSpec cs = default_bc_contour(canon, obs);
    cs.circle_radius = 0.1;
    try {
        bc_fredholm_det(canon, obs, cs, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ContourViolation);
    }
    EXPECT_THROW(bc_fredholm_det(canon, obs, default_bc_contour(canon, obs), 4), Error);
}

TEST(Chain, CanonicalGrid) {
    ObservablePoint obs{1.0, 0.0};
    ContourSpec cs = default_chain_contour(canon, obs);
    for (double x : {-1.0, 0.0, 1.0})
        for (double xp : {-1.0, 0.0, 1.0}) EXPECT_LT(check_kernel_chain(canon, obs, x, xp, cs), 1e-6) << x << xp;
}

TEST(Chain, SingleParticle) {
    DriftSpec d{{0.3}, 0.5};
    ObservablePoint obs{1.0, 0.0};
    EXPECT_LT(check_kernel_chain(d, obs, 0.0, 0.0, default_chain_contour(d, obs)), 1e-8);
}

TEST(Chain, ContourViolation) {
    ObservablePoint obs{1.0, 0.0};
    ContourSpec cs = default_chain_contour(canon, obs);
    cs.sline_re = 3.0;  // delta = 1.5
    EXPECT_THROW(check_kernel_chain(canon, obs, 0, 0, cs), Error);
}
