#include "oconnell/fredholm.hpp"
#include "oconnell/measure.hpp"

#include <gtest/gtest.h>

using namespace oconnell;

namespace {
const DriftSpec canon{{-0.5, 0.5}, 0.5};

template <class F>
double simpson(F f, double a, double b, double tol, int depth = 24) {
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double l, double r, double fl, double fm, double fr, double whole, int d) {
            double m = 0.5 * (l + r), flm = f(0.5 * (l + m)), frm = f(0.5 * (m + r));
            double left = (m - l) / 6 * (fl + 4 * flm + fm), right = (r - m) / 6 * (fm + 4 * frm + fr);
            if (d <= 0 || std::abs(left + right - whole) < 15 * tol) return left + right + (left + right - whole) / 15;
            return rec(l, m, fl, flm, fm, left, d - 1) + rec(m, r, fm, frm, fr, right, d - 1);
        };
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return rec(a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), depth);
}
}  // namespace

TEST(Theta, SingleParticleIsHeatKernel) {
    DriftSpec d{{0.2}, 0.5};
    EXPECT_NEAR(theta_entrance(d, 1.3, {0.7}), gaussian_density(1.3, 0.7, 0), 1e-12);
    EXPECT_NEAR(theta_n2(0.5, 1.3, {0.7}), gaussian_density(1.3, 0.7, 0), 1e-15);
}

TEST(Theta, CanonicalPoint) {
    double lit = theta_entrance(canon, 1.0, {0.0, 1.0});
    EXPECT_NEAR(lit, 0.100388693041246, 1e-10);
    EXPECT_NEAR(theta_n2(0.5, 1.0, {0.0, 1.0}), lit, 1e-10);
}

TEST(Theta, RepresentationsAgreeAndPositive) {
    for (double d : {0.2, 0.8, 1.5, 3.0, 6.0}) {
        double z = 2 * std::exp(-d / 1.0);
        if (z > 0.3 && z < 3) {
            double a = detail::theta_i_damped(0.5, 1.0, z, 400), b = detail::theta_i_series(0.5, 1.0, d, 200);
            EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
        }
        for (double S : {-1.0, 0.0, 1.5}) EXPECT_GT(theta_n2(0.5, 1.0, {S - d / 2, S + d / 2}), 0.0);
    }
}

TEST(WmDensity, SingleParticleGaussian) {
    DriftSpec d{{0.3}, 0.5};
    EXPECT_NEAR(wm_density(d, 2.0, {0.1}), gaussian_density(2.0, 0.6, 0.1), 1e-15);
}

TEST(WmDensity, Normalization) {
    OracleValue v = wm_normalization(canon, 1.0);
    EXPECT_NEAR(v.value, 1.0, 1e-3);
    EXPECT_NEAR(v.value, 1.0, 1e-9);
}

TEST(WmDensity, UnsupportedN) {
    EXPECT_THROW(wm_density({{-0.6, 0, 0.7}, 0.4}, 1.0, {0, 1, 2}), Error);
}

TEST(Direct, SingleParticleAgainstAdaptive) {
    DriftSpec d{{0.3}, 0.5};
    for (double h : {-1.0, 0.0, 1.0}) {
        double o = simpson([&](double x) { return theta_soft(x - h, 0.5) * gaussian_density(1.0, x, 0.3); }, -15, 15,
                           1e-14);
        EXPECT_NEAR(direct_observable(d, {1.0, h}), o, 1e-9);
        EXPECT_NEAR(fredholm_rank_det(d, {1.0, h}), o, 1e-6);
    }
}

TEST(Direct, LowHIsTotalMass) { EXPECT_NEAR(direct_observable(canon, {1.0, -40.0}), 1.0, 1e-8); }

TEST(Direct, MatchesFredholm) {
    double prev = 1.0;
    for (double h : {-1.0, 0.0, 1.0}) {
        double v = direct_observable(canon, {1.0, h});
        EXPECT_NEAR(v, fredholm_rank_det(canon, {1.0, h}), 1e-3);
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(FFactor, Examples) {
    DriftSpec d{{0.0}, 0.5};
    cplx v(0.3, 0.4);
    EXPECT_LT(std::abs(f_factor(d, 0.0, v) - 1.0 / v), 1e-15);
    EXPECT_THROW(f_factor(canon, 1.0, cplx(0.25, 0)), Error);
    // residue at -nu_j by a small circle
    ContourRule c = circle_rule(0.25, 0.1, 128);
    cplx s = 0;
    for (std::size_t m = 0; m < c.size(); ++m) s += c.weights[m] * f_factor(canon, 1.0, c.nodes[m]);
    s /= cplx(0, 2 * pi);
    // nu = (-0.25, 0.25): pole -nu_1 = 0.25, residue e^{-t nu_1/a^2}/(nu_2 - nu_1)
    EXPECT_LT(std::abs(s - std::exp(1.0) / 0.5), 1e-10);
}

TEST(Moments, FirstRoutes) {
    MomentRoutes m = moment_first(canon, 1.0);
    EXPECT_LT(m.rel_gap, 1e-10);
    EXPECT_NEAR(m.route_a, 34.7345101894572, 1e-9);
    DriftSpec d{{0.3}, 0.5};
    MomentRoutes g = moment_first(d, 1.0);
    EXPECT_NEAR(g.route_a, std::exp(1.0 / 0.5 - 0.3 / 0.5), 1e-12);
    EXPECT_NEAR(g.route_b, g.route_a, 1e-10 * g.route_a);
}

TEST(Moments, KappaOneIsRouteB) {
    EXPECT_NEAR(moment_kappa(canon, 1.0, 1), moment_first(canon, 1.0).route_b, 1e-10 * 35);
}

TEST(Moments, KappaTwoClosedForm) {
    double a = moment_kappa(canon, 1.0, 2), b = moment_two_closed(canon, 1.0);
    EXPECT_LT(std::abs(a - b) / std::abs(b), 1e-8);
    EXPECT_NEAR(a, 27900.5009525264, 1e-6);
}

TEST(Moments, KappaThreeFrozen) {
    EXPECT_NEAR(moment_kappa(canon, 1.0, 3) / 694916799.720882, 1.0, 1e-10);
    EXPECT_THROW(moment_kappa(canon, 1.0, 4), Error);
}

TEST(Moments, SingleParticleGaussianMgf) {
    DriftSpec d{{0.3}, 0.5};
    for (int k = 1; k <= 3; ++k) {
        double mgf = std::exp(k * k * 1.0 / (2 * 0.25) - k * 0.3 / 0.5);
        EXPECT_NEAR(moment_kappa(d, 1.0, k) / mgf, 1.0, 1e-10);
    }
}

TEST(Moments, DensityOracle) {
    double m1 = moment_density_oracle(canon, 1.0, 1).value;
    EXPECT_LT(std::abs(m1 - moment_first(canon, 1.0).route_a) / m1, 1e-3);
    double m2 = moment_density_oracle(canon, 1.0, 2).value;
    EXPECT_LT(std::abs(m2 - moment_kappa(canon, 1.0, 2)) / m2, 1e-2);
}

TEST(Partitions, Counts) {
    EXPECT_EQ(partitions_of(1).size(), 1u);
    EXPECT_EQ(partitions_of(3).size(), 3u);
    EXPECT_EQ(partitions_of(5).size(), 7u);
    Partition p{{2, 1, 1}};
    EXPECT_EQ(p.size(), 4);
    EXPECT_EQ(p.length(), 3u);
    EXPECT_EQ(p.multiplicity(1), 2);
}

TEST(Identities, DetSize2) {
    auto [a, b] = identity_det_size2(0.3, 0.3);
    EXPECT_LT(std::abs(a), 1e-15);
    EXPECT_LT(std::abs(b), 1e-15);
    auto [c, d] = identity_det_size2(cplx(0.2, 1.0), cplx(0.2, 0.0));
    EXPECT_LT(std::abs(c - 0.5), 1e-15);
    EXPECT_LT(std::abs(d - 0.5), 1e-15);
    EXPECT_THROW(identity_det_size2(1.0, 0.0), Error);
    std::mt19937_64 g(31);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int i = 0; i < 100; ++i) {
        auto [p, q] = identity_det_size2({U(g), U(g)}, {U(g), U(g)});
        ASSERT_LT(std::abs(p - q), 1e-11 * std::max(1.0, std::abs(q)));
    }
}

TEST(Identities, Symmetrization) {
    auto [a, b] = identity_symmetrization({cplx(0.4, 0.1)});
    EXPECT_LT(std::abs(a - 1.0) + std::abs(b - 1.0), 1e-15);
    auto [c, d] = identity_symmetrization({cplx(0.2, 1.0), cplx(0.2, 0.0)});
    EXPECT_LT(std::abs(c - identity_det_size2(cplx(0.2, 1.0), cplx(0.2, 0.0)).second), 1e-14);
    EXPECT_LT(std::abs(d - c), 1e-14);
    std::mt19937_64 g(32);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int k = 1; k <= 4; ++k)
        for (int i = 0; i < 100; ++i) {
            std::vector<cplx> v;
            for (int j = 0; j < k; ++j) v.emplace_back(U(g), U(g));
            auto [l, r] = identity_symmetrization(v);
            ASSERT_LT(std::abs(l - r), 1e-11 * std::max(1.0, std::abs(r)));
        }
    EXPECT_THROW(identity_symmetrization(std::vector<cplx>(5, 0.0)), Error);
}
