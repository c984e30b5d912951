#include "oconnell/kernel.hpp"

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

TEST(ThetaSoft, Values) {
    EXPECT_NEAR(theta_soft(0, 0.5), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(theta_soft(0, 3.0), 0.36787944117144233, 1e-15);
    EXPECT_NEAR(theta_soft(1, 0.5), std::exp(-std::exp(-2.0)), 1e-15);
    EXPECT_NEAR(theta_soft(1, 0.5), 0.8734, 1e-4);
    EXPECT_NEAR(theta_soft(60, 0.5), 1.0, 1e-15);
    EXPECT_EQ(theta_soft(-60, 0.5), 0.0);
    double prev = 0;
    for (double x = -5; x <= 5; x += 0.25) {
        EXPECT_GE(theta_soft(x, 0.5), prev);
        prev = theta_soft(x, 0.5);
    }
}

TEST(PhiEntire, Examples) {
    EXPECT_EQ(phi_entire({-1, 0.5, 1}, 0.5, 0.5), cplx(1.0));
    EXPECT_EQ(phi_entire({-1, 0.5, 1}, 0.5, -1.0), cplx(0.0));
    cplx v = phi_entire({-1, 1}, 1, cplx(0, 1));
    EXPECT_NEAR(std::abs(v - cplx(0.5, 0.5)), 0, 1e-15);
    try {
        phi_entire({-1, 1}, 0.5, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::RPrimeNotInConfig);
    }
}

TEST(PhiLifted, Examples) {
    EXPECT_NEAR(std::abs(phi_lifted(canon, 0, -0.5) - 1.0), 0, 1e-14);
    EXPECT_NEAR(std::abs(phi_lifted(canon, 1, 0.5) - 1.0), 0, 1e-14);
    EXPECT_EQ(phi_lifted(canon, 0, 0.5), cplx(0.0));
    // direct product of Gammas
    cplx z(0.5, 1.0);
    const double a = 0.5;
    cplx direct = gamma_fn(1.0 - a * (0.5 - z)) * gamma_fn(a * (-0.5 - 0.5)) / gamma_fn(a * (-0.5 - z));
    cplx v = phi_lifted(canon, 1, z);
    EXPECT_LT(std::abs(v - direct) / std::abs(direct), 1e-12);
}

TEST(PhiLifted, PolesAndNearPole) {
    auto z = pole_locations(canon, 0, 3);
    EXPECT_DOUBLE_EQ(z[0], -2.5);
    EXPECT_DOUBLE_EQ(z[1], -4.5);
    auto w = pole_locations({{0.0}, 1.0}, 0, 3);
    EXPECT_EQ(w, (std::vector<double>{-1, -2, -3}));
    auto fine = pole_locations({{-0.5, 0.5}, 0.05}, 0, 1);
    EXPECT_LT(fine[0], z[0]);
    try {
        phi_lifted(canon, 0, cplx(-2.5 + 1e-9, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NearPole);
    }
    EXPECT_NO_THROW(phi_lifted(canon, 0, cplx(-2.5 + 1e-6, 0)));
}

TEST(PhiLifted, ResidueMatchesLimit) {
    PhiLifted phi(canon);
    for (int n = 1; n <= 3; ++n) {
        double zn = phi.pole(0, n);
        double eps = 1e-6;
        cplx near = phi(0, cplx(zn + eps, 0)) * eps;
        EXPECT_NEAR(near.real(), phi.residue(0, n), 1e-5 * std::abs(phi.residue(0, n)) + 1e-12);
    }
}

TEST(Drift, Validation) {
    EXPECT_THROW(make_drift({0.1, 0.1}, 0.5), Error);
    EXPECT_THROW(make_drift({-1.1, 0.5}, 0.5), Error);
    EXPECT_THROW(make_drift({0.1}, -1), Error);
    try {
        make_drift({0.2, 0.2005}, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DegenerateDrift);
    }
}

TEST(Kernel, N1AgainstAdaptiveOracle) {
    DriftSpec d{{0.3}, 0.5};
    double integral = simpson(
        [](double y) {
            return (gaussian_density(1, y, 0) * gamma_fn(cplx(1 - 0.5 * 0.3, 0.5 * y))).real();
        },
        -14, 14, 1e-15);
    double oracle = gaussian_density(1, 0, 0.3) * integral;
    double v = kernel_bK(d, 1.0, 0.0, 0.0);
    EXPECT_LT(std::abs(v - oracle), 1e-10);
}

TEST(Kernel, ReciprocalTime) {
    for (double x : {-1.0, 0.5})
        EXPECT_NEAR(kernel_calK(canon, {1.0, 0}, x, 0.3), kernel_bK(canon, 1.0, x, 0.3), 1e-15);
    EXPECT_NEAR(kernel_calK(canon, {2.0, 0}, 0, 0), 0.5 * kernel_bK(canon, 0.5, 0, 0), 1e-15);
}

TEST(Kernel, RealityAndRank) {
    PhiLifted phi(canon);
    for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0})
        for (double xp : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
            KernelValue v = detail::bK_once(phi, 1.0, x, xp, 64);
            EXPECT_LT(std::abs(v.imag), 1e-10 * (1 + std::abs(v.value)));
        }
    std::vector<double> p{-1.2, 0.1, 0.9};
    RMatrix m(3, 3);
    double mx = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            m(i, j) = kernel_bK(canon, 1.0, p[i], p[j]);
            mx = std::max(mx, std::abs(m(i, j)));
        }
    EXPECT_LT(std::abs(determinant(m)), 1e-8 * mx * mx * mx);
}

TEST(Kernel, BelowFirstPoleIsContinued) {
    // x' below the first pole of factor 0; the value must vary smoothly across it
    double l = kernel_bK(canon, 1.0, 0.0, -2.5 - 1e-3), r = kernel_bK(canon, 1.0, 0.0, -2.5 + 1e-3);
    EXPECT_LT(std::abs(l - r), 1e-2 * (std::abs(l) + std::abs(r)) + 1e-10);
}

TEST(KernelLimit, PolynomialExactness) {
    QuadConfig q;
    double a = kernel_limit({-0.5, 0.5}, 1.0, 0.2, 0.4, q);
    q.gh_order = 8;
    EXPECT_NEAR(kernel_limit({-0.5, 0.5}, 1.0, 0.2, 0.4, q), a, 1e-14);
    EXPECT_THROW(kernel_limit({0.5, 0.5}, 1.0, 0, 0), Error);
}

TEST(KernelLimit, LiftedKernelConverges) {
    std::vector<double> sup;
    for (double a : {0.4, 0.2, 0.1, 0.05}) {
        DriftSpec d{{-0.5, 0.5}, a};
        double s = 0;
        for (double x : {-1.0, 0.0, 1.0})
            for (double xp : {-1.0, 0.0, 1.0})
                s = std::max(s, std::abs(kernel_bK(d, 1.0, x, xp) - kernel_limit({-0.5, 0.5}, 1.0, x, xp)));
        sup.push_back(s);
    }
    for (std::size_t i = 1; i < sup.size(); ++i) EXPECT_LT(sup[i], sup[i - 1]);
}

TEST(Kernel, Errors) {
    EXPECT_THROW(kernel_bK(canon, 0.0, 0, 0), Error);
    QuadConfig q;
    q.gh_order = 33;
    EXPECT_THROW(kernel_bK(canon, 1.0, 0, 0, q), Error);
}
