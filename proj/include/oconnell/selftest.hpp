#pragma once

#include "oconnell/cbm.hpp"
#include "oconnell/fredholm.hpp"
#include "oconnell/measure.hpp"
#include "oconnell/ncbm.hpp"

#include <iostream>
#include <sstream>

namespace oconnell {

struct CheckResult {
    bool ok = true;
    std::string detail;
};

struct NamedCheck {
    std::string name;
    std::function<CheckResult()> run;
};

namespace detail {

inline CheckResult expect(bool ok, const std::string& what, double got, double bound) {
    std::ostringstream os;
    os << what << ": " << got << " (bound " << bound << ")";
    return {ok, os.str()};
}

}  // namespace detail

// Invariant suite shared by the CLI `selftest` subcommand. Sizes are kept
// small so the whole suite runs in well under a minute.
inline std::vector<NamedCheck> invariant_suite() {
    std::vector<NamedCheck> c;
    const DriftSpec canon{{-0.5, 0.5}, 0.5};

    c.push_back({"numkit.gamma_reflection", [] {
                     std::mt19937_64 g(7);
                     std::uniform_real_distribution<double> U(-5, 5);
                     double worst = 0;
                     for (int i = 0; i < 1000;) {
                         cplx z(U(g), U(g));
                         if (std::abs(z.imag()) < 1e-3 && std::abs(z.real() - std::round(z.real())) < 1e-3) continue;
                         ++i;
                         cplx v = gamma_fn(z) * gamma_fn(1.0 - z) * std::sin(pi * z) / pi;
                         worst = std::max(worst, std::abs(v - 1.0));
                     }
                     return detail::expect(worst < 1e-12, "max |reflection - 1|", worst, 1e-12);
                 }});
    c.push_back({"numkit.gamma_conjugation", [] {
                     std::mt19937_64 g(8);
                     std::uniform_real_distribution<double> U(-5, 5);
                     double worst = 0;
                     for (int i = 0; i < 200; ++i) {
                         cplx z(U(g), U(g));
                         cplx a = gamma_fn(std::conj(z)), b = std::conj(gamma_fn(z));
                         worst = std::max(worst, std::abs(a - b) / std::abs(b));
                     }
                     return detail::expect(worst < 1e-13, "max conjugation gap", worst, 1e-13);
                 }});
    c.push_back({"numkit.bessel_reality", [] {
                     double worst = 0;
                     for (double o : {0.3, 1.7}) {
                         for (double x : {0.01, 1.0, 10.0}) {
                             for (cplx ord : {cplx(o, 0), cplx(0, o)}) {
                                 cplx v = bessel_k(ord, x);
                                 worst = std::max(worst, std::abs(v.imag()) / std::abs(v));
                             }
                         }
                     }
                     return detail::expect(worst < 1e-12, "max |Im|/|K|", worst, 1e-12);
                 }});
    c.push_back({"whittaker.closed_form_vs_givental", [] {
                     double worst = 0;
                     for (double n1 : {-0.7, 0.0, 0.6})
                         for (double x2 : {-0.5, 0.4, 2.0}) {
                             cplx g = whittaker_givental({{n1, 0.3}}, {0.1, x2}).value;
                             cplx k = whittaker_n2(n1, 0.3, 0.1, x2);
                             worst = std::max(worst, std::abs(g - k) / std::abs(k));
                         }
                     return detail::expect(worst < 1e-8, "max relative gap", worst, 1e-8);
                 }});
    c.push_back({"whittaker.sklyanin_forms", [] {
                     std::mt19937_64 g(9);
                     std::uniform_real_distribution<double> gap(0.1, 3.0), st(-2, 2);
                     double worst = 0;
                     for (int i = 0; i < 100; ++i) {
                         double m0 = st(g);
                         std::vector<double> mu{m0, m0 + gap(g)};
                         if (i % 2) mu.push_back(mu[1] + gap(g));
                         double a = sklyanin_density(mu), b = sklyanin_density_gamma(mu);
                         worst = std::max(worst, std::abs(a - b) / a);
                     }
                     return detail::expect(worst < 1e-12, "max relative gap", worst, 1e-12);
                 }});
    c.push_back({"whittaker.recurrence", [] {
                     std::mt19937_64 g(10);
                     std::uniform_real_distribution<double> U(-2, 2);
                     double worst = 0;
                     for (int i = 0; i < 20;) {
                         std::vector<double> nu{U(g), U(g)}, x{U(g), U(g)};
                         if (std::abs(nu[0] - nu[1]) < 0.2 || std::abs(x[0] - x[1]) < 0.2) continue;
                         ++i;
                         worst = std::max(worst, check_recurrence(nu, x));
                     }
                     return detail::expect(worst < 1e-8, "max residual", worst, 1e-8);
                 }});
    c.push_back({"kernel.reality_and_rank", [canon] {
                     double worst = 0;
                     PhiLifted phi(canon);
                     for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0})
                         for (double xp : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
                             KernelValue v = detail::bK_once(phi, 1.0, x, xp, 64);
                             worst = std::max(worst, std::abs(v.imag) / (1.0 + std::abs(v.value)));
                         }
                     if (!(worst < 1e-10)) return detail::expect(false, "max imaginary residual", worst, 1e-10);
                     std::vector<double> pts{-1.3, 0.2, 1.1};
                     RMatrix m(3, 3);
                     double mx = 0;
                     for (int p = 0; p < 3; ++p)
                         for (int q = 0; q < 3; ++q) {
                             m(p, q) = kernel_calK(canon, {1.0, 0.0}, pts[p], pts[q]);
                             mx = std::max(mx, std::abs(m(p, q)));
                         }
                     double d = std::abs(determinant(m)) / (mx * mx * mx);
                     return detail::expect(d < 1e-8, "scaled 3x3 determinant", d, 1e-8);
                 }});
    c.push_back({"kernel.near_pole", [canon] {
                     PhiLifted phi(canon);
                     bool near = false, far = true;
                     try {
                         phi(0, cplx(phi.pole(0, 1) + 1e-9, 0));
                     } catch (const Error& e) {
                         near = e.code() == Errc::NearPole;
                     }
                     try {
                         phi(0, cplx(phi.pole(0, 1) + 1e-7, 0));
                     } catch (const Error&) {
                         far = false;
                     }
                     return CheckResult{near && far, "NearPole raised exactly inside 1e-8"};
                 }});
    c.push_back({"fredholm.range_and_monotone", [canon] {
                     double prev = 2.0, lo = 1.0, hi = 0.0;
                     bool mono = true;
                     for (int i = 0; i < 9; ++i) {
                         double v = fredholm_rank_det(canon, {1.0, -2.0 + 0.5 * i});
                         mono = mono && v <= prev + 1e-12;
                         prev = v;
                         lo = std::min(lo, v);
                         hi = std::max(hi, v);
                     }
                     bool ok = mono && lo > -1e-6 && hi < 1.0 + 1e-6;
                     return CheckResult{ok, "values in [0,1] and nonincreasing over h = -2..2"};
                 }});
    c.push_back({"fredholm.permutation_and_series", [canon] {
                     DriftSpec sw{{0.5, -0.5}, 0.5};
                     double a = fredholm_rank_det(canon, {1.0, 0.0}), b = fredholm_rank_det(sw, {1.0, 0.0});
                     double s = fredholm_series_direct(canon, {1.0, 0.0}, {}, 2);
                     double g = std::max(std::abs(a - b) / 1e-12, std::abs(a - s) / 1e-6);
                     return detail::expect(g < 1.0, "max(perm gap/1e-12, series gap/1e-6)", g, 1.0);
                 }});
    c.push_back({"cbm.worker_independence", [canon] {
                     MCConfig m1;
                     m1.sample_count = 5000;
                     m1.batch_size = 512;
                     m1.seed = 5;
                     m1.workers = 1;
                     MCConfig m4 = m1;
                     m4.workers = 4;
                     Estimate e1 = cbm_estimate(canon, {1.0, 0.0}, m1), e4 = cbm_estimate(canon, {1.0, 0.0}, m4);
                     bool ok = e1.value == e4.value && e1.std_error == e4.std_error && e1.rejected == 0;
                     return CheckResult{ok, "bit-identical estimate for 1 and 4 workers"};
                 }});
    c.push_back({"ncbm.normalization_and_gue", [] {
                     WeylPoint x({0.0, 1.0});
                     auto w = detail::window_around(x.coords, 1.0, 12.0);
                     double n1 = integrate_weyl(2, w.lo, w.hi, 200,
                                                [&](const std::vector<double>& y) { return ncbm_density(1.0, WeylPoint(y), x); });
                     double n2 = integrate_weyl(2, -14, 14, 200, [&](const std::vector<double>& y) { return gue_density(1.0, WeylPoint(y)); });
                     double g = std::max(std::abs(n1 - 1) / 1e-6, std::abs(n2 - 1) / 1e-8);
                     return detail::expect(g < 1.0, "max scaled normalization gap", g, 1.0);
                 }});
    c.push_back({"ncbm.gap_monotone", [] {
                     WeylPoint s({-0.5, 0.5});
                     double prev = 1.0 + 1e-8;
                     bool ok = true;
                     for (double h = -3; h <= 3; h += 0.5) {
                         double v = gap_probability(s, 1.0, h);
                         ok = ok && v <= prev + 1e-12 && v >= -1e-8 && v <= 1 + 1e-8;
                         prev = v;
                     }
                     return CheckResult{ok, "gap probability in [0,1] and nonincreasing"};
                 }});
    c.push_back({"measure.identities", [] {
                     std::mt19937_64 g(11);
                     std::uniform_real_distribution<double> U(-2, 2);
                     double worst = 0;
                     for (int i = 0; i < 100; ++i) {
                         cplx v1(U(g), U(g)), v2(U(g), U(g));
                         auto [p, q] = identity_det_size2(v1, v2);
                         worst = std::max(worst, std::abs(p - q) / std::max(1.0, std::abs(q)));
                         std::vector<cplx> v{v1, v2, {U(g), U(g)}, {U(g), U(g)}};
                         auto [l, r] = identity_symmetrization(v);
                         worst = std::max(worst, std::abs(l - r) / std::max(1.0, std::abs(r)));
                     }
                     return detail::expect(worst < 1e-11, "max identity gap", worst, 1e-11);
                 }});
    c.push_back({"measure.moment_routes", [canon] {
                     MomentRoutes m = moment_first(canon, 1.0);
                     double k1 = moment_kappa(canon, 1.0, 1);
                     double g = std::max(m.rel_gap, std::abs(k1 - m.route_b) / std::abs(m.route_b));
                     return detail::expect(g < 1e-10, "max relative gap", g, 1e-10);
                 }});
    return c;
}

// Runs the suite; returns the name of the first failing check or "".
inline std::string run_invariant_suite(std::ostream& out) {
    for (const auto& chk : invariant_suite()) {
        CheckResult r;
        try {
            r = chk.run();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        out << (r.ok ? "PASS " : "FAIL ") << chk.name << "  " << r.detail << '\n';
        if (!r.ok) return chk.name;
    }
    return "";
}

}  // namespace oconnell
