#pragma once

#include "oconnell/kernel.hpp"
#include "oconnell/whittaker.hpp"

namespace oconnell {

namespace detail {

inline double digamma(double x) {
    if (!(x > 0)) throw Error(Errc::PoleArgument, "digamma needs a positive argument here");
    double r = 0;
    while (x < 6) {
        r -= 1.0 / x;
        x += 1;
    }
    double f = 1.0 / (x * x);
    return r + std::log(x) - 0.5 / x -
           f * (1.0 / 12 - f * (1.0 / 120 - f * (1.0 / 252 - f * (1.0 / 240 - f * (1.0 / 132)))));
}

inline void require_n12(const DriftSpec& d) {
    d.validate();
    if (d.N() > 2) throw Error(Errc::UnsupportedN, "entrance-law oracles support N <= 2");
}

}  // namespace detail

// int e^{-t|k|^2/2} psi_{-iak}(x/a) s_N(ak) dk, tensor Gauss-Hermite in k.
inline double theta_entrance(const DriftSpec& drift, double t, const std::vector<double>& x, const QuadConfig& quad = {}) {
    detail::require_n12(drift);
    quad.validate();
    if (!(t > 0)) throw Error(Errc::NonPositiveTime, "t must be positive");
    if (x.size() != drift.N()) throw Error(Errc::SizeMismatch, "x must have N entries");
    const double a = drift.a;
    auto once = [&](int order) {
        QuadRule gh = gauss_hermite(order);
        const double sc = std::sqrt(2.0 / t);
        if (drift.N() == 1) {
            cplx s = 0.0;
            for (std::size_t p = 0; p < gh.size(); ++p) s += gh.weights[p] * std::exp(cplx(0.0, -sc * gh.nodes[p] * x[0]));
            return s * sc / (2.0 * pi);
        }
        std::vector<cplx> terms(gh.size() * gh.size());
        parallel_for(gh.size(), quad.workers, [&](std::size_t p) {
            for (std::size_t q = 0; q < gh.size(); ++q) {
                double k1 = sc * gh.nodes[p], k2 = sc * gh.nodes[q];
                cplx psi = whittaker_n2(cplx(0.0, -a * k1), cplx(0.0, -a * k2), x[0] / a, x[1] / a);
                terms[p * gh.size() + q] = gh.weights[p] * gh.weights[q] * psi * sklyanin_density({a * k1, a * k2});
            }
        });
        return pairwise_sum(terms) * sc * sc;
    };
    cplx v1 = once(quad.gh_order), v2 = once(quad.gh_order * quad.refine_factor);
    if (std::abs(v2.imag()) > 1e-10 * (1.0 + std::abs(v2.real())))
        throw Error(Errc::NonConvergent, "theta imaginary residual exceeds 1e-10");
    if (std::abs(v2 - v1) > 1e-8 * std::max(std::abs(v2), 1e-300))
        throw Error(Errc::NonConvergent, "theta order-doubling discrepancy > 1e-8");
    return v2.real();
}

namespace detail {

// For N = 2, theta(t,x) = sqrt(pi/t) e^{-S^2/t} I(d) with S = (x1+x2)/2,
// d = x2 - x1, z = 2 e^{-d/2a}. Two exact representations of I:
//  z > 1 : the k-integral done first in the centre-of-mass variable, leaving
//          a rapidly damped integral over the Bessel variable u;
//  z <= 1: power series in z with a Gamma-reciprocal k-integral per term,
//          on a contour shifted through the saddle (stable for large d).
inline double theta_i_damped(double a, double t, double z, int order) {
    const double U = std::min(std::acosh(1.0 + 45.0 / z), std::sqrt(45.0 * t) / a);
    QuadRule r = gauss_legendre(order, 0.0, U);
    const double om = 2.0 * pi * a * a / t;
    std::vector<double> terms(r.size());
    for (std::size_t q = 0; q < r.size(); ++q) {
        double u = r.nodes[q];
        terms[q] = r.weights[q] * std::exp(-z * std::cosh(u) - a * a * u * u / t) *
                   (pi * std::cos(om * u) - u * std::sin(om * u));
    }
    return (2.0 * a * a / t) * std::sqrt(4.0 * pi / t) * std::exp(a * a * pi * pi / t) * pairwise_sum(terms) /
           (4.0 * pi * pi * pi);
}

inline double theta_i_series(double a, double t, double d, int order) {
    const double z = 2.0 * std::exp(-d / (2.0 * a));
    double eta = d / t;
    for (int it = 0; it < 200; ++it) {
        double nxt = (d + 2.0 * a * digamma(1.0 + a * std::max(eta, 0.0))) / t;
        if (std::abs(nxt - eta) < 1e-13 * (1.0 + std::abs(eta))) {
            eta = nxt;
            break;
        }
        eta = nxt;
    }
    eta = std::max(eta, 0.0);
    const double W = 10.0 * std::sqrt(2.0 / t);
    QuadRule r = gauss_legendre(order, -W, W);
    const std::size_t P = r.size();
    std::vector<cplx> kap(P), lbase(P);
    for (std::size_t q = 0; q < P; ++q) {
        kap[q] = cplx(r.nodes[q], -eta);
        cplx k = kap[q];
        lbase[q] = -t * k * k / 4.0 - cplx(0.0, 0.5 * d) * k - log_gamma(1.0 + cplx(0.0, a) * k);
    }
    const double lz = 2.0 * std::log(z / 2.0);
    std::vector<cplx> acc(P, 0.0);
    std::vector<cplx> lrun(lbase);
    for (int m = 0;; ++m) {
        double lt = m * lz - std::lgamma(m + 1.0);
        if (m > 0 && lt < -60.0) break;
        if (m > 0)
            for (std::size_t q = 0; q < P; ++q) lrun[q] -= std::log(static_cast<double>(m) + cplx(0.0, a) * kap[q]);
        for (std::size_t q = 0; q < P; ++q) acc[q] += std::exp(lrun[q] + lt);
        if (m > 100000) throw Error(Errc::NonConvergent, "theta series did not terminate");
    }
    std::vector<cplx> terms(P);
    for (std::size_t q = 0; q < P; ++q) terms[q] = r.weights[q] * kap[q] * acc[q];
    return (cplx(0.0, a / (4.0 * pi * pi)) * pairwise_sum(terms)).real();
}

inline double theta_i(double a, double t, double d, int order) {
    const double z = 2.0 * std::exp(-d / (2.0 * a));
    return z > 1.0 ? theta_i_damped(a, t, z, std::max(400, 2 * order)) : theta_i_series(a, t, d, order);
}

}  // namespace detail

// Entrance-law density factor for N <= 2 from the stable representations above.
inline double theta_n2(double a, double t, const std::vector<double>& x, const QuadConfig& quad = {}) {
    if (!(t > 0)) throw Error(Errc::NonPositiveTime, "t must be positive");
    if (x.size() == 1) return gaussian_density(t, 0.0, x[0]);
    if (x.size() != 2) throw Error(Errc::UnsupportedN, "theta_n2 supports N <= 2");
    const double S = 0.5 * (x[0] + x[1]), d = x[1] - x[0];
    return std::sqrt(pi / t) * std::exp(-S * S / t) * detail::theta_i(a, t, d, quad.gl_order);
}

inline double wm_density(const DriftSpec& drift, double t, const std::vector<double>& x, const QuadConfig& quad = {}) {
    detail::require_n12(drift);
    if (x.size() != drift.N()) throw Error(Errc::SizeMismatch, "x must have N entries");
    const auto& nh = drift.nu_hat;
    const double a = drift.a;
    if (drift.N() == 1) return gaussian_density(t, t * nh[0], x[0]);
    double psi = whittaker_n2(a * nh[0], a * nh[1], x[0] / a, x[1] / a).real();
    double nn = nh[0] * nh[0] + nh[1] * nh[1];
    return std::exp(-0.5 * t * nn) * psi * theta_n2(a, t, x, quad);
}

struct OracleValue {
    double value = 0;
    double error = 0;  // |refined - base|
};

namespace detail {

// int int weight(x1, x2) wm(x) dx in (S, d) coordinates for N = 2, with the
// windows tilted by e^{-kappa x1/a}.
template <class Wt>
double wm_integral_once(const DriftSpec& drift, double t, double kappa, int nd, int ns, int gl, unsigned workers,
                        double tail, Wt&& weight) {
    const double a = drift.a;
    const auto& nh = drift.nu_hat;
    const double dlo = -2.0 * a * std::log(50.0) - 1.0;
    const double dhi = t * (std::abs(nh[1] - nh[0]) + kappa / a) + tail * std::sqrt(2.0 * t) + 2.0;
    const double sc = 0.5 * t * ((nh[0] + nh[1]) - kappa / a);
    const double shw = tail * std::sqrt(0.5 * t) + 2.0;
    QuadRule rd = gauss_legendre(nd, dlo, dhi);
    QuadRule rs = gauss_legendre(ns, sc - shw, sc + shw);
    const double nn = nh[0] * nh[0] + nh[1] * nh[1];
    std::vector<double> fs(rs.size());
    for (std::size_t q = 0; q < rs.size(); ++q) {
        double S = rs.nodes[q];
        fs[q] = std::exp(-0.5 * t * nn + (nh[0] + nh[1]) * S - S * S / t) * std::sqrt(pi / t);
    }
    std::vector<double> outer(rd.size());
    parallel_for(rd.size(), workers, [&](std::size_t p) {
        double d = rd.nodes[p];
        double z = 2.0 * std::exp(-d / (2.0 * a));
        double g = 2.0 * bessel_k(a * (nh[0] - nh[1]), z).real() * theta_i(a, t, d, gl);
        std::vector<double> inner(rs.size());
        for (std::size_t q = 0; q < rs.size(); ++q) {
            double S = rs.nodes[q];
            inner[q] = rs.weights[q] * fs[q] * weight(S - 0.5 * d, S + 0.5 * d);
        }
        outer[p] = rd.weights[p] * g * pairwise_sum(inner);
    });
    return pairwise_sum(outer);
}

template <class Wt>
OracleValue wm_integral(const DriftSpec& drift, double t, double kappa, const QuadConfig& quad, Wt&& weight) {
    const int nd = quad.gl_order * 3 / 2, ns = quad.gl_order;
    double v1 = wm_integral_once(drift, t, kappa, nd, ns, quad.gl_order, quad.workers, quad.tail_sigmas, weight);
    double v2 = wm_integral_once(drift, t, kappa, nd * quad.refine_factor, ns * quad.refine_factor, quad.gl_order,
                                 quad.workers, quad.tail_sigmas, weight);
    return {v2, std::abs(v2 - v1)};
}

// int weight(x) wm(x) dx for N = 1 (a Gaussian).
template <class Wt>
OracleValue gauss_integral(const DriftSpec& drift, double t, double shift, const QuadConfig& quad, Wt&& weight) {
    const double mu = t * drift.nu_hat[0] + shift, s = quad.tail_sigmas * std::sqrt(t);
    auto once = [&](int order) {
        QuadRule r = gauss_legendre(order, mu - s, mu + s);
        std::vector<double> terms(r.size());
        for (std::size_t q = 0; q < r.size(); ++q)
            terms[q] = r.weights[q] * weight(r.nodes[q]) * gaussian_density(t, t * drift.nu_hat[0], r.nodes[q]);
        return pairwise_sum(terms);
    };
    double v1 = once(quad.gl_order), v2 = once(quad.gl_order * quad.refine_factor);
    return {v2, std::abs(v2 - v1)};
}

inline void check_oracle(const OracleValue& v, double tol) {
    if (v.error > tol * std::max(1.0, std::abs(v.value)))
        throw Error(Errc::NonConvergent, "oracle quadrature refinement discrepancy too large");
}

}  // namespace detail

inline OracleValue wm_normalization(const DriftSpec& drift, double t, const QuadConfig& quad = {}) {
    detail::require_n12(drift);
    if (drift.N() == 1) return detail::gauss_integral(drift, t, 0.0, quad, [](double) { return 1.0; });
    return detail::wm_integral(drift, t, 0.0, quad, [](double, double) { return 1.0; });
}

// E[Theta^a(X_1(t) - h)] by direct quadrature against the entrance law.
inline OracleValue direct_observable_full(const DriftSpec& drift, const ObservablePoint& obs, const QuadConfig& quad = {}) {
    detail::require_n12(drift);
    obs.validate();
    quad.validate();
    const double a = drift.a, h = obs.h;
    OracleValue v;
    if (drift.N() == 1)
        v = detail::gauss_integral(drift, obs.t, 0.0, quad, [&](double x) { return theta_soft(x - h, a); });
    else
        v = detail::wm_integral(drift, obs.t, 0.0, quad, [&](double x1, double) { return theta_soft(x1 - h, a); });
    detail::check_oracle(v, 1e-6);
    return v;
}

inline double direct_observable(const DriftSpec& drift, const ObservablePoint& obs, const QuadConfig& quad = {}) {
    return direct_observable_full(drift, obs, quad).value;
}

// E[e^{-kappa X_1(t)/a}] by the same density quadrature.
inline OracleValue moment_density_oracle(const DriftSpec& drift, double t, int kappa, const QuadConfig& quad = {}) {
    detail::require_n12(drift);
    const double a = drift.a;
    auto w1 = [&](double x) { return std::exp(-kappa * x / a); };
    if (drift.N() == 1) return detail::gauss_integral(drift, t, -kappa * t / a, quad, w1);
    return detail::wm_integral(drift, t, kappa, quad, [&](double x1, double) { return std::exp(-kappa * x1 / a); });
}

// ---------------------------------------------------------------- contour moments

inline cplx f_factor(const DriftSpec& drift, double t, cplx v) {
    const double a = drift.a;
    cplx den = 1.0;
    for (double nh : drift.nu_hat) {
        cplx f = v + a * nh;
        if (std::abs(f) < 1e-12) throw Error(Errc::NearPole, "v coincides with a pole -nu_l");
        den *= f;
    }
    return std::exp(t * v / (a * a)) / den;
}

struct MomentRoutes {
    double route_a = 0;
    double route_b = 0;
    double rel_gap = 0;
};

namespace detail {

inline ContourRule moment_circle(const DriftSpec& d, int points) {
    double c = 0, renc = 0;
    for (double v : d.nu_hat) c += -d.a * v;
    c /= d.N();
    for (double v : d.nu_hat) renc = std::max(renc, std::abs(-d.a * v - c));
    return circle_rule(c, 0.5 * (renc + 0.5), points);
}

}  // namespace detail

inline MomentRoutes moment_first(const DriftSpec& drift, double t, const QuadConfig& quad = {}) {
    drift.validate();
    quad.validate();
    if (!(t > 0)) throw Error(Errc::NonPositiveTime, "t must be positive");
    const double a = drift.a;
    const std::size_t N = drift.N();
    std::vector<double> nu(N);
    for (std::size_t j = 0; j < N; ++j) nu[j] = a * drift.nu_hat[j];
    const double pre = std::exp(t / (2.0 * a * a));
    MomentRoutes r;
    std::vector<double> terms(N);
    for (std::size_t j = 0; j < N; ++j) {
        double p = std::exp(-t * nu[j] / (a * a));
        for (std::size_t l = 0; l < N; ++l)
            if (l != j) p /= nu[l] - nu[j];
        terms[j] = p;
    }
    r.route_a = pre * pairwise_sum(terms);
    ContourRule cr = detail::moment_circle(drift, quad.circle_points);
    std::vector<cplx> ct(cr.size());
    for (std::size_t m = 0; m < cr.size(); ++m) ct[m] = cr.weights[m] * f_factor(drift, t, cr.nodes[m]);
    r.route_b = pre * (pairwise_sum(ct) / cplx(0.0, 2.0 * pi)).real();
    r.rel_gap = std::abs(r.route_a - r.route_b) / std::abs(r.route_a);
    return r;
}

struct Partition {
    std::vector<int> parts;  // nonincreasing

    int size() const { return std::accumulate(parts.begin(), parts.end(), 0); }
    std::size_t length() const { return parts.size(); }
    // multiplicity of part value i
    int multiplicity(int i) const { return static_cast<int>(std::count(parts.begin(), parts.end(), i)); }
};

inline std::vector<Partition> partitions_of(int kappa) {
    if (kappa < 1) throw Error(Errc::ConfigError, "kappa must be >= 1");
    std::vector<Partition> out;
    std::vector<int> cur;
    std::function<void(int, int)> rec = [&](int rest, int maxp) {
        if (rest == 0) {
            out.push_back({cur});
            return;
        }
        for (int p = std::min(rest, maxp); p >= 1; --p) {
            cur.push_back(p);
            rec(rest - p, p);
            cur.pop_back();
        }
    };
    rec(kappa, kappa);
    return out;
}

// E[e^{-kappa X_1(t)/a}] as kappa! e^{kappa t/2a^2} sum_lambda (prod m_i!)^{-1}
//   (ell-fold circle integral of det[1/(v_j + lambda_j - v_k)] prod_j prod_{i<lambda_j} f(v_j + i)).
inline double moment_kappa(const DriftSpec& drift, double t, int kappa, const QuadConfig& quad = {}) {
    drift.validate();
    quad.validate();
    if (kappa < 1 || kappa > 3) throw Error(Errc::ConfigError, "kappa must lie in [1, 3]");
    if (!(t > 0)) throw Error(Errc::NonPositiveTime, "t must be positive");
    const double a = drift.a;
    ContourRule cr = detail::moment_circle(drift, quad.circle_points);
    const std::size_t M = cr.size();
    // every shift v + i with i < kappa, v on the circle, stays off the poles
    for (std::size_t m = 0; m < M; ++m)
        for (int i = 1; i < kappa; ++i)
            for (double nh : drift.nu_hat)
                if (std::abs(cr.nodes[m] + static_cast<double>(i) + a * nh) < 1e-6)
                    throw Error(Errc::ContourViolation, "shifted contour meets a pole");
    // F[l][m] = prod_{i<l} f(v_m + i)
    std::vector<std::vector<cplx>> F(kappa + 1, std::vector<cplx>(M, 1.0));
    for (int l = 1; l <= kappa; ++l)
        for (std::size_t m = 0; m < M; ++m)
            F[l][m] = F[l - 1][m] * f_factor(drift, t, cr.nodes[m] + static_cast<double>(l - 1));
    std::vector<cplx> w(M);
    for (std::size_t m = 0; m < M; ++m) w[m] = cr.weights[m] / cplx(0.0, 2.0 * pi);
    cplx total = 0.0;
    for (const Partition& lam : partitions_of(kappa)) {
        const std::size_t L = lam.length();
        double mult = 1.0;
        for (int i = 1; i <= kappa; ++i) mult *= std::tgamma(lam.multiplicity(i) + 1.0);
        std::size_t cells = 1;
        for (std::size_t j = 0; j < L; ++j) cells *= M;
        std::vector<cplx> terms(cells);
        parallel_for(cells, quad.workers, [&](std::size_t c) {
            std::vector<std::size_t> idx(L);
            std::size_t r = c;
            for (std::size_t j = 0; j < L; ++j) {
                idx[j] = r % M;
                r /= M;
            }
            CMatrix D(L, L);
            cplx wt = 1.0;
            for (std::size_t j = 0; j < L; ++j) {
                wt *= w[idx[j]] * F[lam.parts[j]][idx[j]];
                for (std::size_t k = 0; k < L; ++k)
                    D(j, k) = 1.0 / (cr.nodes[idx[j]] + static_cast<double>(lam.parts[j]) - cr.nodes[idx[k]]);
            }
            terms[c] = wt * determinant(D);
        });
        total += pairwise_sum(terms) / mult;
    }
    return std::tgamma(kappa + 1.0) * std::exp(kappa * t / (2.0 * a * a)) * total.real();
}

// kappa = 2 through the closed two-term expression:
//   E/2 = e^{t/a^2} [ (1/2) double circle of -(v1-v2)^2/(1-(v1-v2)^2) f(v1) f(v2)
//                   + (1/2) single circle of f(v) f(v+1) ].
inline double moment_two_closed(const DriftSpec& drift, double t, const QuadConfig& quad = {}) {
    drift.validate();
    quad.validate();
    const double a = drift.a;
    ContourRule cr = detail::moment_circle(drift, quad.circle_points);
    const std::size_t M = cr.size();
    std::vector<cplx> f0(M), wf(M);
    for (std::size_t m = 0; m < M; ++m) {
        f0[m] = f_factor(drift, t, cr.nodes[m]);
        wf[m] = cr.weights[m] / cplx(0.0, 2.0 * pi);
    }
    std::vector<cplx> dbl(M * M), sgl(M);
    for (std::size_t p = 0; p < M; ++p) {
        for (std::size_t q = 0; q < M; ++q) {
            cplx d = cr.nodes[p] - cr.nodes[q];
            dbl[p * M + q] = wf[p] * wf[q] * f0[p] * f0[q] * (-d * d / (1.0 - d * d));
        }
        sgl[p] = wf[p] * f0[p] * f_factor(drift, t, cr.nodes[p] + 1.0);
    }
    cplx half = 0.5 * pairwise_sum(dbl) + 0.5 * pairwise_sum(sgl);
    return 2.0 * std::exp(t / (a * a)) * half.real();
}

// ---------------------------------------------------------------- identities

inline std::pair<cplx, cplx> identity_det_size2(cplx v1, cplx v2) {
    cplx d = v1 - v2;
    if (std::abs(d * d - 1.0) < 1e-10) throw Error(Errc::SingularShift, "|v1 - v2| = 1");
    CMatrix m(2, 2);
    cplx v[2] = {v1, v2};
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) m(j, k) = 1.0 / (v[j] + 1.0 - v[k]);
    return {determinant(m), -d * d / (1.0 - d * d)};
}

inline std::pair<cplx, cplx> identity_symmetrization(const std::vector<cplx>& v) {
    const std::size_t K = v.size();
    if (K == 0 || K > 4) throw Error(Errc::SizeMismatch, "symmetrization identity takes 1..4 points");
    for (std::size_t j = 0; j < K; ++j)
        for (std::size_t k = 0; k < K; ++k)
            if (j != k && std::abs(v[j] - v[k] + 1.0) < 1e-10) throw Error(Errc::SingularShift, "v_j - v_k = -1");
    std::vector<std::size_t> sig(K);
    std::iota(sig.begin(), sig.end(), 0);
    std::vector<cplx> terms;
    do {
        cplx p = 1.0;
        for (std::size_t a = 0; a < K; ++a)
            for (std::size_t b = a + 1; b < K; ++b) {
                cplx d = v[sig[b]] - v[sig[a]];
                p *= d / (d + 1.0);
            }
        terms.push_back(p);
    } while (std::next_permutation(sig.begin(), sig.end()));
    cplx lhs = pairwise_sum(terms) / std::tgamma(K + 1.0);
    CMatrix m(K, K);
    for (std::size_t j = 0; j < K; ++j)
        for (std::size_t l = 0; l < K; ++l) m(j, l) = 1.0 / (v[j] + 1.0 - v[l]);
    return {lhs, determinant(m)};
}

}  // namespace oconnell
