#pragma once

#include "oconnell/kernel.hpp"

namespace oconnell {

struct GramMatrix {
    RMatrix entries;
    double h = 0;
    bool truncation_warning = false;  // kept for report compatibility; the window is never clipped
    double refine_diff = 0;           // max entry change under order refinement
};

namespace detail {

// Lower end of the x-window. Below t(min nu - 1/a) the integrand B_j A_k is
// dominated by crossed-pole terms that decay like e^{(1/a - spread) x}, so the
// cutoff adds a margin for that exponential tail on top of the Gaussian one.
inline double gram_lower(const DriftSpec& d, double t, double tail) {
    double rate = 1.0 / d.a - d.spread();
    return t * (d.min_nu() - 1.0 / d.a) - tail * std::sqrt(t) - 30.0 / rate;
}

inline double gram_upper(const DriftSpec& d, double t, double h, double tail) {
    return std::min(h, t * d.max_nu() + tail * std::sqrt(t));
}

// Gauge-scaled factors on the x-nodes:
//   Bs(j,p) = B_j(x_p/t) e^{-x_p^2/2t},  As(k,p) = A_k(x_p) e^{x_p^2/2t}.
struct GaugedFactors {
    QuadRule rule;
    RMatrix Bs, As;
};

inline GaugedFactors gauged_factors(const PhiLifted& phi, const ObservablePoint& obs, int gl, int gh,
                                    double tail, unsigned workers) {
    const DriftSpec& d = phi.drift();
    const std::size_t N = d.N();
    const double t = obs.t;
    GaugedFactors g;
    double L = gram_lower(d, t, tail), U = gram_upper(d, t, obs.h, tail);
    if (!(U > L)) return g;
    g.rule = gauss_legendre(gl, L, U);
    const std::size_t P = g.rule.size();
    g.Bs = RMatrix(N, P);
    g.As = RMatrix(N, P);
    KernelFactors kf(phi, 1.0 / t, gh);
    std::vector<double> imag(N * P, 0.0);
    parallel_for(P, workers, [&](std::size_t p) {
        double x = g.rule.nodes[p];
        for (std::size_t j = 0; j < N; ++j) {
            KernelValue b = kf.B(j, x / t, true);
            g.Bs(j, p) = b.value;
            imag[j * P + p] = b.imag;
            g.As(j, p) = std::exp(d.nu_hat[j] * x - 0.5 * t * d.nu_hat[j] * d.nu_hat[j]) / std::sqrt(2.0 * pi * t);
        }
    });
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t p = 0; p < P; ++p)
            if (std::abs(imag[j * P + p]) > 1e-10 * (1.0 + std::abs(g.Bs(j, p))))
                throw Error(Errc::NonConvergent, "kernel factor imaginary residual exceeds 1e-10");
    return g;
}

inline RMatrix gram_once(const PhiLifted& phi, const ObservablePoint& obs, int gl, int gh, double tail,
                         unsigned workers) {
    const std::size_t N = phi.drift().N();
    RMatrix G(N, N);
    GaugedFactors g = gauged_factors(phi, obs, gl, gh, tail, workers);
    const std::size_t P = g.rule.size();
    std::vector<double> terms(P);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = 0; k < N; ++k) {
            for (std::size_t p = 0; p < P; ++p) terms[p] = g.rule.weights[p] * g.Bs(j, p) * g.As(k, p);
            G(j, k) = pairwise_sum(terms);
        }
    return G;
}

inline double det_I_minus(const RMatrix& G) {
    RMatrix m = RMatrix::identity(G.rows());
    for (std::size_t j = 0; j < G.rows(); ++j)
        for (std::size_t k = 0; k < G.cols(); ++k) m(j, k) -= G(j, k);
    return determinant(m);
}

}  // namespace detail

namespace detail {

// Base-order and refined Gram matrices; the refined one is returned in `fine`.
inline GramMatrix gram_refined(const DriftSpec& drift, const ObservablePoint& obs, const QuadConfig& quad,
                               RMatrix* coarse) {
    quad.validate();
    obs.validate();
    PhiLifted phi(drift);
    GramMatrix out;
    out.h = obs.h;
    RMatrix g1 = gram_once(phi, obs, quad.gl_order, quad.gh_order, quad.tail_sigmas, quad.workers);
    RMatrix g2 = gram_once(phi, obs, quad.gl_order * quad.refine_factor, quad.gh_order * quad.refine_factor,
                           quad.tail_sigmas, quad.workers);
    for (std::size_t j = 0; j < g1.rows(); ++j)
        for (std::size_t k = 0; k < g1.cols(); ++k)
            out.refine_diff = std::max(out.refine_diff, std::abs(g1(j, k) - g2(j, k)));
    if (out.refine_diff > 1e-8) throw Error(Errc::NonConvergent, "gram_matrix refinement discrepancy > 1e-8");
    out.entries = std::move(g2);
    if (coarse) *coarse = std::move(g1);
    return out;
}

}  // namespace detail

// G_jk = int_{-inf}^h B_j(x) A_k(x) dx for the factorization
// calK(x,x') = sum_j A_j(x) B_j(x').
inline GramMatrix gram_matrix(const DriftSpec& drift, const ObservablePoint& obs, const QuadConfig& quad = {}) {
    return detail::gram_refined(drift, obs, quad, nullptr);
}

// Same Gram matrix with the x-integral done in closed form first; what is
// left is one vertical line integral per entry. Independent of the
// pole bookkeeping in KernelFactors.
inline GramMatrix gram_matrix_sline(const DriftSpec& drift, const ObservablePoint& obs, const QuadConfig& quad = {}) {
    quad.validate();
    obs.validate();
    PhiLifted phi(drift);
    const std::size_t N = drift.N();
    const double t = obs.t, h = obs.h;
    GramMatrix out;
    out.h = h;
    out.entries = RMatrix(N, N);
    if (h == -std::numeric_limits<double>::infinity()) return out;
    const double W = quad.sline_halfwidth_sigmas / std::sqrt(t);
    QuadRule r = gauss_legendre(2 * quad.gl_order, -W, W);
    const double smax = 0.5 * (drift.spread() + 1.0 / drift.a);
    const auto& nu = drift.nu_hat;
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = 0; k < N; ++k) {
            const double D = nu[k] - nu[j];
            double sig = std::min(nu[j] - h / t, smax);
            if (std::abs(sig + D) < 0.25) sig = sig < -D ? -D - 0.25 : -D + 0.25;
            double res = (sig < -D && j == k) ? 1.0 : 0.0;
            std::vector<cplx> terms(r.size());
            for (std::size_t q = 0; q < r.size(); ++q) {
                cplx s(sig, r.nodes[q]);
                cplx e = std::exp(-t * nu[j] * s + 0.5 * t * s * s + (D + s) * h);
                terms[q] = r.weights[q] * phi(j, nu[j] - s) * e / (s + D);
            }
            cplx I = pairwise_sum(terms) / (2.0 * pi);
            out.entries(j, k) = std::exp(0.5 * t * (nu[j] * nu[j] - nu[k] * nu[k])) * I.real() + res;
        }
    return out;
}

struct FredholmResult {
    double value = 0;
    double error_estimate = 0;
    GramMatrix gram;
};

inline FredholmResult fredholm_evaluate(const DriftSpec& drift, const ObservablePoint& obs, const QuadConfig& quad = {}) {
    FredholmResult r;
    RMatrix g1;
    r.gram = detail::gram_refined(drift, obs, quad, &g1);
    r.value = detail::det_I_minus(r.gram.entries);
    r.error_estimate = std::abs(r.value - detail::det_I_minus(g1));
    return r;
}

// det(I - G); equals the (N+1)-term Fredholm series because the kernel has rank N.
inline double fredholm_rank_det(const DriftSpec& drift, const ObservablePoint& obs, const QuadConfig& quad = {}) {
    return detail::det_I_minus(gram_matrix(drift, obs, quad).entries);
}

// sum_{L=0}^{max_terms} (-1)^L/L! int_{(-inf,h)^L} det[calK(x_i,x_j)] dx on a
// tensor Gauss-Legendre grid. The L-fold tensor sum of determinants is the
// L-th elementary symmetric function of the weighted Nystrom matrix.
inline double fredholm_series_direct(const DriftSpec& drift, const ObservablePoint& obs, const QuadConfig& quad,
                                     int max_terms) {
    quad.validate();
    obs.validate();
    if (drift.N() > 3) throw Error(Errc::UnsupportedN, "fredholm_series_direct supports N <= 3");
    if (max_terms < 0 || max_terms > static_cast<int>(drift.N()))
        throw Error(Errc::ConfigError, "max_terms must lie in [0, N]");
    PhiLifted phi(drift);
    detail::GaugedFactors g =
        detail::gauged_factors(phi, obs, quad.gl_order, quad.gh_order, quad.tail_sigmas, quad.workers);
    const std::size_t P = g.rule.size();
    if (P == 0 || max_terms == 0) return 1.0;
    // gauge factors e^{(x_q^2 - x_p^2)/2t} cancel inside every determinant
    RMatrix M(P, P);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t q = 0; q < P; ++q) {
            double s = 0;
            for (std::size_t j = 0; j < drift.N(); ++j) s += g.As(j, p) * g.Bs(j, q);
            M(p, q) = s * g.rule.weights[q];
        }
    auto e = principal_minor_sums(M);
    double total = 1.0, sign = -1.0;
    for (int L = 1; L <= max_terms; ++L, sign = -sign) total += sign * e[L - 1];
    return total;
}

// ---------------------------------------------------------------- contour routes

struct ContourSpec {
    double circle_center = 0;
    double circle_radius = 0;
    double sline_re = 0;         // abscissa of the line in the hatted variable (delta/a)
    double sline_halfwidth = 0;  // half-length of the truncated line, same variable
    int circle_points = 128;
    int line_points = 400;
};

namespace detail {

inline double bc_delta(const DriftSpec& d) { return std::min(0.9, std::max(0.1, 2.5 * d.a * d.max_abs())); }

}  // namespace detail

// Circle around {-nu_j} in the v variable (nu = a nu_hat), line Re s = delta.
// The radius sits halfway between the enclosing radius and delta/2 so that
// v + s - v' never vanishes on the contours.
inline ContourSpec default_bc_contour(const DriftSpec& drift, const ObservablePoint& obs, const QuadConfig& quad = {}) {
    drift.validate();
    obs.validate();
    const double a = drift.a;
    double c = 0, renc = 0;
    for (double v : drift.nu_hat) c += -a * v;
    c /= drift.N();
    for (double v : drift.nu_hat) renc = std::max(renc, std::abs(-a * v - c));
    const double delta = detail::bc_delta(drift);
    ContourSpec cs;
    cs.circle_center = c;
    cs.circle_radius = quad.circle_radius > 0 ? quad.circle_radius : 0.5 * (renc + std::min(0.5 * delta, 0.5));
    if (renc == 0 && quad.circle_radius <= 0) cs.circle_radius = 0.25 * delta;
    cs.sline_re = delta / a;
    cs.sline_halfwidth = quad.sline_halfwidth_sigmas / std::sqrt(obs.t);
    cs.circle_points = quad.circle_points;
    cs.line_points = 2 * quad.gl_order;
    return cs;
}

inline void validate_bc_contour(const DriftSpec& drift, const ContourSpec& cs) {
    const double a = drift.a;
    const double delta = cs.sline_re * a;
    if (!(cs.circle_radius > 0)) throw Error(Errc::ContourViolation, "circle radius must be positive");
    for (double v : drift.nu_hat)
        if (!(std::abs(-a * v - cs.circle_center) < cs.circle_radius))
            throw Error(Errc::ContourViolation, "circle must enclose every -nu_j");
    if (!(2.0 * cs.circle_radius < 1.0)) throw Error(Errc::ContourViolation, "|v - v'| < 1 violated");
    if (!(delta > 0 && delta < 1)) throw Error(Errc::ContourViolation, "need 0 < delta < 1");
    if (!(delta > 2.0 * a * drift.max_abs())) throw Error(Errc::ContourViolation, "need delta > 2 max|nu_j|");
    if (!(2.0 * cs.circle_radius < delta))
        throw Error(Errc::ContourViolation, "v + s - v' would vanish: need circle diameter < delta");
    for (double v : drift.nu_hat)
        if (!(std::abs(-a * v - 1.0 - cs.circle_center) > cs.circle_radius))
            throw Error(Errc::ContourViolation, "circle must exclude the poles -nu_j - 1");
    if (!(cs.sline_halfwidth > 0) || cs.circle_points < 4 || cs.line_points < 4)
        throw Error(Errc::ContourViolation, "line/circle resolution invalid");
}

namespace detail {

// Integrand of the s-line integral without the 1/(v + s - v') factor.
inline cplx bc_integrand(const DriftSpec& d, const ObservablePoint& obs, cplx v, cplx s) {
    const double a = d.a, t = obs.t;
    cplx lg = s * (obs.h / a) + t * v * s / (a * a) + t * s * s / (2.0 * a * a);
    for (double nh : d.nu_hat) lg += log_gamma(v + a * nh) - log_gamma(s + v + a * nh);
    // Gamma(-s) Gamma(1+s) = -pi / sin(pi s)
    return -pi / detail::sin_pi(s) * std::exp(lg);
}

struct LineNodes {
    std::vector<cplx> s;
    std::vector<double> w;  // includes ds/(2 pi i) = dtau/(2 pi)
};

inline LineNodes bc_line(const DriftSpec& d, const ContourSpec& cs) {
    const double a = d.a;
    QuadRule r = gauss_legendre(cs.line_points, -cs.sline_halfwidth * a, cs.sline_halfwidth * a);
    LineNodes ln;
    for (std::size_t q = 0; q < r.size(); ++q) {
        ln.s.emplace_back(cs.sline_re * a, r.nodes[q]);
        ln.w.push_back(r.weights[q] / (2.0 * pi));
    }
    return ln;
}

}  // namespace detail

inline cplx bc_kernel_Ku(const DriftSpec& drift, const ObservablePoint& obs, cplx v, cplx vprime,
                         const ContourSpec& cs) {
    drift.validate();
    obs.validate();
    validate_bc_contour(drift, cs);
    auto ln = detail::bc_line(drift, cs);
    std::vector<cplx> terms(ln.s.size());
    for (std::size_t q = 0; q < ln.s.size(); ++q)
        terms[q] = ln.w[q] * detail::bc_integrand(drift, obs, v, ln.s[q]) / (v + ln.s[q] - vprime);
    return pairwise_sum(terms);
}

struct BcResult {
    std::vector<double> partial_sums;  // index L = 0..L_max
    std::vector<double> term_abs;      // |term L|, index L = 0..L_max
    double max_imag = 0;               // largest |Im| over the partial sums
};

// Partial sums of det(I + K_u) over the circle, terms L <= L_max (<= 3).
inline BcResult bc_fredholm_det(const DriftSpec& drift, const ObservablePoint& obs, const ContourSpec& cs, int L_max,
                                unsigned workers = 0) {
    drift.validate();
    obs.validate();
    validate_bc_contour(drift, cs);
    if (L_max < 0 || L_max > 3) throw Error(Errc::ConfigError, "L_max must lie in [0, 3]");
    ContourRule cr = circle_rule(cs.circle_center, cs.circle_radius, cs.circle_points);
    auto ln = detail::bc_line(drift, cs);
    const std::size_t M = cr.size(), S = ln.s.size();
    CMatrix F(M, S);
    parallel_for(M, workers, [&](std::size_t m) {
        for (std::size_t q = 0; q < S; ++q) F(m, q) = ln.w[q] * detail::bc_integrand(drift, obs, cr.nodes[m], ln.s[q]);
    });
    CMatrix K(M, M);
    parallel_for(M, workers, [&](std::size_t m) {
        const cplx wm = cr.weights[m] / cplx(0.0, 2.0 * pi);
        std::vector<cplx> terms(S);
        for (std::size_t k = 0; k < M; ++k) {
            for (std::size_t q = 0; q < S; ++q) terms[q] = F(m, q) / (cr.nodes[m] + ln.s[q] - cr.nodes[k]);
            K(m, k) = wm * pairwise_sum(terms);
        }
    });
    auto e = principal_minor_sums(K);
    BcResult r;
    cplx ps = 1.0;
    r.partial_sums.push_back(1.0);
    r.term_abs.push_back(1.0);
    for (int L = 1; L <= L_max; ++L) {
        ps += e[L - 1];
        r.partial_sums.push_back(ps.real());
        r.term_abs.push_back(std::abs(e[L - 1]));
        r.max_imag = std::max(r.max_imag, std::abs(ps.imag()));
    }
    return r;
}

// Circle around {nu_hat_j} in w, line Re s_hat = delta/a.
inline ContourSpec default_chain_contour(const DriftSpec& drift, const ObservablePoint& obs, const QuadConfig& quad = {}) {
    drift.validate();
    obs.validate();
    double c = 0, renc = 0;
    for (double v : drift.nu_hat) c += v;
    c /= drift.N();
    for (double v : drift.nu_hat) renc = std::max(renc, std::abs(v - c));
    // nearest excluded poles sit at nu_hat_l + 1/a
    double excl = drift.min_nu() + 1.0 / drift.a - c;
    ContourSpec cs;
    cs.circle_center = c;
    cs.circle_radius = quad.circle_radius > 0 ? quad.circle_radius : std::min(0.45 / drift.a, 0.5 * (renc + excl));
    cs.sline_re = detail::bc_delta(drift) / drift.a;
    cs.sline_halfwidth = quad.sline_halfwidth_sigmas / std::sqrt(obs.t);
    cs.circle_points = quad.circle_points;
    cs.line_points = 2 * quad.gl_order;
    return cs;
}

// Double-contour kernel K_hat(x,x') (circle in w, line in s_hat) compared
// with -(1/t) e^{(x^2 - x'^2)/2t} bK(1/t; x/t, x'/t). Returns the relative residual.
inline double check_kernel_chain(const DriftSpec& drift, const ObservablePoint& obs, double x, double xprime,
                                const ContourSpec& cs, const QuadConfig& quad = {}) {
    drift.validate();
    obs.validate();
    quad.validate();
    const double a = drift.a, t = obs.t;
    const double delta = cs.sline_re * a;
    if (!(delta > 0 && delta < 1)) throw Error(Errc::ContourViolation, "need 0 < delta < 1");
    for (double v : drift.nu_hat) {
        if (!(std::abs(v - cs.circle_center) < cs.circle_radius))
            throw Error(Errc::ContourViolation, "circle must enclose every nu_hat_j");
        if (!(std::abs(v + 1.0 / a - cs.circle_center) > cs.circle_radius))
            throw Error(Errc::ContourViolation, "circle must exclude nu_hat_j + 1/a");
    }
    ContourRule cr = circle_rule(cs.circle_center, cs.circle_radius, cs.circle_points);
    QuadRule lr = gauss_legendre(cs.line_points, -cs.sline_halfwidth, cs.sline_halfwidth);
    std::vector<cplx> outer(cr.size());
    parallel_for(cr.size(), quad.workers, [&](std::size_t m) {
        const cplx w = cr.nodes[m];
        cplx lw = 0.0;
        for (double nh : drift.nu_hat) lw += log_gamma(a * (nh - w));
        std::vector<cplx> terms(lr.size());
        for (std::size_t q = 0; q < lr.size(); ++q) {
            cplx s(cs.sline_re, lr.nodes[q]);
            cplx lg = lw + (xprime - t * w) * s + 0.5 * t * s * s + w * (x - xprime);
            for (double nh : drift.nu_hat) lg -= log_gamma(a * (s + nh - w));
            terms[q] = lr.weights[q] / (2.0 * pi) * (-pi / detail::sin_pi(a * s)) * std::exp(lg);
        }
        outer[m] = cr.weights[m] / cplx(0.0, 2.0 * pi) * pairwise_sum(terms);
    });
    cplx khat = -a * pairwise_sum(outer);
    PhiLifted phi(drift);
    KernelValue bk = detail::bK_once(phi, 1.0 / t, x / t, xprime / t, quad.gh_order);
    double rhs = std::exp((x * x - xprime * xprime) / (2.0 * t)) * bk.value / t;
    return std::abs(khat + rhs) / std::max(std::abs(rhs), 1e-300);
}

}  // namespace oconnell
