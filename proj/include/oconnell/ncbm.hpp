#pragma once

#include "oconnell/numkit.hpp"

namespace oconnell {

struct WeylPoint {
    std::vector<double> coords;

    WeylPoint() = default;
    explicit WeylPoint(std::vector<double> c) : coords(std::move(c)) { validate(); }

    std::size_t N() const { return coords.size(); }
    void validate() const {
        if (coords.empty()) throw Error(Errc::SizeMismatch, "WeylPoint must be non-empty");
        for (std::size_t j = 0; j + 1 < coords.size(); ++j)
            if (!(coords[j + 1] - coords[j] >= 1e-12))
                throw Error(Errc::DegenerateStart, "WeylPoint coordinates must be strictly increasing");
    }
};

namespace detail {

inline void require_small_n(std::size_t N) {
    if (N == 0 || N > 3) throw Error(Errc::UnsupportedN, "noncolliding oracles support 1 <= N <= 3");
}

inline double km_raw(double t, const std::vector<double>& y, const std::vector<double>& x) {
    const std::size_t N = x.size();
    RMatrix m(N, N);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = 0; k < N; ++k) m(j, k) = gaussian_density(t, y[j], x[k]);
    return determinant(m);
}

// Nested Gauss-Legendre over lo < y_1 < ... < y_N < hi.
template <class F>
double integrate_ordered(std::size_t N, double lo, double hi, int order, F&& f) {
    if (!(hi > lo)) return 0.0;
    std::vector<double> y(N);
    std::function<double(std::size_t, double)> level = [&](std::size_t i, double from) -> double {
        QuadRule r = gauss_legendre(order, from, hi);
        std::vector<double> terms(r.size());
        for (std::size_t q = 0; q < r.size(); ++q) {
            y[i] = r.nodes[q];
            terms[q] = r.weights[q] * (i + 1 == N ? f(static_cast<const std::vector<double>&>(y)) : level(i + 1, y[i]));
        }
        return pairwise_sum(terms);
    };
    return level(0, lo);
}

struct OrderedWindow {
    double lo, hi;
};

inline OrderedWindow window_around(const std::vector<double>& centers, double t, double tail) {
    double s = tail * std::sqrt(t);
    return {*std::min_element(centers.begin(), centers.end()) - s, *std::max_element(centers.begin(), centers.end()) + s};
}

// Base order, then refined; N = 3 compares order/2 with order to keep the cost cubic in order.
template <class F>
double ordered_checked(std::size_t N, double lo, double hi, const QuadConfig& quad, F&& f, double tol) {
    int o1 = N == 3 ? std::max(8, quad.gl_order / 2) : quad.gl_order;
    int o2 = N == 3 ? quad.gl_order : quad.gl_order * quad.refine_factor;
    double v1 = integrate_ordered(N, lo, hi, o1, f);
    double v2 = integrate_ordered(N, lo, hi, o2, f);
    if (std::abs(v1 - v2) > tol) throw Error(Errc::NonConvergent, "ordered-region quadrature did not converge");
    return v2;
}

}  // namespace detail

inline double km_density(double t, const WeylPoint& y, const WeylPoint& x) {
    if (y.N() != x.N()) throw Error(Errc::SizeMismatch, "y and x must have the same size");
    detail::require_small_n(x.N());
    return detail::km_raw(t, y.coords, x.coords);
}

inline double ncbm_density(double t, const WeylPoint& y, const WeylPoint& x) {
    if (y.N() != x.N()) throw Error(Errc::SizeMismatch, "y and x must have the same size");
    detail::require_small_n(x.N());
    double hx = vandermonde(x.coords);
    if (hx == 0.0) throw Error(Errc::DegenerateStart, "start has coincident points");
    return vandermonde(y.coords) / hx * detail::km_raw(t, y.coords, x.coords);
}

inline double ncbm_drift_density(double t, const WeylPoint& y, const WeylPoint& x, const std::vector<double>& nu) {
    const std::size_t N = x.N();
    if (y.N() != N || nu.size() != N) throw Error(Errc::SizeMismatch, "y, x and nu must have the same size");
    detail::require_small_n(N);
    for (std::size_t j = 0; j + 1 < N; ++j)
        if (nu[j + 1] < nu[j]) throw Error(Errc::ConfigError, "nu must be nondecreasing");
    RMatrix ey(N, N), ex(N, N);
    double nn = 0;
    for (std::size_t j = 0; j < N; ++j) {
        nn += nu[j] * nu[j];
        for (std::size_t k = 0; k < N; ++k) {
            ey(j, k) = std::exp(nu[j] * y.coords[k]);
            ex(j, k) = std::exp(nu[j] * x.coords[k]);
        }
    }
    double dx = determinant(ex);
    if (dx == 0.0) throw Error(Errc::DegenerateStart, "start or drift has coincident points");
    return std::exp(-0.5 * t * nn) * determinant(ey) / dx * detail::km_raw(t, y.coords, x.coords);
}

// P^{start}[X_1(1/t) > h t] for the driftless noncolliding motion.
inline double gap_probability(const WeylPoint& start, double t, double h, const QuadConfig& quad = {}) {
    quad.validate();
    if (!(t > 0)) throw Error(Errc::NonPositiveTime, "t must be positive");
    const std::size_t N = start.N();
    detail::require_small_n(N);
    const double tau = 1.0 / t;
    const double hx = vandermonde(start.coords);
    auto w = detail::window_around(start.coords, tau, quad.tail_sigmas);
    double lo = std::max(w.lo, h * t);
    if (lo >= w.hi) return 0.0;
    auto f = [&](const std::vector<double>& y) { return vandermonde(y) / hx * detail::km_raw(tau, y, start.coords); };
    return detail::ordered_checked(N, lo, w.hi, quad, f, 1e-9);
}

// Same probability from the t-scaled density
//   (h(x/t)/h(nu)) q_N(1/t, x/t | nu) t^{-N}  over  h < x_1 < ... < x_N,
// the a -> 0 limit of the lifted entrance law with drift nu.
inline double gap_probability_scaled(const WeylPoint& nu, double t, double h, const QuadConfig& quad = {}) {
    quad.validate();
    if (!(t > 0)) throw Error(Errc::NonPositiveTime, "t must be positive");
    const std::size_t N = nu.N();
    detail::require_small_n(N);
    const double hn = vandermonde(nu.coords);
    const double tN = std::pow(t, static_cast<double>(N));
    std::vector<double> centers(nu.coords);
    for (double& c : centers) c *= t;
    auto w = detail::window_around(centers, t, quad.tail_sigmas);
    double lo = std::max(w.lo, h);
    if (lo >= w.hi) return 0.0;
    auto f = [&](const std::vector<double>& x) {
        std::vector<double> y(x);
        for (double& v : y) v /= t;
        return vandermonde(y) / hn * detail::km_raw(1.0 / t, y, nu.coords) / tN;
    };
    return detail::ordered_checked(N, lo, w.hi, quad, f, 1e-9);
}

inline double gue_density(double t, const WeylPoint& x) {
    if (!(t > 0)) throw Error(Errc::NonPositiveTime, "t must be positive");
    const std::size_t N = x.N();
    detail::require_small_n(N);
    double g = 1.0, r2 = 0.0;
    for (std::size_t j = 1; j <= N; ++j) g *= std::tgamma(static_cast<double>(j));
    for (double v : x.coords) r2 += v * v;
    double h = vandermonde(x.coords);
    const double n = static_cast<double>(N);
    return std::pow(t, -n * n / 2.0) * std::pow(2.0 * pi, -n / 2.0) / g * std::exp(-r2 / (2.0 * t)) * h * h;
}

// Integral of a density over the ordered region inside [lo, hi]; used for
// normalization and moment checks.
template <class F>
double integrate_weyl(std::size_t N, double lo, double hi, int order, F&& f) {
    detail::require_small_n(N);
    return detail::integrate_ordered(N, lo, hi, order, std::forward<F>(f));
}

}  // namespace oconnell
