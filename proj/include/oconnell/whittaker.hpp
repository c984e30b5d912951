#pragma once

#include "oconnell/numkit.hpp"

namespace oconnell {

struct WhittakerIndex {
    std::vector<cplx> nu;
    std::size_t N() const { return nu.size(); }
};

// Lower triangular array T_{j,k}, 1 <= k <= j <= N-1, stored row by row,
// plus the bottom row T_{N,.} = x.
struct GiventalArray {
    std::vector<double> interior;
    std::vector<double> boundary;
};

namespace detail {

struct TriangularView {
    const GiventalArray& arr;
    std::size_t N;
    // 1-based (j,k)
    double operator()(std::size_t j, std::size_t k) const {
        if (j == N) return arr.boundary[k - 1];
        return arr.interior[(j - 1) * j / 2 + (k - 1)];
    }
};

}  // namespace detail

inline cplx givental_exponent(const WhittakerIndex& index, const GiventalArray& arr) {
    const std::size_t N = index.N();
    if (N == 0 || arr.boundary.size() != N || arr.interior.size() != N * (N - 1) / 2)
        throw Error(Errc::SizeMismatch, "Givental array does not match the index size");
    detail::TriangularView T{arr, N};
    cplx f = 0.0;
    for (std::size_t j = 1; j <= N; ++j) {
        double row = 0.0;
        for (std::size_t k = 1; k <= j; ++k) row += T(j, k);
        for (std::size_t k = 1; k + 1 <= j; ++k) row -= T(j - 1, k);
        f += index.nu[j - 1] * row;
    }
    for (std::size_t j = 1; j + 1 <= N; ++j)
        for (std::size_t k = 1; k <= j; ++k)
            f -= std::exp(-(T(j, k) - T(j + 1, k))) + std::exp(-(T(j + 1, k + 1) - T(j, k)));
    return f;
}

struct WhittakerValue {
    cplx value;
    double error = 0;  // |order-doubled - base|
};

namespace detail {

// Window for a variable y held between walls -e^{A-y} and -e^{y-B}, with
// linear growth rate at most c. Beyond the returned interval the integrand
// is below e^{-K} relative to its peak.
struct Window {
    double lo, hi;
};

inline Window wall_window(double A, double B, double c) {
    const double K = 60.0 + 4.0 * std::abs(c) * (std::abs(B - A) + 10.0);
    const double mid = 0.5 * (A + B), lk = std::log(K);
    return {std::min(A - lk, mid - 5.0), std::max(B + lk, mid + 5.0)};
}

inline double max_rate(const WhittakerIndex& idx) {
    double c = 0;
    for (const cplx& v : idx.nu) c += std::abs(v.real());
    return c;
}

inline cplx givental_n2(const WhittakerIndex& idx, const std::vector<double>& x, int order) {
    Window w = wall_window(x[0], x[1], max_rate(idx));
    QuadRule r = gauss_legendre(order, w.lo, w.hi);
    std::vector<cplx> terms(r.size());
    GiventalArray arr{{0.0}, x};
    for (std::size_t q = 0; q < r.size(); ++q) {
        arr.interior[0] = r.nodes[q];
        terms[q] = r.weights[q] * std::exp(givental_exponent(idx, arr));
    }
    return pairwise_sum(terms);
}

// Interior order (T11; T21, T22).
inline cplx givental_n3(const WhittakerIndex& idx, const std::vector<double>& x, int order, unsigned workers) {
    const double c = max_rate(idx);
    Window w21 = wall_window(x[0], x[1], c), w22 = wall_window(x[1], x[2], c);
    QuadRule r21 = gauss_legendre(order, w21.lo, w21.hi);
    QuadRule r22 = gauss_legendre(order, w22.lo, w22.hi);
    std::vector<cplx> outer(r21.size());
    parallel_for(r21.size(), workers, [&](std::size_t p) {
        GiventalArray arr{{0.0, 0.0, 0.0}, x};
        arr.interior[1] = r21.nodes[p];
        std::vector<cplx> mid(r22.size());
        for (std::size_t q = 0; q < r22.size(); ++q) {
            arr.interior[2] = r22.nodes[q];
            Window w11 = wall_window(arr.interior[1], arr.interior[2], c);
            QuadRule r11 = gauss_legendre(order, w11.lo, w11.hi);
            std::vector<cplx> inner(r11.size());
            for (std::size_t s = 0; s < r11.size(); ++s) {
                arr.interior[0] = r11.nodes[s];
                inner[s] = r11.weights[s] * std::exp(givental_exponent(idx, arr));
            }
            mid[q] = r22.weights[q] * pairwise_sum(inner);
        }
        outer[p] = r21.weights[p] * pairwise_sum(mid);
    });
    return pairwise_sum(outer);
}

}  // namespace detail

inline WhittakerValue whittaker_givental(const WhittakerIndex& index, const std::vector<double>& x,
                                         const QuadConfig& quad = {}) {
    quad.validate();
    const std::size_t N = index.N();
    if (N == 0 || x.size() != N) throw Error(Errc::SizeMismatch, "x must have N entries");
    if (N > 3) throw Error(Errc::UnsupportedN, "whittaker_givental supports N <= 3");
    if (N == 1) return {std::exp(index.nu[0] * x[0]), 0.0};
    WhittakerValue out;
    cplx base, fine;
    if (N == 2) {
        base = detail::givental_n2(index, x, quad.gl_order);
        fine = detail::givental_n2(index, x, quad.gl_order * quad.refine_factor);
    } else {
        base = detail::givental_n3(index, x, quad.gl_order, quad.workers);
        fine = detail::givental_n3(index, x, quad.gl_order * quad.refine_factor, quad.workers);
    }
    out.value = fine;
    out.error = std::abs(fine - base);
    if (out.error > 1e-6 * std::abs(fine)) throw Error(Errc::NonConvergent, "Givental quadrature did not converge");
    return out;
}

// psi for N = 2 after the substitution T = (x1+x2)/2 + s.
inline cplx whittaker_n2(cplx nu1, cplx nu2, double x1, double x2) {
    return 2.0 * std::exp((nu1 + nu2) * (0.5 * (x1 + x2))) * bessel_k(nu1 - nu2, 2.0 * std::exp(-0.5 * (x2 - x1)));
}

inline double sklyanin_density(const std::vector<double>& mu) {
    const std::size_t N = mu.size();
    if (N > 3) throw Error(Errc::UnsupportedN, "sklyanin_density supports N <= 3");
    double p = 1.0;
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t l = j + 1; l < N; ++l) {
            double d = mu[l] - mu[j];
            p *= d * std::sinh(pi * d) / pi;
        }
    double fact = 1.0;
    for (std::size_t k = 2; k <= N; ++k) fact *= k;
    return p / (std::pow(2.0 * pi, static_cast<double>(N)) * fact);
}

// Same density through prod |Gamma(i(mu_l - mu_j))|^{-2}.
inline double sklyanin_density_gamma(const std::vector<double>& mu) {
    const std::size_t N = mu.size();
    if (N > 3) throw Error(Errc::UnsupportedN, "sklyanin_density supports N <= 3");
    double lp = 0.0;
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t l = j + 1; l < N; ++l) {
            double d = mu[l] - mu[j];
            if (d == 0.0) return 0.0;
            lp -= 2.0 * log_gamma(cplx(0.0, d)).real();
        }
    double fact = 1.0;
    for (std::size_t k = 2; k <= N; ++k) fact *= k;
    return std::exp(lp) / (std::pow(2.0 * pi, static_cast<double>(N)) * fact);
}

namespace detail {

inline void require_n2_distinct(const std::vector<double>& nu, const std::vector<double>& x) {
    if (nu.size() != 2 || x.size() != 2) throw Error(Errc::SizeMismatch, "N = 2 required");
    if (nu[0] == nu[1]) throw Error(Errc::DegenerateIndex, "nu entries must be distinct");
}

}  // namespace detail

// Relative residual of the r = 1 recurrence for N = 2.
inline double check_recurrence(const std::vector<double>& nu, const std::vector<double>& x) {
    detail::require_n2_distinct(nu, x);
    const cplx I(0.0, 1.0);
    // index i(nu + i e_j) = i nu - e_j
    cplx lhs = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
        std::size_t k = 1 - j;
        cplx coef = 1.0 / (I * (nu[k] - nu[j]));
        cplx n1 = I * nu[0] - (j == 0 ? 1.0 : 0.0);
        cplx n2 = I * nu[1] - (j == 1 ? 1.0 : 0.0);
        lhs += coef * whittaker_n2(n1, n2, x[0], x[1]);
    }
    cplx rhs = std::exp(-x[0]) * whittaker_n2(I * nu[0], I * nu[1], x[0], x[1]);
    return std::abs(lhs - rhs) / std::abs(rhs);
}

// Relative gaps |a psi_{a nu}(x/a) - det[e^{x_j nu_l}]/h(nu)| along a_values.
inline std::vector<double> check_asymptotic(const std::vector<double>& nu, const std::vector<double>& x,
                                            const std::vector<double>& a_values) {
    detail::require_n2_distinct(nu, x);
    const double target =
        (std::exp(x[0] * nu[0] + x[1] * nu[1]) - std::exp(x[0] * nu[1] + x[1] * nu[0])) / (nu[1] - nu[0]);
    std::vector<double> gaps;
    for (double a : a_values) {
        if (!(a > 0)) throw Error(Errc::ConfigError, "a values must be positive");
        double v = a * whittaker_n2(a * nu[0], a * nu[1], x[0] / a, x[1] / a).real();
        gaps.push_back(std::abs(v - target) / std::abs(target));
    }
    return gaps;
}

}  // namespace oconnell
