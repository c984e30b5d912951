#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace oconnell {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

enum class Errc {
    PoleArgument,
    NonPositiveArg,
    NonPositiveTime,
    NonSquare,
    BadOrder,
    DivideByZero,
    SizeMismatch,
    UnsupportedN,
    NonConvergent,
    DegenerateIndex,
    RPrimeNotInConfig,
    NearPole,
    InvalidDrift,
    DegenerateDrift,
    ContourViolation,
    TooFewSamples,
    DegenerateStart,
    SingularShift,
    IoError,
    ConfigError,
    EmptyReport,
};

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::PoleArgument: return "PoleArgument";
    case Errc::NonPositiveArg: return "NonPositiveArg";
    case Errc::NonPositiveTime: return "NonPositiveTime";
    case Errc::NonSquare: return "NonSquare";
    case Errc::BadOrder: return "BadOrder";
    case Errc::DivideByZero: return "DivideByZero";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::UnsupportedN: return "UnsupportedN";
    case Errc::NonConvergent: return "NonConvergent";
    case Errc::DegenerateIndex: return "DegenerateIndex";
    case Errc::RPrimeNotInConfig: return "RPrimeNotInConfig";
    case Errc::NearPole: return "NearPole";
    case Errc::InvalidDrift: return "InvalidDrift";
    case Errc::DegenerateDrift: return "DegenerateDrift";
    case Errc::ContourViolation: return "ContourViolation";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::DegenerateStart: return "DegenerateStart";
    case Errc::SingularShift: return "SingularShift";
    case Errc::IoError: return "IoError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::EmptyReport: return "EmptyReport";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

inline cplx checked_div(cplx num, cplx den) {
    if (den == cplx(0.0, 0.0)) throw Error(Errc::DivideByZero, "complex division by zero");
    return num / den;
}

// Order-independent reduction (tree summation).
template <class T>
T pairwise_sum(const T* v, std::size_t n) {
    if (n == 0) return T{};
    if (n <= 8) {
        T s = v[0];
        for (std::size_t i = 1; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

template <class T>
T pairwise_sum(const std::vector<T>& v) {
    return pairwise_sum(v.data(), v.size());
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Callers write into
// per-index slots, so results never depend on scheduling.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- config

struct QuadConfig {
    int gh_order = 64;
    int gl_order = 200;
    double tail_sigmas = 12.0;
    int circle_points = 128;
    double circle_radius = 0.0;  // 0 selects the per-contour default
    double sline_halfwidth_sigmas = 10.0;
    int refine_factor = 2;
    unsigned workers = 0;  // 0 = hardware concurrency

    void validate() const {
        if (gh_order < 4 || gh_order % 2 != 0)
            throw Error(Errc::BadOrder, "gh_order must be an even integer >= 4");
        if (gl_order < 4) throw Error(Errc::BadOrder, "gl_order must be >= 4");
        if (circle_points < 4) throw Error(Errc::BadOrder, "circle_points must be >= 4");
        if (!(tail_sigmas > 0)) throw Error(Errc::ConfigError, "tail_sigmas must be positive");
        if (!(sline_halfwidth_sigmas > 0))
            throw Error(Errc::ConfigError, "sline_halfwidth_sigmas must be positive");
        if (circle_radius < 0) throw Error(Errc::ConfigError, "circle_radius must be positive");
        if (refine_factor < 2) throw Error(Errc::ConfigError, "refine_factor must be >= 2");
    }
};

// ---------------------------------------------------------------- gamma

namespace detail {

// g = 671/128, 14-term Lanczos set.
inline cplx log_gamma_lanczos(cplx z) {
    static constexpr std::array<double, 14> cof = {
        57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
        -0.491913816097620199,   .339946499848118887e-4,  .465236289270485756e-4,
        -.983744753048795646e-4, .158088703224912494e-3,  -.210264441724104883e-3,
        .217439618115212643e-3,  -.164318106536763890e-3, .844182239838527433e-4,
        -.261908384015814087e-4, .368991826595316234e-5};
    cplx tmp = z + 5.24218750000000000;
    tmp = (z + 0.5) * std::log(tmp) - tmp;
    cplx ser = 0.999999999999997092;
    cplx y = z;
    for (double c : cof) {
        y += 1.0;
        ser += c / y;
    }
    return tmp + std::log(2.5066282746310005 * ser) - std::log(z);
}

// sin(pi z) with the real part reduced exactly first.
inline cplx sin_pi(cplx z) {
    double xr = z.real() - 2.0 * std::round(0.5 * z.real());
    return std::sin(pi * cplx(xr, z.imag()));
}

}  // namespace detail

inline cplx log_gamma(cplx z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw Error(Errc::PoleArgument, "non-finite argument");
    double nr = std::round(z.real());
    if (nr <= 0.0 && std::abs(z - cplx(nr, 0.0)) < 1e-14)
        throw Error(Errc::PoleArgument, "log_gamma at a nonpositive integer");
    if (z.real() >= 0.5) return detail::log_gamma_lanczos(z);
    // reflection, with the 2*pi*i bookkeeping that keeps the principal branch
    double k = std::copysign(1.0, z.imag()) * std::floor(0.5 * z.real() + 0.25);
    return std::log(pi) - std::log(detail::sin_pi(z)) - detail::log_gamma_lanczos(1.0 - z) +
           cplx(0.0, 2.0 * pi * k);
}

inline cplx gamma_fn(cplx z) { return std::exp(log_gamma(z)); }

// ---------------------------------------------------------------- rules

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::size_t size() const { return nodes.size(); }
};

struct ContourRule {
    std::vector<cplx> nodes;
    std::vector<cplx> weights;  // sum w f(z) approximates the contour integral of f dz
    std::size_t size() const { return nodes.size(); }
};

// Weight e^{-u^2} on the real line.
inline QuadRule gauss_hermite(int order) {
    if (order < 2) throw Error(Errc::BadOrder, "gauss_hermite order must be >= 2");
    const int n = order;
    QuadRule r;
    r.nodes.assign(n, 0.0);
    r.weights.assign(n, 0.0);
    const double pim4 = std::pow(pi, -0.25);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * r.nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * r.nodes[1];
        else
            z = 2.0 * z - r.nodes[i - 2];
        double pp = 0.0;
        bool ok = false;
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) {
                ok = true;
                break;
            }
        }
        if (!ok) throw Error(Errc::NonConvergent, "gauss_hermite Newton iteration");
        r.nodes[i] = z;
        r.nodes[n - 1 - i] = -z;
        r.weights[i] = r.weights[n - 1 - i] = 2.0 / (pp * pp);
    }
    // ascending order
    std::reverse(r.nodes.begin(), r.nodes.end());
    std::reverse(r.weights.begin(), r.weights.end());
    return r;
}

inline QuadRule gauss_legendre(int order, double lo, double hi) {
    if (order < 2) throw Error(Errc::BadOrder, "gauss_legendre order must be >= 2");
    const int n = order;
    QuadRule r;
    r.nodes.assign(n, 0.0);
    r.weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    const double xm = 0.5 * (hi + lo), xl = 0.5 * (hi - lo);
    for (int i = 0; i < m; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-16) break;
        }
        r.nodes[i] = xm - xl * z;
        r.nodes[n - 1 - i] = xm + xl * z;
        r.weights[i] = r.weights[n - 1 - i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    }
    return r;
}

// Equispaced trapezoid rule on |z - center| = radius (counterclockwise).
inline ContourRule circle_rule(cplx center, double radius, int points) {
    if (points < 2) throw Error(Errc::BadOrder, "circle_rule needs >= 2 points");
    if (!(radius > 0)) throw Error(Errc::NonPositiveArg, "circle radius must be positive");
    ContourRule r;
    r.nodes.resize(points);
    r.weights.resize(points);
    for (int m = 0; m < points; ++m) {
        double th = 2.0 * pi * (m + 0.5) / points;
        cplx e = std::polar(1.0, th);
        r.nodes[m] = center + radius * e;
        r.weights[m] = cplx(0.0, 2.0 * pi / points) * radius * e;
    }
    return r;
}

// ---------------------------------------------------------------- special functions

namespace detail {

// exp(u^2) erfc(u)
inline double erfcx(double u) {
    if (u < 25.0) return std::exp(u * u) * std::erfc(u);
    // continued fraction, fully converged for u >= 25
    double f = u;
    for (int k = 60; k >= 1; --k) f = u + 0.5 * k / f;
    return 1.0 / (std::sqrt(pi) * f);
}

}  // namespace detail

inline cplx bessel_k(cplx order, double arg) {
    if (!(arg > 0)) throw Error(Errc::NonPositiveArg, "bessel_k requires arg > 0");
    // exponent of the integrand envelope: -arg cosh u + |Re order| u
    const double mr = std::abs(order.real());
    auto env = [&](double u) { return -arg * std::cosh(u) + mr * u; };
    double upk = mr > 0 ? std::asinh(mr / arg) : 0.0;
    double top = env(upk);
    // cut where the envelope has dropped 45 below its maximum (reduces to
    // arg cosh u = arg + 45 for small real order)
    double U = std::max(upk, 0.0) + 1.0;
    while (env(U) > top - 45.0) U += 0.5;
    double lo = upk, hi = U;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (env(mid) > top - 45.0 ? lo : hi) = mid;
    }
    U = hi;
    const double freq = std::abs(order.imag());
    const double width = std::min(0.5, freq > 0 ? 1.5 / freq : 0.5);
    const int panels = std::max(4, static_cast<int>(std::ceil(U / width)));
    static const QuadRule base = gauss_legendre(24, 0.0, 1.0);
    std::vector<cplx> parts(panels);
    const double hw = U / panels;
    for (int p = 0; p < panels; ++p) {
        cplx s = 0.0;
        for (std::size_t q = 0; q < base.size(); ++q) {
            double u = (p + base.nodes[q]) * hw;
            s += base.weights[q] * std::exp(-arg * std::cosh(u)) * std::cosh(order * u);
        }
        parts[p] = s * hw;
    }
    return pairwise_sum(parts);
}

inline double gaussian_density(double t, double y, double x) {
    if (!(t > 0)) throw Error(Errc::NonPositiveTime, "gaussian_density requires t > 0");
    double d = x - y;
    return std::exp(-d * d / (2.0 * t)) / std::sqrt(2.0 * pi * t);
}

inline double vandermonde(const std::vector<double>& x) {
    double p = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        for (std::size_t l = j + 1; l < x.size(); ++l) p *= x[l] - x[j];
    return p;
}

// ---------------------------------------------------------------- matrices

template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : r_(rows), c_(cols), a_(rows * cols, fill) {}
    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }
    T& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }
    std::size_t rows() const { return r_; }
    std::size_t cols() const { return c_; }

private:
    std::size_t r_ = 0, c_ = 0;
    std::vector<T> a_;
};

using CMatrix = Matrix<cplx>;
using RMatrix = Matrix<double>;

// Partial-pivot LU determinant.
template <class T>
T determinant(Matrix<T> m) {
    if (m.rows() != m.cols()) throw Error(Errc::NonSquare, "determinant of a non-square matrix");
    const std::size_t n = m.rows();
    T det = T(1);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(m(k, k));
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > best) {
                best = std::abs(m(i, k));
                piv = i;
            }
        if (best < 1e-300) return T(0);
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            det = -det;
        }
        det *= m(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            T f = m(i, k) / m(k, k);
            if (f == T(0)) continue;
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return det;
}

inline cplx complex_det(const CMatrix& m) { return determinant(m); }

template <class T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.rows()) throw Error(Errc::SizeMismatch, "matmul shape mismatch");
    Matrix<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            T aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

template <class T>
T trace(const Matrix<T>& a) {
    T s{};
    for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) s += a(i, i);
    return s;
}

// Elementary symmetric functions e_1..e_3 of the eigenvalues of m, via
// Newton's identities on power traces. e_L is the sum of all L x L
// principal minors.
template <class T>
std::array<T, 3> principal_minor_sums(const Matrix<T>& m) {
    Matrix<T> m2 = matmul(m, m);
    T p1 = trace(m), p2 = trace(m2);
    T p3{};
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t k = 0; k < m.cols(); ++k) p3 += m2(i, k) * m(k, i);
    return {p1, (p1 * p1 - p2) / T(2), (p1 * p1 * p1 - T(3) * p1 * p2 + T(2) * p3) / T(6)};
}

// ---------------------------------------------------------------- rng

// (seed, stream_id) selects an independent engine; draws are consumed in a
// fixed order from the start of the stream, so (seed, stream_id, index)
// determines every sample.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

class RngCursor {
public:
    explicit RngCursor(RngStream s) {
        std::seed_seq seq{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32),
                          static_cast<std::uint32_t>(s.stream_id),
                          static_cast<std::uint32_t>(s.stream_id >> 32), 0x6f63u};
        eng_.seed(seq);
    }
    void skip(unsigned long long n) { eng_.discard(n); }
    // uniform on (0, 1), 53-bit resolution
    double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }
    // Box-Muller, two engine draws per call
    double normal() {
        double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace oconnell
