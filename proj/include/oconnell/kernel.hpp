#pragma once

#include "oconnell/numkit.hpp"

#include <sstream>

namespace oconnell {

struct DriftSpec {
    std::vector<double> nu_hat;
    double a = 0.5;

    std::size_t N() const { return nu_hat.size(); }
    double max_abs() const {
        double m = 0;
        for (double v : nu_hat) m = std::max(m, std::abs(v));
        return m;
    }
    double min_nu() const { return *std::min_element(nu_hat.begin(), nu_hat.end()); }
    double max_nu() const { return *std::max_element(nu_hat.begin(), nu_hat.end()); }
    double spread() const { return max_nu() - min_nu(); }

    void validate() const {
        if (nu_hat.empty()) throw Error(Errc::InvalidDrift, "nu_hat must be non-empty");
        if (!(a > 0) || !std::isfinite(a)) throw Error(Errc::InvalidDrift, "a must be positive");
        for (double v : nu_hat)
            if (!std::isfinite(v)) throw Error(Errc::InvalidDrift, "nu_hat entries must be finite");
        for (std::size_t j = 0; j < N(); ++j)
            for (std::size_t k = j + 1; k < N(); ++k)
                if (std::abs(nu_hat[j] - nu_hat[k]) < 1e-3)
                    throw Error(Errc::DegenerateDrift, "nu_hat entries must differ by >= 1e-3");
        if (!(max_abs() < 1.0 / (2.0 * a)))
            throw Error(Errc::InvalidDrift, "max |nu_hat| must be < 1/(2a)");
    }
};

inline DriftSpec make_drift(std::vector<double> nu_hat, double a) {
    DriftSpec d{std::move(nu_hat), a};
    d.validate();
    return d;
}

struct ObservablePoint {
    double t = 1.0;
    double h = 0.0;
    void validate() const {
        if (!(t > 0) || !std::isfinite(t)) throw Error(Errc::NonPositiveTime, "t must be positive");
        if (std::isnan(h)) throw Error(Errc::ConfigError, "h must not be NaN");
    }
};

inline double theta_soft(double x, double a) { return std::exp(-std::exp(-x / a)); }

// Polynomial Lagrange factor prod_{r != r'} (r - z)/(r - r').
inline cplx phi_entire(const std::vector<double>& config, double rprime, cplx z) {
    bool found = false;
    cplx p = 1.0;
    for (double r : config) {
        if (r == rprime && !found) {
            found = true;
            continue;
        }
        p *= (r - z) / (r - rprime);
    }
    if (!found) throw Error(Errc::RPrimeNotInConfig, "rprime is not one of the configured points");
    return p;
}

// Lifted factor with cached constants. Poles of factor j sit at nu_j - n/a.
class PhiLifted {
public:
    explicit PhiLifted(DriftSpec d) : d_(std::move(d)) {
        d_.validate();
        const std::size_t n = d_.N();
        logc_.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = 0; l < n; ++l)
                if (l != j) logc_[j] += log_gamma(cplx(d_.a * (d_.nu_hat[l] - d_.nu_hat[j]), 0.0));
    }

    const DriftSpec& drift() const { return d_; }

    double pole(std::size_t j, int n) const { return d_.nu_hat[j] - n / d_.a; }

    // Index n >= 1 of the pole within `tol` of z, or 0.
    int near_pole(std::size_t j, cplx z, double tol = 1e-8) const {
        double nn = std::round((d_.nu_hat[j] - z.real()) * d_.a);
        if (nn < 1) return 0;
        return std::abs(z - pole(j, static_cast<int>(nn))) < tol ? static_cast<int>(nn) : 0;
    }

    cplx operator()(std::size_t j, cplx z) const {
        if (int n = near_pole(j, z)) {
            std::ostringstream os;
            os << "z is within 1e-8 of pole n=" << n << " of factor j=" << j;
            throw Error(Errc::NearPole, os.str());
        }
        const double a = d_.a;
        cplx s = log_gamma(1.0 - a * (d_.nu_hat[j] - z)) + logc_[j];
        for (std::size_t l = 0; l < d_.N(); ++l) {
            if (l == j) continue;
            cplx w = a * (d_.nu_hat[l] - z);
            double wr = std::round(w.real());
            if (wr <= 0 && std::abs(w - wr) < 1e-14) return 0.0;  // 1/Gamma zero
            s -= log_gamma(w);
        }
        return std::exp(s);
    }

    // Residue at nu_j - n/a; the Gamma ratios collapse to rational factors.
    double residue(std::size_t j, int n) const {
        const double a = d_.a;
        double r = 1.0 / a;
        for (int m = 1; m <= n; ++m) {
            if (m > 1) r *= -1.0 / (m - 1);
            for (std::size_t l = 0; l < d_.N(); ++l)
                if (l != j) r /= a * (d_.nu_hat[l] - d_.nu_hat[j]) + (m - 1);
        }
        return r;
    }

private:
    DriftSpec d_;
    std::vector<cplx> logc_;
};

inline cplx phi_lifted(const DriftSpec& drift, std::size_t j, cplx z) {
    if (j >= drift.N()) throw Error(Errc::SizeMismatch, "particle index out of range");
    return PhiLifted(drift)(j, z);
}

inline std::vector<double> pole_locations(const DriftSpec& drift, std::size_t j, int n_max) {
    if (n_max < 1) throw Error(Errc::ConfigError, "n_max must be >= 1");
    if (j >= drift.N()) throw Error(Errc::SizeMismatch, "particle index out of range");
    std::vector<double> z(n_max);
    for (int n = 1; n <= n_max; ++n) z[n - 1] = drift.nu_hat[j] - n / drift.a;
    return z;
}

struct KernelValue {
    double value = 0;
    double imag = 0;
};

// B_j(m) = int p(tau, y|0) Phi_j(m + iy) dy, continued analytically in m
// from large m. For m above every pole this is the plain real-line integral.
// Below a pole the continuation differs from the real-line integral, so the
// principal parts rho_n/(z - z_n) of nearby and crossed poles are removed
// before Gauss-Hermite and added back in closed form:
//   int p(tau,y|0)/(d + iy) dy = sqrt(pi/2tau) e^{d^2/2tau} erfc(d/sqrt(2tau)),
// which is entire in d = m - z_n.
class KernelFactors {
public:
    KernelFactors(const PhiLifted& phi, double tau, int gh_order)
        : phi_(&phi), tau_(tau), gh_(gauss_hermite(gh_order)) {
        if (!(tau > 0)) throw Error(Errc::NonPositiveTime, "tau must be positive");
        if (gh_order % 2 != 0) throw Error(Errc::BadOrder, "gh_order must be even");
    }

    double tau() const { return tau_; }

    // With gauge = true the result is multiplied by e^{-m^2/2tau}.
    KernelValue B(std::size_t j, double m, bool gauge = false) const {
        const double thr = 3.0 * std::sqrt(tau_);
        const double s2t = std::sqrt(2.0 * tau_);
        const double lg = gauge ? -m * m / (2.0 * tau_) : 0.0;
        std::vector<std::pair<double, double>> sub;  // (z_n, rho_n)
        for (int n = 1;; ++n) {
            double zn = phi_->pole(j, n);
            if (zn < m - thr) break;
            sub.emplace_back(zn, phi_->residue(j, n));
            if (n > 100000) throw Error(Errc::NonConvergent, "pole subtraction did not terminate");
        }
        std::vector<cplx> terms(gh_.size());
        for (std::size_t q = 0; q < gh_.size(); ++q) {
            cplx z(m, s2t * gh_.nodes[q]);
            cplx f = (*phi_)(j, z);
            for (auto [zn, rn] : sub) f -= rn / (z - zn);
            terms[q] = gh_.weights[q] * f;
        }
        cplx reg = pairwise_sum(terms) / std::sqrt(pi) * std::exp(lg);
        double add = 0.0;
        const double c = std::sqrt(pi / (2.0 * tau_));
        for (auto [zn, rn] : sub) {
            double d = m - zn;
            double u = d / s2t;
            double jv = u > 0 ? detail::erfcx(u) * std::exp(lg) : std::exp(u * u + lg) * std::erfc(u);
            add += rn * c * jv;
        }
        return {reg.real() + add, reg.imag()};
    }

private:
    const PhiLifted* phi_;
    double tau_;
    QuadRule gh_;
};

namespace detail {

inline KernelValue bK_once(const PhiLifted& phi, double t, double x, double xprime, int gh) {
    KernelFactors kf(phi, t, gh);
    const auto& nu = phi.drift().nu_hat;
    KernelValue out;
    for (std::size_t j = 0; j < nu.size(); ++j) {
        KernelValue b = kf.B(j, xprime);
        double p = gaussian_density(t, nu[j], x);
        out.value += p * b.value;
        out.imag += p * b.imag;
    }
    return out;
}

inline void check_reality(const KernelValue& v) {
    if (std::abs(v.imag) > 1e-10 * (1.0 + std::abs(v.value)))
        throw Error(Errc::NonConvergent, "kernel imaginary residual exceeds 1e-10");
}

}  // namespace detail

// Kernel at process time t with x' unscaled.
inline double kernel_bK(const DriftSpec& drift, double t, double x, double xprime, const QuadConfig& quad = {}) {
    quad.validate();
    if (!(t > 0)) throw Error(Errc::NonPositiveTime, "t must be positive");
    PhiLifted phi(drift);
    KernelValue v = detail::bK_once(phi, t, x, xprime, quad.gh_order);
    detail::check_reality(v);
    KernelValue w = detail::bK_once(phi, t, x, xprime, quad.gh_order * quad.refine_factor);
    if (std::abs(w.value - v.value) > 1e-8 * std::max(std::abs(w.value), 1e-13))
        throw Error(Errc::NonConvergent, "kernel_bK order-refinement discrepancy > 1e-8");
    return w.value;
}

inline double kernel_calK(const DriftSpec& drift, const ObservablePoint& obs, double x, double xprime,
                          const QuadConfig& quad = {}) {
    obs.validate();
    const double t = obs.t;
    return kernel_bK(drift, 1.0 / t, x / t, xprime / t, quad) / t;
}

// a -> 0 kernel: the lifted factor is replaced by the Lagrange polynomial, so
// Gauss-Hermite is exact once the order exceeds N.
inline double kernel_limit(const std::vector<double>& config, double t, double x, double xprime,
                           const QuadConfig& quad = {}) {
    quad.validate();
    if (!(t > 0)) throw Error(Errc::NonPositiveTime, "t must be positive");
    for (std::size_t j = 0; j < config.size(); ++j)
        for (std::size_t k = j + 1; k < config.size(); ++k)
            if (config[j] == config[k]) throw Error(Errc::DegenerateDrift, "config points must be distinct");
    QuadRule gh = gauss_hermite(quad.gh_order);
    const double s2t = std::sqrt(2.0 * t);
    double total = 0.0;
    for (double r : config) {
        cplx s = 0.0;
        for (std::size_t q = 0; q < gh.size(); ++q)
            s += gh.weights[q] * phi_entire(config, r, cplx(xprime, s2t * gh.nodes[q]));
        total += gaussian_density(t, r, x) * s.real() / std::sqrt(pi);
    }
    return total;
}

}  // namespace oconnell
