#pragma once

#include "oconnell/kernel.hpp"

namespace oconnell {

struct CbmSample {
    std::vector<double> V;
    std::vector<double> W;
};

enum class Estimator { mean, median_of_means };

struct MCConfig {
    std::uint64_t sample_count = 100000;
    std::uint64_t batch_size = 4096;
    std::uint64_t seed = 0;
    Estimator estimator = Estimator::mean;
    int mom_groups = 32;
    // Adds the deterministic pole correction to every weight (see residue_shift).
    bool residue_correction = true;
    // Subtracts the principal parts at the poles from each sample and adds
    // back their exact mean (see PoleControl). Needs residue_correction.
    bool pole_control = true;
    unsigned workers = 0;

    void validate() const {
        if (sample_count < 100) throw Error(Errc::TooFewSamples, "sample_count must be >= 100");
        if (batch_size < 1) throw Error(Errc::ConfigError, "batch_size must be positive");
        if (pole_control && !residue_correction)
            throw Error(Errc::ConfigError, "pole_control requires residue_correction");
        if (mom_groups < 1 || static_cast<std::uint64_t>(mom_groups) > sample_count)
            throw Error(Errc::ConfigError, "mom_groups must lie in [1, sample_count]");
    }
};

struct Estimate {
    double value = 0;
    double std_error = 0;
    double imag_residual = 0;
    double imag_std_error = 0;
    std::uint64_t n = 0;
    std::uint64_t rejected = 0;
    double mean_value = 0;
    double mom_value = 0;  // median of group means
};

// Draws from `cur`; consumes exactly 4N engine outputs.
inline CbmSample sample_endpoints(const DriftSpec& drift, double t, RngCursor& cur) {
    if (!(t > 0)) throw Error(Errc::NonPositiveTime, "t must be positive");
    const std::size_t N = drift.N();
    const double sd = 1.0 / std::sqrt(t);
    CbmSample s;
    s.V.resize(N);
    s.W.resize(N);
    for (std::size_t k = 0; k < N; ++k) {
        s.V[k] = drift.nu_hat[k] + sd * cur.normal();
        s.W[k] = sd * cur.normal();
    }
    return s;
}

inline CbmSample sample_endpoints(const DriftSpec& drift, double t, RngStream rng, std::uint64_t index = 0) {
    RngCursor cur(rng);
    cur.skip(index * 4 * drift.N());
    return sample_endpoints(drift, t, cur);
}

namespace detail {

struct PoleTerms {
    std::vector<std::vector<std::pair<double, double>>> poles;  // per j: (z_n, rho_jn)
};

inline cplx weight_with(const PhiLifted& phi, const CbmSample& s, const ObservablePoint& obs, const RMatrix* shift,
                        const PoleTerms* pt = nullptr) {
    const std::size_t N = s.V.size();
    CMatrix m = CMatrix::identity(N);
    for (std::size_t k = 0; k < N; ++k) {
        const bool on = s.V[k] < obs.h * obs.t;
        const cplx z(s.V[k], s.W[k]);
        for (std::size_t j = 0; j < N; ++j) {
            if (on) {
                cplx f = phi(j, z);
                if (pt)
                    for (auto [zn, rho] : pt->poles[j]) f -= rho / (z - zn);
                m(j, k) -= f;
            }
            if (shift) m(j, k) -= (*shift)(j, k);
        }
    }
    return complex_det(m);
}

}  // namespace detail

inline cplx determinantal_weight(const CbmSample& sample, const DriftSpec& drift, const ObservablePoint& obs) {
    if (sample.V.size() != drift.N() || sample.W.size() != drift.N())
        throw Error(Errc::SizeMismatch, "sample size must equal N");
    return detail::weight_with(PhiLifted(drift), sample, obs, nullptr);
}

inline cplx determinantal_weight(const CbmSample& sample, const DriftSpec& drift, const ObservablePoint& obs,
                                 const RMatrix& shift) {
    if (sample.V.size() != drift.N() || sample.W.size() != drift.N())
        throw Error(Errc::SizeMismatch, "sample size must equal N");
    return detail::weight_with(PhiLifted(drift), sample, obs, &shift);
}

// Phi_j has real poles z_n = nu_j - n/a. Averaging Phi_j(V + iW) over W
// gives the real-axis boundary value, not the continuation from above the
// poles that the Gram matrix uses. Per pole the two differ by the residue
// term, which integrates in closed form against the Gaussian V-density:
//   r_jk = sum_n rho_jn t e^{alpha U - t(nu_k^2 - z_n^2)/2} / alpha,
//   alpha = t(nu_k - z_n),  U = min(h t, z_n).
// Columns are independent, so E det[I - M - r] = det[I - G].
inline RMatrix residue_shift(const DriftSpec& drift, const ObservablePoint& obs) {
    drift.validate();
    obs.validate();
    PhiLifted phi(drift);
    const std::size_t N = drift.N();
    const double t = obs.t;
    RMatrix r(N, N);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = 0; k < N; ++k) {
            const double nk = drift.nu_hat[k];
            std::vector<double> terms;
            for (int n = 1; n <= 400; ++n) {
                double zn = phi.pole(j, n);
                double rho = phi.residue(j, n);
                if (rho == 0.0) break;
                double U = std::min(obs.h * t, zn);
                double al = t * (nk - zn);
                double e = al * U - 0.5 * t * (nk * nk - zn * zn);
                double term = rho * t * std::exp(e) / al;
                terms.push_back(term);
                if (n > 3 && std::abs(term) < 1e-300) break;
            }
            r(j, k) = pairwise_sum(terms);
        }
    return r;
}

// Control variate for the real-axis poles. Each sampled Phi_j(Z_k) loses
// its principal parts rho/(Z - z_n) for poles within reach of V_k, and the
// shift gains their exact mean
//   E[1(V < ht) / (V - z + iW)] = int_{-inf}^{ht} p(1/t, v | nu_k) J(v - z) dv,
//   J(d) = sgn(d) sqrt(pi t/2) e^{t d^2/2} erfc(|d| sqrt(t/2)),
// which is what the W-average of 1/(d + iW) gives on the real line.
// The remainder is bounded near the poles, so the weight variance is finite.
struct PoleControl {
    detail::PoleTerms terms;
    RMatrix shift;  // residue_shift plus the means above
};

namespace detail {

inline double real_line_cauchy(double d, double t) {
    const double u = std::abs(d) * std::sqrt(0.5 * t);
    return (d > 0 ? 1.0 : -1.0) * std::sqrt(0.5 * pi * t) * erfcx(u);
}

}  // namespace detail

inline PoleControl pole_control(const DriftSpec& drift, const ObservablePoint& obs, const QuadConfig& quad = {}) {
    drift.validate();
    obs.validate();
    quad.validate();
    PhiLifted phi(drift);
    const std::size_t N = drift.N();
    const double t = obs.t, sd = 1.0 / std::sqrt(t), ht = obs.h * t;
    const double reach = drift.min_nu() - quad.tail_sigmas * sd - 1.0;
    PoleControl pc;
    pc.shift = residue_shift(drift, obs);
    pc.terms.poles.resize(N);
    for (std::size_t j = 0; j < N; ++j)
        for (int n = 1; phi.pole(j, n) >= reach; ++n) pc.terms.poles[j].emplace_back(phi.pole(j, n), phi.residue(j, n));
    for (std::size_t k = 0; k < N; ++k) {
        const double mu = drift.nu_hat[k];
        const double lo = mu - quad.tail_sigmas * sd, hi = std::min(ht, mu + quad.tail_sigmas * sd);
        for (std::size_t j = 0; j < N; ++j) {
            double add = 0.0;
            for (auto [zn, rho] : pc.terms.poles[j]) {
                if (!(hi > lo)) break;
                // J jumps at v = z_n; integrate each side separately
                std::vector<std::pair<double, double>> pieces;
                if (zn > lo && zn < hi)
                    pieces = {{lo, zn}, {zn, hi}};
                else
                    pieces = {{lo, hi}};
                double acc = 0.0;
                for (auto [p0, p1] : pieces) {
                    QuadRule r = gauss_legendre(quad.gl_order, p0, p1);
                    std::vector<double> tv(r.size());
                    for (std::size_t q = 0; q < r.size(); ++q) {
                        double v = r.nodes[q];
                        tv[q] = r.weights[q] * gaussian_density(1.0 / t, mu, v) * detail::real_line_cauchy(v - zn, t);
                    }
                    acc += pairwise_sum(tv);
                }
                add += rho * acc;
            }
            pc.shift(j, k) += add;
        }
    }
    return pc;
}

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline Estimate cbm_estimate(const DriftSpec& drift, const ObservablePoint& obs, const MCConfig& mc) {
    drift.validate();
    obs.validate();
    mc.validate();
    PhiLifted phi(drift);
    PoleControl pc;
    if (mc.pole_control)
        pc = pole_control(drift, obs);
    else if (mc.residue_correction)
        pc.shift = residue_shift(drift, obs);
    const RMatrix* sp = mc.residue_correction ? &pc.shift : nullptr;
    const detail::PoleTerms* pt = mc.pole_control ? &pc.terms : nullptr;
    const std::uint64_t n = mc.sample_count, B = mc.batch_size;
    const std::uint64_t batches = (n + B - 1) / B;
    std::vector<double> re(n), im(n);
    std::vector<unsigned char> ok(n, 1);
    parallel_for(batches, mc.workers, [&](std::size_t b) {
        RngCursor cur(RngStream{mc.seed, b});
        const std::uint64_t lo = b * B, hi = std::min(n, lo + B);
        for (std::uint64_t i = lo; i < hi; ++i) {
            CbmSample s = sample_endpoints(drift, obs.t, cur);
            try {
                cplx w = detail::weight_with(phi, s, obs, sp, pt);
                re[i] = w.real();
                im[i] = w.imag();
            } catch (const Error& e) {
                if (e.code() != Errc::NearPole) throw;
                ok[i] = 0;
            }
        }
    });
    Estimate est;
    std::vector<double> r2, i2;
    r2.reserve(n);
    i2.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        if (ok[i]) {
            r2.push_back(re[i]);
            i2.push_back(im[i]);
        } else {
            ++est.rejected;
        }
    }
    const std::size_t m = r2.size();
    if (m < 2) throw Error(Errc::TooFewSamples, "all samples rejected");
    est.n = n;
    const double mr = pairwise_sum(r2) / m, mi = pairwise_sum(i2) / m;
    std::vector<double> dr(m), di(m);
    for (std::size_t i = 0; i < m; ++i) {
        dr[i] = (r2[i] - mr) * (r2[i] - mr);
        di[i] = (i2[i] - mi) * (i2[i] - mi);
    }
    est.std_error = std::sqrt(pairwise_sum(dr) / (m - 1) / m);
    est.imag_std_error = std::sqrt(pairwise_sum(di) / (m - 1) / m);
    est.imag_residual = mi;
    est.mean_value = mr;
    const std::size_t G = static_cast<std::size_t>(mc.mom_groups);
    std::vector<double> gm(G);
    for (std::size_t g = 0; g < G; ++g) {
        std::size_t a = g * m / G, b = (g + 1) * m / G;
        gm[g] = pairwise_sum(std::vector<double>(r2.begin() + a, r2.begin() + b)) / static_cast<double>(b - a);
    }
    est.mom_value = detail::median_of(gm);
    est.value = mc.estimator == Estimator::mean ? est.mean_value : est.mom_value;
    return est;
}

}  // namespace oconnell
