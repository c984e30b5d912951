#include "oconnell/report.hpp"
#include "oconnell/selftest.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

using namespace oconnell;

namespace {

struct RunConfig {
    std::string subcommand;
    std::vector<double> nu_hat{-0.5, 0.5};
    double a = 0.5;
    double t = 1.0;
    std::vector<double> h{0.0};
    std::uint64_t samples = 100000;
    std::uint64_t seed = 42;
    std::uint64_t batch_size = 4096;
    QuadConfig quad;
    std::string out;
    ReportFormat format = ReportFormat::csv;
    int kappa_max = 3;
    int L_max = 3;
    std::vector<double> a_list{0.4, 0.2, 0.1, 0.05};
    std::vector<double> x_grid{-2, -1, 0, 1, 2};
    bool timing = false;
};

std::vector<double> parse_list(const std::string& s, const char* field) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(Errc::ConfigError, std::string(field) + ": cannot parse '" + item + "'");
        }
    }
    if (v.empty()) throw Error(Errc::ConfigError, std::string(field) + ": empty list");
    return v;
}

// "f" or "lo:hi:step", hi included.
std::vector<double> parse_grid(const std::string& s, const char* field) {
    if (s.find(':') == std::string::npos) return parse_list(s, field);
    std::vector<double> p;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ':')) p.push_back(parse_list(item, field)[0]);
    if (p.size() != 3 || !(p[2] > 0) || p[1] < p[0])
        throw Error(Errc::ConfigError, std::string(field) + ": expected lo:hi:step with step > 0 and hi >= lo");
    const auto n = static_cast<std::size_t>(std::floor((p[1] - p[0]) / p[2] + 1e-9)) + 1;
    if (n > 100000) throw Error(Errc::ConfigError, std::string(field) + ": grid too large");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = p[0] + static_cast<double>(i) * p[2];
    return g;
}

std::string json_text(const nlohmann::json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

std::vector<double> json_list(const nlohmann::json& j, const char* field) {
    if (j.is_array()) {
        std::vector<double> v;
        for (const auto& e : j) v.push_back(e.get<double>());
        return v;
    }
    if (j.is_number()) return {j.get<double>()};
    return parse_grid(json_text(j), field);
}

ReportFormat parse_format(const std::string& f) {
    if (f == "csv") return ReportFormat::csv;
    if (f == "json") return ReportFormat::json;
    throw Error(Errc::ConfigError, "format: expected csv or json, got '" + f + "'");
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    bool on;
    explicit Timer(bool enabled) : on(enabled) {}
    double ms() const {
        if (!on) return 0.0;
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
};

DriftSpec drift_of(const RunConfig& c) { return make_drift(c.nu_hat, c.a); }

ReportRow base_row(const RunConfig& c, const std::string& method, double h) {
    ReportRow r;
    r.method = method;
    r.N = c.nu_hat.size();
    r.a = c.a;
    r.t = c.t;
    r.h = h;
    r.seed = c.seed;
    return r;
}

std::vector<ReportRow> run_fredholm(const RunConfig& c) {
    DriftSpec d = drift_of(c);
    std::vector<ReportRow> rows;
    for (double h : c.h) {
        Timer tm(c.timing);
        FredholmResult f = fredholm_evaluate(d, {c.t, h}, c.quad);
        ReportRow r = base_row(c, "fredholm", h);
        r.value = f.value;
        r.error = f.error_estimate;
        r.warnings = f.gram.truncation_warning ? "TruncationActive" : "";
        r.wall_time_ms = tm.ms();
        rows.push_back(r);
    }
    return rows;
}

std::vector<ReportRow> run_cbm(const RunConfig& c) {
    DriftSpec d = drift_of(c);
    std::vector<ReportRow> rows;
    for (double h : c.h) {
        Timer tm(c.timing);
        MCConfig mc;
        mc.sample_count = c.samples;
        mc.batch_size = c.batch_size;
        mc.seed = c.seed;
        mc.workers = c.quad.workers;
        Estimate e = cbm_estimate(d, {c.t, h}, mc);
        const double ms = tm.ms();
        std::ostringstream w;
        w << "estimator=mean;imag=" << detail::fmt17(e.imag_residual) << ";imag_se=" << detail::fmt17(e.imag_std_error)
          << ";rejected=" << e.rejected;
        ReportRow r = base_row(c, "cbm", h);
        r.value = e.mean_value;
        r.error = e.std_error;
        r.warnings = w.str();
        r.wall_time_ms = ms;
        rows.push_back(r);
        ReportRow m = r;
        m.value = e.mom_value;
        m.warnings = "estimator=median_of_means;groups=32";
        rows.push_back(m);
    }
    return rows;
}

std::vector<ReportRow> run_direct(const RunConfig& c) {
    DriftSpec d = drift_of(c);
    std::vector<ReportRow> rows;
    for (double h : c.h) {
        Timer tm(c.timing);
        OracleValue v = direct_observable_full(d, {c.t, h}, c.quad);
        ReportRow r = base_row(c, "direct_oracle", h);
        r.value = v.value;
        r.error = v.error;
        r.wall_time_ms = tm.ms();
        rows.push_back(r);
    }
    return rows;
}

std::vector<ReportRow> run_ncbm(const RunConfig& c) {
    DriftSpec d = drift_of(c);
    std::vector<double> st = d.nu_hat;
    std::sort(st.begin(), st.end());
    std::vector<ReportRow> rows;
    for (double h : c.h) {
        Timer tm(c.timing);
        double g = gap_probability(WeylPoint(st), c.t, h, c.quad);
        double g2 = gap_probability_scaled(WeylPoint(st), c.t, h, c.quad);
        ReportRow r = base_row(c, "ncbm_oracle", h);
        r.value = g;
        r.error = std::abs(g - g2);
        r.wall_time_ms = tm.ms();
        rows.push_back(r);
    }
    return rows;
}

std::vector<ReportRow> run_bc(const RunConfig& c) {
    DriftSpec d = drift_of(c);
    std::vector<ReportRow> rows;
    for (double h : c.h) {
        Timer tm(c.timing);
        ObservablePoint o{c.t, h};
        BcResult b = bc_fredholm_det(d, o, default_bc_contour(d, o, c.quad), c.L_max, c.quad.workers);
        const double ms = tm.ms();
        for (std::size_t L = 0; L < b.partial_sums.size(); ++L) {
            ReportRow r = base_row(c, "bc_contour", h);
            r.value = b.partial_sums[L];
            r.error = b.term_abs[L];
            r.warnings = "L=" + std::to_string(L) + ";max_imag=" + detail::fmt17(b.max_imag);
            r.wall_time_ms = ms;
            rows.push_back(r);
        }
    }
    return rows;
}

std::vector<ReportRow> run_moments(const RunConfig& c) {
    DriftSpec d = drift_of(c);
    std::vector<ReportRow> rows;
    if (c.kappa_max < 1 || c.kappa_max > 3) throw Error(Errc::ConfigError, "kappa_max must lie in [1, 3]");
    auto add = [&](double v, double err, const std::string& w, double ms) {
        ReportRow r = base_row(c, "moment", c.h.front());
        r.value = v;
        r.error = err;
        r.warnings = w;
        r.wall_time_ms = ms;
        rows.push_back(r);
    };
    Timer t1(c.timing);
    MomentRoutes m = moment_first(d, c.t, c.quad);
    add(m.route_a, m.rel_gap, "kappa=1;route=residue", t1.ms());
    add(m.route_b, m.rel_gap, "kappa=1;route=contour", t1.ms());
    for (int k = 2; k <= c.kappa_max; ++k) {
        Timer tk(c.timing);
        double v = moment_kappa(d, c.t, k, c.quad);
        double err = 0;
        std::string w = "kappa=" + std::to_string(k) + ";route=contour";
        if (k == 2) {
            double cl = moment_two_closed(d, c.t, c.quad);
            err = std::abs(v - cl) / std::abs(cl);
        }
        add(v, err, w, tk.ms());
    }
    if (d.N() <= 2)
        for (int k = 1; k <= std::min(2, c.kappa_max); ++k) {
            Timer tk(c.timing);
            OracleValue o = moment_density_oracle(d, c.t, k, c.quad);
            add(o.value, o.error, "kappa=" + std::to_string(k) + ";route=density", tk.ms());
        }
    return rows;
}

std::vector<ReportRow> run_sweep(const RunConfig& c) {
    std::vector<double> st = c.nu_hat;
    std::sort(st.begin(), st.end());
    std::vector<ReportRow> rows;
    for (double h : c.h) {
        double g = gap_probability(WeylPoint(st), c.t, h, c.quad);
        ReportRow o = base_row(c, "ncbm_oracle", h);
        o.a = 0;
        o.value = g;
        rows.push_back(o);
        for (double a : c.a_list) {
            Timer tm(c.timing);
            RunConfig ca = c;
            ca.a = a;
            double v = fredholm_rank_det(make_drift(c.nu_hat, a), {c.t, h}, c.quad);
            ReportRow r = base_row(ca, "fredholm", h);
            r.value = v;
            r.error = std::abs(v - g);
            r.warnings = "error=|value-ncbm_oracle|";
            r.wall_time_ms = tm.ms();
            rows.push_back(r);
        }
    }
    return rows;
}

std::string run_kernel_dump(const RunConfig& c) {
    DriftSpec d = drift_of(c);
    ObservablePoint o{c.t, c.h.front()};
    std::ostringstream os;
    os << "x,xprime,calK\n";
    for (double x : c.x_grid)
        for (double xp : c.x_grid)
            os << detail::fmt17(x) << ',' << detail::fmt17(xp) << ',' << detail::fmt17(kernel_calK(d, o, x, xp, c.quad))
               << '\n';
    return os.str();
}

void emit(const RunConfig& c, const std::string& body) {
    if (c.out.empty())
        std::cout << body;
    else
        write_report(c.out, body);
}

int exit_code_for(Errc e) {
    switch (e) {
        case Errc::NonConvergent:
        case Errc::TooFewSamples:
            return 2;
        default:
            return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fredholm, Monte Carlo and oracle evaluators for E[Theta^a(X_1(t) - h)]"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_flag("--help", "print help");  // -h would shadow --h

    std::string config_path, nu_hat_s, h_s, format_s = "csv", a_list_s, x_grid_s;
    RunConfig cfg;
    double a = 0, t = 0;
    std::uint64_t seed = 0, samples = 0, batch = 0;
    int gh = 0, gl = 0, kappa_max = 0, L_max = 0;
    unsigned workers = 0;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--seed", seed, "RNG seed (u64)");
    app.add_option("--out", cfg.out, "output path (stdout if omitted)");
    app.add_option("--format", format_s, "csv or json");
    app.add_option("--nu-hat", nu_hat_s, "comma-separated lifted drift");
    app.add_option("--a", a, "lifting scale a > 0");
    app.add_option("--t", t, "time t > 0");
    app.add_option("--h", h_s, "threshold h, or lo:hi:step");
    app.add_option("--samples", samples, "Monte Carlo sample count");
    app.add_option("--batch-size", batch, "Monte Carlo batch size");
    app.add_option("--gh-order", gh, "Gauss-Hermite order (even)");
    app.add_option("--gl-order", gl, "Gauss-Legendre order");
    app.add_option("--workers", workers, "worker threads (0 = all cores); output does not depend on it");
    app.add_option("--kappa-max", kappa_max, "moments: largest kappa (<= 3)");
    app.add_option("--L-max", L_max, "bc-contour: largest series index (<= 3)");
    app.add_option("--a-list", a_list_s, "limit-sweep: comma-separated a values");
    app.add_option("--x-grid", x_grid_s, "kernel-dump: grid, comma list or lo:hi:step");
    app.add_flag("--timing", cfg.timing, "record wall_time_ms (otherwise 0, keeping reports byte-stable)");

    const std::vector<std::pair<std::string, std::string>> subs = {
        {"fredholm", "rank-N determinant over an h-grid"},
        {"cbm", "Monte Carlo estimate over complex Brownian endpoints"},
        {"oracle-direct", "direct entrance-law quadrature (N <= 2)"},
        {"oracle-ncbm", "noncolliding gap probability"},
        {"bc-contour", "partial sums of the double-contour Fredholm series"},
        {"moments", "exponential moments, all routes"},
        {"limit-sweep", "|E_a - gap probability| along an a-sweep"},
        {"kernel-dump", "kernel values on a grid"},
        {"selftest", "run the invariant suite"}};
    for (const auto& [name, desc] : subs) app.add_subcommand(name, desc)->set_help_flag("--help", "print help");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        cfg.subcommand = app.get_subcommands().front()->get_name();
        nlohmann::json file;
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw Error(Errc::ConfigError, "config: cannot open " + config_path);
            try {
                file = nlohmann::json::parse(f);
            } catch (const nlohmann::json::exception& e) {
                throw Error(Errc::ConfigError, std::string("config: ") + e.what());
            }
            if (!file.is_object()) throw Error(Errc::ConfigError, "config: top level must be an object");
        }
        // CLI flag > config file > default
        auto given = [&](const char* flag) { return app.count(flag) > 0; };
        auto from_file = [&](const char* key) { return file.is_object() && file.contains(key); };
        auto pick = [&](const char* flag, const char* key, auto& dst, const auto& cli_val) {
            using T = std::decay_t<decltype(dst)>;
            if (given(flag))
                dst = static_cast<T>(cli_val);
            else if (from_file(key)) {
                try {
                    dst = file.at(key).get<T>();
                } catch (const nlohmann::json::exception&) {
                    throw Error(Errc::ConfigError, std::string("config: field '") + key + "' has the wrong type");
                }
            }
        };
        pick("--seed", "seed", cfg.seed, seed);
        pick("--a", "a", cfg.a, a);
        pick("--t", "t", cfg.t, t);
        pick("--samples", "samples", cfg.samples, samples);
        pick("--batch-size", "batch_size", cfg.batch_size, batch);
        pick("--gh-order", "gh_order", cfg.quad.gh_order, gh);
        pick("--gl-order", "gl_order", cfg.quad.gl_order, gl);
        pick("--workers", "workers", cfg.quad.workers, workers);
        pick("--kappa-max", "kappa_max", cfg.kappa_max, kappa_max);
        pick("--L-max", "L_max", cfg.L_max, L_max);
        if (!given("--out") && from_file("out")) cfg.out = file.at("out").get<std::string>();
        if (given("--format"))
            cfg.format = parse_format(format_s);
        else if (from_file("format"))
            cfg.format = parse_format(file.at("format").get<std::string>());
        if (given("--nu-hat"))
            cfg.nu_hat = parse_list(nu_hat_s, "nu_hat");
        else if (from_file("nu_hat"))
            cfg.nu_hat = json_list(file.at("nu_hat"), "nu_hat");
        if (given("--h"))
            cfg.h = parse_grid(h_s, "h");
        else if (from_file("h"))
            cfg.h = json_list(file.at("h"), "h");
        if (given("--a-list"))
            cfg.a_list = parse_list(a_list_s, "a_list");
        else if (from_file("a_list"))
            cfg.a_list = json_list(file.at("a_list"), "a_list");
        if (given("--x-grid"))
            cfg.x_grid = parse_grid(x_grid_s, "x_grid");
        else if (from_file("x_grid"))
            cfg.x_grid = json_list(file.at("x_grid"), "x_grid");

        cfg.quad.validate();
        if (cfg.subcommand != "selftest") {
            drift_of(cfg);
            ObservablePoint{cfg.t, 0.0}.validate();
            for (double h : cfg.h)
                if (std::isnan(h)) throw Error(Errc::ConfigError, "h: NaN");
            if (cfg.samples < 100) throw Error(Errc::ConfigError, "samples: must be >= 100");
            if (cfg.batch_size < 1) throw Error(Errc::ConfigError, "batch_size: must be positive");
        }

        const std::string& s = cfg.subcommand;
        if (s == "selftest") {
            std::ostringstream log;
            std::string failed = run_invariant_suite(log);
            emit(cfg, log.str());
            if (!failed.empty()) {
                std::cerr << "selftest failed: " << failed << '\n';
                return 3;
            }
            return 0;
        }
        if (s == "kernel-dump") {
            emit(cfg, run_kernel_dump(cfg));
            return 0;
        }
        std::vector<ReportRow> rows;
        if (s == "fredholm")
            rows = run_fredholm(cfg);
        else if (s == "cbm")
            rows = run_cbm(cfg);
        else if (s == "oracle-direct")
            rows = run_direct(cfg);
        else if (s == "oracle-ncbm")
            rows = run_ncbm(cfg);
        else if (s == "bc-contour")
            rows = run_bc(cfg);
        else if (s == "moments")
            rows = run_moments(cfg);
        else if (s == "limit-sweep")
            rows = run_sweep(cfg);
        emit(cfg, emit_report(rows, cfg.format));
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
