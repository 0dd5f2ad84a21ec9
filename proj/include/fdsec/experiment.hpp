#pragma once

// Point evaluation, parameter sweeps and the self-check report used by the
// command-line runner.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fdsec/bounds.hpp"
#include "fdsec/config.hpp"
#include "fdsec/errors.hpp"
#include "fdsec/hd_benchmark.hpp"
#include "fdsec/model.hpp"
#include "fdsec/numerics.hpp"
#include "fdsec/power_policy.hpp"
#include "fdsec/protocol_sim.hpp"

namespace fdsec {

struct OutputSet {
    bool upper = true;
    bool lower = true;
    bool hd = true;
    bool sim = false;
};

/// Parses a comma separated subset of {upper, lower, hd, sim}.
inline OutputSet parse_outputs(const std::string& text) {
    OutputSet o{false, false, false, false};
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto t = std::string(detail::trim(item));
        if (t == "upper") o.upper = true;
        else if (t == "lower") o.lower = true;
        else if (t == "hd") o.hd = true;
        else if (t == "sim") o.sim = true;
        else if (!t.empty()) throw DomainError("unknown output '" + t + "'");
    }
    if (!(o.upper || o.lower || o.hd || o.sim)) throw DomainError("no outputs selected");
    return o;
}

struct PointResult {
    double upper = 0.0;  // nats
    double lower = 0.0;
    CaseLabel case_label = CaseLabel::Case3;
    double hd = 0.0;
    double hd_t_star = 0.0;
    double sim_fraction_active = std::numeric_limits<double>::quiet_NaN();
    MacDiagnostics diagnostics;
    double c2_relative_residual = 0.0;
    double budget_relative_residual = 0.0;
    bool feasible = true;
    std::string error;
    double runtime_ms = 0.0;
};

inline FormulaOptions formula_options(const RunConfig& cfg) { return {cfg.printed_formulas}; }

/// Lower bound, upper bound, half-duplex rate and (optionally) a protocol
/// simulation at one parameter point. Solver failures land in `error`.
inline PointResult evaluate_point(const RunConfig& cfg, const OutputSet& out = {}, const SearchConfig& search = {}) {
    const auto start = std::chrono::steady_clock::now();
    PointResult r;
    try {
        cfg.params.validate();
        const auto fd = FadingGrid::from_params(cfg.params, cfg.n_fading_points);
        const auto opt = formula_options(cfg);
        BoundSolution lb;
        const bool need_lower = out.lower || out.upper || out.sim;
        if (need_lower) {
            lb = lower_bound(cfg.params, fd, opt);
            r.lower = lb.result.c_s_lower;
            r.case_label = lb.result.case_label;
            r.diagnostics = lb.result.diagnostics;
            r.c2_relative_residual = lb.result.c2_relative_residual;
            r.budget_relative_residual = lb.result.budget_relative_residual;
            r.feasible = lb.result.feasible;
            if (!lb.result.note.empty()) r.error = lb.result.note;
        }
        if (out.upper) r.upper = upper_bound(cfg.params, fd, search, opt, {lb}).result.c_s_upper;
        if (out.hd) {
            try {
                const auto hd = hd_secrecy_rate(cfg.params, fd, opt);
                r.hd = hd.rate;
                r.hd_t_star = hd.t_star;
            } catch (const InfeasibleEnergyError&) {
                r.hd = 0.0;
            }
        }
        if (out.sim) {
            if (!lb.result.feasible) {
                r.sim_fraction_active = 0.0;
            } else {
                SimConfig sc;
                sc.n_slots = cfg.sim_slots + cfg.sim_burn_in;
                sc.burn_in = cfg.sim_burn_in;
                sc.k = cfg.sim_k;
                sc.initial_battery = cfg.sim_initial_battery;
                sc.policy = lb.policy;
                sc.et_dist = lb.et;
                sc.seed = cfg.seed;
                sc.analytic_rate = lb.result.c_s_lower;
                sc.keep_records = false;
                r.sim_fraction_active = simulate(sc, cfg.params, fd).summary.fraction_active;
            }
        }
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

struct SweepSpec {
    std::string variable;  // p_et_dbm, p_et, alpha1_db, qbar1_db, eta, d_ehu_eve
    std::vector<double> values;
    OutputSet outputs;

    void validate() const {
        static const std::vector<std::string> known = {"p_et_dbm", "p_et", "alpha1_db", "qbar1_db", "eta", "d_ehu_eve"};
        if (std::find(known.begin(), known.end(), variable) == known.end())
            throw DomainError("unknown sweep variable '" + variable + "'");
        if (values.empty()) throw DomainError("sweep needs at least one value");
    }
};

/// Parses "a,b,c" or "start:stop:count" (inclusive, evenly spaced).
inline std::vector<double> parse_values(const std::string& text) {
    std::vector<double> v;
    if (text.find(':') != std::string::npos) {
        std::stringstream ss(text);
        std::string a, b, c;
        std::getline(ss, a, ':');
        std::getline(ss, b, ':');
        std::getline(ss, c, ':');
        const double lo = detail::parse_double(detail::trim(a), 0, "values");
        const double hi = detail::parse_double(detail::trim(b), 0, "values");
        const long n = detail::parse_integer(detail::trim(c), 0, "values");
        if (n < 1) throw DomainError("value range needs a positive count");
        for (long i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1));
        return v;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!detail::trim(item).empty()) v.push_back(detail::parse_double(detail::trim(item), 0, "values"));
    return v;
}

inline void apply_sweep_value(RunConfig& cfg, const std::string& variable, double value) {
    std::ostringstream text;
    text << std::setprecision(17) << value;
    apply_config_key(cfg, variable, text.str());
}

struct SweepOptions {
    bool nats = false;
    SearchConfig search;
};

inline void write_sweep_header(std::ostream& os, bool nats) {
    const char* u = nats ? "nats" : "bits";
    os << "variable,value,c_s_upper_" << u << ",c_s_lower_" << u << ",case_label,hd_rate_" << u
       << ",sim_fraction_active,runtime_ms,error\n";
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string o = "\"";
    for (char c : s) {
        if (c == '"') o += '"';
        o += c == '\n' ? ' ' : c;
    }
    return o + '"';
}

inline void write_sweep_row(std::ostream& os, const std::string& variable, double value, const PointResult& r,
                            const OutputSet& out, bool nats) {
    const auto unit = [&](double x) { return nats ? x : nats_to_bits(x); };
    std::ostringstream line;
    line << std::setprecision(12);
    line << variable << ',' << value << ',';
    if (out.upper) line << unit(r.upper);
    line << ',';
    if (out.lower) line << unit(r.lower);
    line << ',' << (out.lower ? to_string(r.case_label) : "") << ',';
    if (out.hd) line << unit(r.hd);
    line << ',';
    if (out.sim && std::isfinite(r.sim_fraction_active)) line << r.sim_fraction_active;
    line << ',' << std::fixed << std::setprecision(1) << r.runtime_ms << ',' << csv_escape(r.error) << '\n';
    os << line.str();
}

/// One row per sweep value, in order. A failing row records its error and the
/// sweep continues.
inline std::vector<PointResult> run_sweep(const RunConfig& base, const SweepSpec& spec, std::ostream& os,
                                          const SweepOptions& so = {}) {
    spec.validate();
    write_sweep_header(os, so.nats);
    std::vector<PointResult> rows;
    for (double value : spec.values) {
        PointResult r;
        RunConfig cfg = base;
        try {
            apply_sweep_value(cfg, spec.variable, value);
            r = evaluate_point(cfg, spec.outputs, so.search);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        write_sweep_row(os, spec.variable, value, r, spec.outputs, so.nats);
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<PointResult> run_sweep(const std::string& config_path, const SweepSpec& spec,
                                          const std::string& out_path, const SweepOptions& so = {}) {
    const auto cfg = load_config(config_path);
    std::ofstream os(out_path);
    if (!os) throw Error("cannot open '" + out_path + "' for writing");
    return run_sweep(cfg, spec, os, so);
}

// ---- self-check report ------------------------------------------------------

struct VerifyCheck {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
    }
};

namespace detail {

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo * std::pow(hi / lo, unit_uniform(rng));
}

}  // namespace detail

/// Runs the numerical invariants at the configured operating point.
inline VerifyReport verify(const RunConfig& cfg, int draws = 50) {
    VerifyReport rep;
    auto add = [&](std::string name, bool ok, double measured, double threshold, std::string detail = {}) {
        rep.checks.push_back({std::move(name), ok, measured, threshold, std::move(detail)});
    };
    auto guarded = [&](const std::string& name, auto&& body) {
        try {
            body();
        } catch (const std::exception& e) {
            add(name, false, std::numeric_limits<double>::quiet_NaN(), 0.0, e.what());
        }
    };
    const auto& p = cfg.params;
    const auto opt = formula_options(cfg);
    std::mt19937_64 rng(cfg.seed);

    guarded("cal_I_at_zero", [&] { add("cal_I_at_zero", cal_I(0.0) == 0.0, cal_I(0.0), 0.0); });
    guarded("cal_I_excess_range", [&] {
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double a = 8.0 * i / 49.0;
            const double d = a * a - cal_I(a);
            worst = std::max({worst, -d, d - kLn2});
        }
        add("cal_I_excess_range", worst <= 1e-12, worst, 1e-12);
    });
    guarded("cal_I_at_six", [&] {
        const double e = std::abs(cal_I(6.0) - (36.0 - kLn2));
        add("cal_I_at_six", e <= 1e-5, e, 1e-5);
    });

    FadingGrid fd;
    guarded("fading_grid", [&] { fd = FadingGrid::from_params(p, cfg.n_fading_points); });
    if (fd.v_sq.empty()) return rep;

    guarded("leakage_oracle", [&] {
        double worst = 0.0;
        for (int i = 0; i < draws; ++i) {
            const double x = std::sqrt(p.p_et) * detail::log_uniform(rng, 0.05, 8.0);
            const double f2 = fd.omega_f * detail::log_uniform(rng, 0.01, 10.0);
            const double ga = opt.printed ? 1.0 : std::sqrt(fd.omega_g * detail::log_uniform(rng, 0.01, 10.0));
            const double pw = p.p_et * detail::log_uniform(rng, 1e-4, 10.0);
            const double s3 = p.sigma3_sq * detail::log_uniform(rng, 0.1, 10.0);
            const double a = state_leakage_integral({{x, 0.5}, {-x, 0.5}}, {pw, pw}, ga, f2, s3);
            const double b = state_leakage_closed_form(x, pw, ga, f2, s3);
            const double c = state_x2_leakage_integral(x, pw, ga, f2, s3);
            const double d = state_x2_leakage_closed_form(x, pw, ga, f2, s3);
            worst = std::max({worst, std::abs(a - b), std::abs(c - d)});
        }
        add("leakage_oracle", worst <= 1e-6, worst, 1e-6, "integral vs closed form, nats");
    });
    guarded("ehu_power_residual", [&] {
        double worst = 0.0;
        for (int i = 0; i < draws; ++i) {
            const double x2 = p.p_et * detail::log_uniform(rng, 1e-3, 16.0);
            const double v2 = fd.omega_v * detail::log_uniform(rng, 0.01, 10.0);
            const auto t = detail::ehu_terms(x2, v2, 1.0, p);
            const double top = (t.a + detail::eve_sum(fd.f_sq, p.sigma3_sq, 0.0)) / (1.0 - p.recycle_fraction());
            const double l2 = top * detail::log_uniform(rng, 1e-4, 0.999);
            const double pw = solve_ehu_power(x2, v2, l2, p, fd.f_sq);
            worst = std::max(worst, std::abs(ehu_power_residual(pw, x2, v2, l2, p, fd.f_sq)));
        }
        add("ehu_power_residual", worst <= 1e-9, worst, 1e-9, "relative");
    });
    guarded("hd_power_residual", [&] {
        double worst = 0.0;
        int used = 0;
        for (int i = 0; i < 20 * draws && used < draws; ++i) {
            const double v2 = fd.omega_v * detail::log_uniform(rng, 0.01, 10.0);
            const double room = v2 / p.sigma1_sq - detail::eve_sum(fd.f_sq, p.sigma3_sq, 0.0);
            if (!(room > 0.0)) continue;
            const double l2 = room * detail::log_uniform(rng, 1e-4, 0.999);
            const double pw = hd_power(v2, l2, p, fd.f_sq);
            if (pw <= 0.0) continue;
            ++used;
            worst = std::max(worst, std::abs(hd_power_residual(pw, v2, l2, p, fd.f_sq)));
        }
        add("hd_power_residual", used > 0 && worst <= 1e-9, worst, 1e-9, std::to_string(used) + " draws");
    });

    PointResult pr;
    guarded("bounds", [&] {
        pr = evaluate_point(cfg, {true, true, true, false});
        if (!pr.error.empty() && pr.feasible) throw Error(pr.error);
    });
    if (!pr.error.empty() && pr.feasible) return rep;
    if (pr.feasible) {
        add("c2_relative_residual", std::abs(pr.c2_relative_residual) <= 1e-9, std::abs(pr.c2_relative_residual), 1e-9);
        if (pr.case_label == CaseLabel::Case2)
            add("case2_budget_relative_residual", std::abs(pr.budget_relative_residual) <= 1e-6,
                std::abs(pr.budget_relative_residual), 1e-6);
        add("mac_et_rate_one_bit", pr.diagnostics.r_et_bits == 1.0, pr.diagnostics.r_et_bits, 1.0);
        add("mac_et_decodable", pr.diagnostics.i_x2_y3_bits < 1.0, pr.diagnostics.i_x2_y3_bits, 1.0, "I(X2;Y3) bits");
        if (pr.lower > 0.0)
            add("mac_ehu_secure", pr.diagnostics.ehu_secure(), pr.diagnostics.r_ehu_bits - pr.diagnostics.i_x1_y3_bits,
                0.0, "R_EHU - I(X1;Y3) bits");
    }
    const double slack = 1e-6 / kLn2;
    add("upper_ge_lower", nats_to_bits(pr.upper) >= nats_to_bits(pr.lower) - slack,
        nats_to_bits(pr.upper - pr.lower), -slack, "bits");
    add("lower_nonnegative", pr.lower >= 0.0, pr.lower, 0.0);
    add("hd_nonnegative", pr.hd >= 0.0, pr.hd, 0.0);

    guarded("simulator_causality", [&] {
        const auto lb = lower_bound(p, fd, opt);
        if (!lb.result.feasible) {
            add("simulator_causality", true, 0.0, 0.0, "infeasible point, nothing to simulate");
            return;
        }
        SimConfig sc;
        sc.n_slots = 2000;
        sc.k = cfg.sim_k;
        sc.policy = lb.policy;
        sc.et_dist = lb.et;
        sc.seed = cfg.seed;
        sc.keep_records = false;
        const auto tr = simulate(sc, p, fd);
        add("simulator_causality", tr.summary.causality_held && tr.summary.min_battery >= 0.0, tr.summary.min_battery,
            0.0, "minimum battery");
    });
    return rep;
}

}  // namespace fdsec
