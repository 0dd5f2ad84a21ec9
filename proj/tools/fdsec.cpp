#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdsec/fdsec.hpp"

namespace {

using nlohmann::json;

constexpr int kConfigError = 2;
constexpr int kVerifyFailed = 3;

struct Common {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> fading_points;
    bool printed = false;
    bool nats = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "configuration file (key = value)");
    sub->add_option("--out", c.out_path, "output file (stdout when omitted)");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--fading-points", c.fading_points, "points per fading distribution")->check(CLI::Range(1, 4096));
    sub->add_flag("--printed-formulas", c.printed, "use the expressions exactly as printed (g = 1, asymmetric HD leakage)");
    sub->add_flag("--nats", c.nats, "report rates in nats instead of bits");
}

fdsec::RunConfig load(const Common& c) {
    fdsec::RunConfig cfg = c.config_path.empty() ? fdsec::RunConfig{} : fdsec::load_config(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    if (c.fading_points) cfg.n_fading_points = *c.fading_points;
    if (c.printed) cfg.printed_formulas = true;
    return cfg;
}

void emit(const Common& c, const std::string& text) {
    if (c.out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(c.out_path);
    if (!os) throw fdsec::Error("cannot open '" + c.out_path + "' for writing");
    os << text;
}

double rate(double nats, bool as_nats) { return as_nats ? nats : fdsec::nats_to_bits(nats); }

int run_bounds(const Common& c, bool skip_upper) {
    const auto cfg = load(c);
    const auto r = fdsec::evaluate_point(cfg, {!skip_upper, true, true, false});
    const char* unit = c.nats ? "nats" : "bits";
    json j;
    j["unit"] = unit;
    if (!skip_upper) j["c_s_upper"] = rate(r.upper, c.nats);
    j["c_s_lower"] = rate(r.lower, c.nats);
    j["case_label"] = fdsec::to_string(r.case_label);
    j["hd_rate"] = rate(r.hd, c.nats);
    j["hd_t_star"] = r.hd_t_star;
    j["feasible"] = r.feasible;
    j["mac"] = {{"r_et_bits", r.diagnostics.r_et_bits},
                {"i_x2_y3_bits", r.diagnostics.i_x2_y3_bits},
                {"i_x1_y3_bits", r.diagnostics.i_x1_y3_bits},
                {"r_ehu_bits", r.diagnostics.r_ehu_bits}};
    j["c2_relative_residual"] = r.c2_relative_residual;
    j["budget_relative_residual"] = r.budget_relative_residual;
    j["runtime_ms"] = r.runtime_ms;
    if (!r.error.empty()) j["error"] = r.error;
    emit(c, j.dump(2) + "\n");
    return r.error.empty() || !r.feasible ? 0 : 1;
}

int run_sweep(const Common& c, const std::string& variable, const std::string& values, const std::string& outputs) {
    const auto cfg = load(c);
    fdsec::SweepSpec spec{variable, fdsec::parse_values(values), fdsec::parse_outputs(outputs)};
    spec.validate();
    fdsec::SweepOptions so;
    so.nats = c.nats;
    if (c.out_path.empty()) {
        fdsec::run_sweep(cfg, spec, std::cout, so);
    } else {
        std::ofstream os(c.out_path);
        if (!os) throw fdsec::Error("cannot open '" + c.out_path + "' for writing");
        fdsec::run_sweep(cfg, spec, os, so);
    }
    return 0;
}

int run_simulate(const Common& c, const std::string& trace_path) {
    const auto cfg = load(c);
    const auto fd = fdsec::FadingGrid::from_params(cfg.params, cfg.n_fading_points);
    const auto lb = fdsec::lower_bound(cfg.params, fd, fdsec::formula_options(cfg));
    fdsec::SimConfig sc;
    sc.n_slots = cfg.sim_slots + cfg.sim_burn_in;
    sc.burn_in = cfg.sim_burn_in;
    sc.k = cfg.sim_k;
    sc.initial_battery = cfg.sim_initial_battery;
    sc.policy = lb.policy;
    sc.et_dist = lb.et;
    sc.seed = cfg.seed;
    sc.analytic_rate = lb.result.c_s_lower;
    sc.keep_records = !trace_path.empty();
    const auto tr = fdsec::simulate(sc, cfg.params, fd);
    if (!trace_path.empty()) {
        std::ofstream os(trace_path);
        if (!os) throw fdsec::Error("cannot open '" + trace_path + "' for writing");
        tr.write_csv(os);
    }
    const auto& s = tr.summary;
    json j;
    j["n_active"] = s.n_active;
    j["b_silent"] = s.b_silent;
    j["fraction_active"] = s.fraction_active;
    j["empirical_secrecy_rate"] = rate(s.empirical_secrecy_rate, c.nats);
    j["unit"] = c.nats ? "nats" : "bits";
    j["mean_harvest_per_use"] = s.mean_harvest_per_use;
    j["harvest_standard_error"] = s.harvest_standard_error;
    j["expected_harvest_per_use"] = fdsec::expected_harvest(lb.policy, lb.et, cfg.params, fd);
    j["min_battery"] = s.min_battery;
    j["causality_held"] = s.causality_held;
    emit(c, j.dump(2) + "\n");
    return 0;
}

int run_verify(const Common& c) {
    const auto cfg = load(c);
    const auto rep = fdsec::verify(cfg);
    json checks = json::array();
    for (const auto& k : rep.checks) {
        json e{{"name", k.name}, {"passed", k.passed}, {"threshold", k.threshold}};
        e["measured"] = std::isfinite(k.measured) ? json(k.measured) : json(nullptr);
        if (!k.detail.empty()) e["detail"] = k.detail;
        checks.push_back(e);
    }
    json j{{"passed", rep.passed()}, {"printed_formulas", cfg.printed_formulas}, {"checks", checks}};
    emit(c, j.dump(2) + "\n");
    return rep.passed() ? 0 : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Secrecy-rate bounds for a full-duplex wireless-powered link"};
    app.require_subcommand(1);

    Common bounds_opts, sweep_opts, sim_opts, verify_opts;
    bool skip_upper = false;
    std::string variable = "p_et_dbm", values, outputs = "upper,lower,hd", trace_path;

    auto* bounds = app.add_subcommand("bounds", "bounds and half-duplex rate at one operating point");
    add_common(bounds, bounds_opts);
    bounds->add_flag("--no-upper", skip_upper, "skip the upper-bound search");

    auto* sweep = app.add_subcommand("sweep", "CSV table over one swept parameter");
    add_common(sweep, sweep_opts);
    sweep->add_option("--variable", variable, "p_et_dbm, p_et, alpha1_db, qbar1_db, eta or d_ehu_eve");
    sweep->add_option("--values", values, "comma list, or start:stop:count")->required();
    sweep->add_option("--outputs", outputs, "subset of upper,lower,hd,sim");

    auto* simulate = app.add_subcommand("simulate", "battery/protocol simulation with the lower-bound policy");
    add_common(simulate, sim_opts);
    simulate->add_option("--trace", trace_path, "per-slot CSV trace");

    auto* verify = app.add_subcommand("verify", "numerical self-checks as JSON");
    add_common(verify, verify_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*bounds) return run_bounds(bounds_opts, skip_upper);
        if (*sweep) return run_sweep(sweep_opts, variable, values, outputs);
        if (*simulate) return run_simulate(sim_opts, trace_path);
        if (*verify) return run_verify(verify_opts);
    } catch (const fdsec::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const fdsec::DomainError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
