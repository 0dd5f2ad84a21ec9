#pragma once

// Slot-level simulation of the EHU battery under the transmit-when-charged
// protocol. One channel use lasts one time unit, so powers and per-use
// energies share a unit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "fdsec/errors.hpp"
#include "fdsec/et_distribution.hpp"
#include "fdsec/model.hpp"
#include "fdsec/power_policy.hpp"

namespace fdsec {

/// Energy picked up by the EHU in one channel use: η(v x2 + q̄1 x1 + q1 x1)².
inline double harvest_energy(double v_sq, double x2, double x1, double q1, const SystemParams& p) {
    const double s = std::sqrt(v_sq) * x2 + (p.qbar1 + q1) * x1;
    return p.eta * s * s;
}

struct SimConfig {
    long n_slots = 100000;
    int k = 100;  // channel uses per slot
    double initial_battery = 0.0;
    PowerPolicy policy;
    EtInputDistribution et_dist;
    std::uint64_t seed = 1;
    long burn_in = 0;  // leading slots left out of the summary
    std::optional<double> battery_cap;
    double analytic_rate = 0.0;  // C_s^l in nats, scaled by the active fraction
    bool keep_records = true;

    void validate() const {
        if (n_slots < 1) throw DomainError("SimConfig: n_slots must be >= 1");
        if (k < 1) throw DomainError("SimConfig: k must be >= 1");
        if (!(initial_battery >= 0.0)) throw DomainError("SimConfig: initial_battery must be >= 0");
        if (burn_in < 0) throw DomainError("SimConfig: burn_in must be >= 0");
        if (battery_cap && !(*battery_cap >= 0.0)) throw DomainError("SimConfig: battery_cap must be >= 0");
    }
};

struct SlotRecord {
    double v_sq;
    double battery_before;
    double e_in;
    double e_out;
    bool active;
};

struct SimSummary {
    long n_active = 0;
    long b_silent = 0;
    double fraction_active = 0.0;
    double empirical_secrecy_rate = 0.0;
    double mean_harvest_per_use = 0.0;  // over the summarized slots
    double harvest_standard_error = 0.0;
    double min_battery = 0.0;
    bool causality_held = true;  // cumulative spend never above start + cumulative harvest
};

struct SimTrace {
    std::vector<SlotRecord> records;
    SimSummary summary;

    void write_csv(std::ostream& out) const {
        out << "slot,v_sq,battery_J,e_in_J,e_out_J,active\n";
        const auto prec = out.precision(17);
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            out << i << ',' << r.v_sq << ',' << r.battery_before << ',' << r.e_in << ',' << r.e_out << ','
                << (r.active ? 1 : 0) << '\n';
        }
        out.precision(prec);
    }
};

inline SimTrace simulate(const SimConfig& cfg, const SystemParams& p, const FadingGrid& fading) {
    cfg.validate();
    p.validate();
    cfg.et_dist.validate(fading.v_sq);
    if (cfg.policy.p_ehu.size() != fading.v_sq.size())
        throw ShapeError("simulate: policy does not match the fading grid");

    FadingSampler sampler(fading, cfg.seed);
    auto& rng = sampler.engine();
    NormalSource normal;
    const double q1_sd = std::sqrt(p.alpha1);

    SimTrace trace;
    if (cfg.keep_records) trace.records.reserve(static_cast<std::size_t>(cfg.n_slots));
    auto& s = trace.summary;

    double battery = cfg.initial_battery;
    double cum_in = 0.0, cum_out = 0.0;
    double sum = 0.0, sum_sq = 0.0;
    long counted = 0;
    s.min_battery = battery;

    for (long slot = 0; slot < cfg.n_slots; ++slot) {
        const auto draw = sampler.next();
        const auto& pts = cfg.et_dist.at(draw.v_index);
        // ET symbol for the slot
        double u = unit_uniform(rng);
        std::size_t j = 0;
        while (j + 1 < pts.size() && u >= pts[j].p) u -= pts[j++].p;
        const double x2 = pts[j].x;
        const double power = cfg.policy.at(draw.v_index, j);

        const double cost = cfg.k * (power + p.p_p);
        const bool active = battery >= cost;
        const double x1_sd = active ? std::sqrt(power) : 0.0;
        double e_in = 0.0;
        for (int n = 0; n < cfg.k; ++n) {
            const double x1 = x1_sd * normal(rng);
            const double q1 = q1_sd * normal(rng);
            e_in += harvest_energy(draw.v_sq, x2, x1, q1, p);
        }
        const double e_out = active ? cost : 0.0;

        if (cfg.keep_records) trace.records.push_back({draw.v_sq, battery, e_in, e_out, active});
        cum_in += e_in;
        cum_out += e_out;
        if (cum_out > cfg.initial_battery + cum_in) s.causality_held = false;
        battery = battery - e_out + e_in;
        if (cfg.battery_cap) battery = std::min(battery, *cfg.battery_cap);
        s.min_battery = std::min(s.min_battery, battery);

        if (slot >= cfg.burn_in) {
            ++counted;
            if (active)
                ++s.n_active;
            else
                ++s.b_silent;
            const double per_use = e_in / cfg.k;
            sum += per_use;
            sum_sq += per_use * per_use;
        }
    }
    if (counted > 0) {
        s.fraction_active = static_cast<double>(s.n_active) / static_cast<double>(counted);
        s.mean_harvest_per_use = sum / static_cast<double>(counted);
        if (counted > 1) {
            const double var = std::max(0.0, (sum_sq - sum * s.mean_harvest_per_use) / static_cast<double>(counted - 1));
            s.harvest_standard_error = std::sqrt(var / static_cast<double>(counted));
        }
    }
    s.empirical_secrecy_rate = s.fraction_active * cfg.analytic_rate;
    return trace;
}

}  // namespace fdsec
