// Acceptance checks, one pass/fail line per criterion.
//   acceptance           run all criteria
//   acceptance 4 7       run the listed ones
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fdsec/fdsec.hpp"

using namespace fdsec;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) { return lo * std::pow(hi / lo, unit_uniform(rng)); }

SystemParams fig1a() {
    SystemParams p;
    p.d_ehu_et = 10.0;
    p.d_ehu_eve = 12.0;
    p.d_et_eve = 12.0;
    return p;
}

SystemParams fig1b() {
    auto p = fig1a();
    p.d_ehu_eve = 9.0;
    return p;
}

const std::vector<double> kSweepDbm = {-30, -25, -20, -15, -10, -5, 0, 5};
constexpr int kFadingPoints = 64;

bool nondecreasing(const std::vector<double>& r) {
    for (std::size_t i = 1; i < r.size(); ++i)
        if (r[i] < r[i - 1] * (1.0 - 1e-9) - 1e-15) return false;
    return true;
}

std::string join(const std::vector<double>& r, double scale = 1.0 / kLn2) {
    std::ostringstream os;
    os.precision(4);
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? " " : "") << r[i] * scale;
    return os.str();
}

// Lower-bound solutions gathered by the figure suites, for the MAC criterion.
std::vector<std::pair<std::string, BoundSolution>> lower_bounds_of_suites() {
    std::vector<std::pair<std::string, BoundSolution>> out;
    for (auto make : {fig1a, fig1b}) {
        for (double dbm : kSweepDbm) {
            auto p = make();
            p.p_et = dbm_to_watts(dbm);
            const auto fd = FadingGrid::from_params(p, kFadingPoints);
            out.emplace_back("d_eve=" + fmt("%g", p.d_ehu_eve) + " P_ET=" + fmt("%g", dbm) + "dBm", lower_bound(p, fd));
        }
    }
    for (double q : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
        auto p = fig1a();
        p.qbar1 = std::sqrt(q);
        const auto fd = FadingGrid::from_params(p, kFadingPoints);
        out.emplace_back("qbar1^2=" + fmt("%g", q), lower_bound(p, fd));
    }
    for (double eta : {0.4, 0.6, 0.8}) {
        auto p = fig1a();
        p.eta = eta;
        const auto fd = FadingGrid::from_params(p, kFadingPoints);
        out.emplace_back("eta=" + fmt("%g", eta), lower_bound(p, fd));
    }
    return out;
}

// 1: integral and 𝓘 forms of the two leakage terms agree.
Outcome criterion1() {
    std::mt19937_64 rng(20240601);
    const auto p = fig1a();
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double x = std::sqrt(p.p_et) * log_uniform(rng, 0.01, 10.0);
        const double f2 = p.omega_f() * log_uniform(rng, 0.01, 10.0);
        const double g = std::sqrt(p.omega_g() * log_uniform(rng, 0.01, 10.0));
        const double pw = p.p_et * log_uniform(rng, 1e-4, 10.0);
        const double s3 = p.sigma3_sq * log_uniform(rng, 0.1, 10.0);
        const double a = state_leakage_integral({{x, 0.5}, {-x, 0.5}}, {pw, pw}, g, f2, s3);
        const double b = state_leakage_closed_form(x, pw, g, f2, s3);
        const double c = state_x2_leakage_integral(x, pw, g, f2, s3);
        const double d = state_x2_leakage_closed_form(x, pw, g, f2, s3);
        worst = std::max({worst, std::abs(a - b), std::abs(c - d)});
    }
    return {worst <= 1e-6, "max |integral - closed form| = " + fmt("%.3g", worst) + " nats over 200 draws"};
}

// 2: properties of 𝓘.
Outcome criterion2() {
    const double at0 = cal_I(0.0);
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i < 50; ++i) {
        const double a = 10.0 * i / 49.0;
        const double d = a * a - cal_I(a);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    const double e6 = std::abs(cal_I(6.0) - (36.0 - kLn2));
    const bool ok = at0 == 0.0 && lo >= 0.0 && hi <= kLn2 && e6 <= 1e-5;
    return {ok, "I(0) = " + fmt("%g", at0) + ", a^2 - I(a) in [" + fmt("%.3g", lo) + ", " + fmt("%.6g", hi) +
                    "], |I(6) - (36 - ln2)| = " + fmt("%.3g", e6)};
}

// 3: stationarity roots and calibrated constraints.
Outcome criterion3() {
    std::mt19937_64 rng(7);
    const auto p = fig1a();
    const auto fd = FadingGrid::from_params(p, kFadingPoints);
    double ehu = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double x2 = p.p_et * log_uniform(rng, 1e-3, 16.0);
        const double v2 = fd.omega_v * log_uniform(rng, 0.01, 10.0);
        const auto t = detail::ehu_terms(x2, v2, 1.0, p);
        const double top = (t.a + detail::eve_sum(fd.f_sq, p.sigma3_sq, 0.0)) / (1.0 - p.recycle_fraction());
        const double l2 = top * log_uniform(rng, 1e-4, 0.999);
        const double pw = solve_ehu_power(x2, v2, l2, p, fd.f_sq);
        ehu = std::max(ehu, std::abs(ehu_power_residual(pw, x2, v2, l2, p, fd.f_sq)));
    }
    double hd = 0.0;
    int hd_draws = 0;
    while (hd_draws < 100) {
        const double v2 = fd.omega_v * log_uniform(rng, 0.01, 10.0);
        const double room = v2 / p.sigma1_sq - detail::eve_sum(fd.f_sq, p.sigma3_sq, 0.0);
        if (!(room > 0.0)) continue;
        const double l2 = room * log_uniform(rng, 1e-4, 0.999);
        const double pw = hd_power(v2, l2, p, fd.f_sq);
        ++hd_draws;
        hd = std::max(hd, pw > 0.0 ? std::abs(hd_power_residual(pw, v2, l2, p, fd.f_sq)) : 1.0);
    }
    double c2 = 0.0, budget = 0.0;
    int case2 = 0;
    for (double dbm : kSweepDbm) {
        auto q = p;
        q.p_et = dbm_to_watts(dbm);
        const auto g = FadingGrid::from_params(q, kFadingPoints);
        const auto lb = lower_bound(q, g);
        c2 = std::max(c2, std::abs(lb.result.c2_relative_residual));
        // the Case-1 law on its own as well
        const auto et1 = EtInputDistribution::binary(std::sqrt(q.p_et));
        c2 = std::max(c2, std::abs(energy_balance(calibrate_lambda2(et1, q, g), et1, q, g).relative_residual()));
        const auto c = solve_case2(q, g, {}, calibrate_lambda2(et1, q, g).lambda2);
        if (c.solved) {
            ++case2;
            budget = std::max(budget, std::abs(c.et.average_power(g.v_sq) - q.p_et) / q.p_et);
        }
    }
    const bool ok = ehu <= 1e-9 && hd <= 1e-9 && c2 <= 1e-9 && budget <= 1e-6 && case2 > 0;
    return {ok, "EHU root residual " + fmt("%.2g", ehu) + ", HD root residual " + fmt("%.2g", hd) +
                    ", C2 relative " + fmt("%.2g", c2) + ", Case-2 budget relative " + fmt("%.2g", budget) + " (" +
                    std::to_string(case2) + " Case-2 solves)"};
}

// 4: ordering and horizontal gap on the Fig. 1a sweep.
Outcome criterion4() {
    std::vector<double> up, lo, hd;
    for (double dbm : kSweepDbm) {
        auto p = fig1a();
        p.p_et = dbm_to_watts(dbm);
        const auto fd = FadingGrid::from_params(p, kFadingPoints);
        const auto lb = lower_bound(p, fd);
        up.push_back(upper_bound(p, fd, {}, {}, {lb}).result.c_s_upper);
        lo.push_back(lb.result.c_s_lower);
        hd.push_back(hd_secrecy_rate(p, fd).rate);
    }
    bool order = true;
    for (std::size_t i = 0; i < up.size(); ++i) order = order && up[i] >= lo[i] && lo[i] >= hd[i] && hd[i] >= 0.0;
    const bool strict = lo.back() > hd.back();

    // Upper-bound rate at the middle of the sweep (log-rate interpolation),
    // then the power at which the lower bound reaches it.
    const double mid = 0.5 * (kSweepDbm.front() + kSweepDbm.back());
    auto interp_rate = [&](const std::vector<double>& r, double dbm) {
        std::size_t k = 0;
        while (k + 2 < kSweepDbm.size() && kSweepDbm[k + 1] < dbm) ++k;
        const double w = (dbm - kSweepDbm[k]) / (kSweepDbm[k + 1] - kSweepDbm[k]);
        return std::exp((1 - w) * std::log(r[k]) + w * std::log(r[k + 1]));
    };
    const double target = interp_rate(up, mid);
    double reach = std::nan("");
    for (std::size_t k = 0; k + 1 < lo.size(); ++k)
        if (lo[k] <= target && target <= lo[k + 1]) {
            const double w = std::log(target / lo[k]) / std::log(lo[k + 1] / lo[k]);
            reach = kSweepDbm[k] + w * (kSweepDbm[k + 1] - kSweepDbm[k]);
            break;
        }
    const double gap = reach - mid;
    const bool gap_ok = std::isfinite(gap) && std::abs(gap) <= 1.5;
    return {order && strict && gap_ok,
            std::string("ordering ") + (order ? "holds" : "violated") + ", FD>HD at top " + (strict ? "yes" : "no") +
                ", horizontal gap " + fmt("%.2f", gap) + " dB (tolerance 1.5); upper bits [" + join(up) +
                "] lower bits [" + join(lo) + "] hd bits [" + join(hd) + "]"};
}

// 5: Fig. 1b, HD clamped to zero while the FD lower bound stays positive.
Outcome criterion5() {
    auto p = fig1b();
    p.p_et = dbm_to_watts(kSweepDbm.back());
    const auto fd = FadingGrid::from_params(p, kFadingPoints);
    const double lo = lower_bound(p, fd).result.c_s_lower;
    const auto hd = hd_secrecy_rate(p, fd);
    return {hd.rate == 0.0 && lo > 0.0, "at " + fmt("%g", kSweepDbm.back()) + " dBm: hd = " +
                                            fmt("%.4g", nats_to_bits(hd.rate)) + " bits (t* = " +
                                            fmt("%.3g", hd.t_star) + "), lower = " + fmt("%.4g", nats_to_bits(lo)) +
                                            " bits"};
}

// 6: monotonicity in the self-interference gain and in η.
Outcome criterion6() {
    std::vector<double> by_q;
    for (double q : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
        auto p = fig1a();
        p.qbar1 = std::sqrt(q);
        by_q.push_back(lower_bound(p, FadingGrid::from_params(p, kFadingPoints)).result.c_s_lower);
    }
    std::vector<double> up, lo, hd;
    for (double eta : {0.4, 0.6, 0.8}) {
        auto p = fig1a();
        p.eta = eta;
        const auto fd = FadingGrid::from_params(p, kFadingPoints);
        const auto lb = lower_bound(p, fd);
        lo.push_back(lb.result.c_s_lower);
        up.push_back(upper_bound(p, fd, {}, {}, {lb}).result.c_s_upper);
        hd.push_back(hd_secrecy_rate(p, fd).rate);
    }
    const bool ok = nondecreasing(by_q) && nondecreasing(lo) && nondecreasing(up) && nondecreasing(hd);
    return {ok, "lower vs qbar1^2+alpha1 [" + join(by_q) + "], eta sweep upper [" + join(up) + "] lower [" +
                    join(lo) + "] hd [" + join(hd) + "] bits"};
}

// 7: decodability bookkeeping on every converged lower-bound solution.
Outcome criterion7() {
    int checked = 0;
    std::string bad;
    double worst_x2 = 0.0;
    for (const auto& [name, lb] : lower_bounds_of_suites()) {
        if (!lb.result.feasible) continue;
        ++checked;
        const auto& d = lb.result.diagnostics;
        worst_x2 = std::max(worst_x2, d.i_x2_y3_bits);
        const bool ok = d.r_et_bits == 1.0 && d.i_x2_y3_bits < 1.0 && d.r_ehu_bits > d.i_x1_y3_bits;
        if (!ok) bad += (bad.empty() ? "" : "; ") + name;
    }
    return {bad.empty() && checked > 0, std::to_string(checked) + " solutions, max I(X2;Y3) = " +
                                            fmt("%.3g", worst_x2) + " bits" +
                                            (bad.empty() ? "" : ", failing: " + bad)};
}

// 8: protocol simulation.
Outcome criterion8() {
    auto p = fig1a();
    const auto fd = FadingGrid::from_params(p, kFadingPoints);
    const auto lb = lower_bound(p, fd);
    // Calibrate at a processing cost that is a large share of the harvest,
    // then run with a lower one so the constraint holds with slack.
    auto cal = p;
    cal.p_p = 0.9 * p.eta * lb.et.average_received_power(fd.v_sq);
    const auto pol = calibrate_lambda2(lb.et, cal, fd);
    const auto b = energy_balance(pol, lb.et, cal, fd);
    auto run = cal;
    run.p_p = 0.88 * b.harvest - b.mean_power;
    const auto rb = energy_balance(pol, lb.et, run, fd);
    const double slack = 1.0 - rb.spend / rb.harvest;

    SimConfig sc;
    sc.n_slots = 101000;
    sc.burn_in = 1000;
    sc.k = 100;
    sc.policy = pol;
    sc.et_dist = lb.et;
    sc.keep_records = false;
    sc.seed = 1;
    const auto main = simulate(sc, run, fd).summary;
    const double z = (main.mean_harvest_per_use - rb.harvest) / main.harvest_standard_error;

    bool battery_ok = true;
    std::mt19937_64 seeds(99);
    for (int i = 0; i < 20; ++i) {
        sc.seed = seeds();
        const auto s = simulate(sc, run, fd).summary;
        battery_ok = battery_ok && s.min_battery >= 0.0 && s.causality_held;
    }
    const bool ok = slack >= 0.1 && main.fraction_active >= 0.99 && battery_ok && std::abs(z) <= 3.0;
    return {ok, "slack " + fmt("%.3f", slack) + ", fraction_active " + fmt("%.5f", main.fraction_active) +
                    ", battery non-negative over 20 seeds " + (battery_ok ? "yes" : "no") +
                    ", harvest z-score " + fmt("%.2f", z)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                            criterion5, criterion6, criterion7, criterion8};
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        const int c = std::atoi(argv[i]);
        if (c < 1 || c > static_cast<int>(criteria.size())) {
            std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
            return 2;
        }
        selected.insert(c);
    }
    if (selected.empty())
        for (int c = 1; c <= static_cast<int>(criteria.size()); ++c) selected.insert(c);

    int failed = 0;
    for (int c : selected) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[static_cast<std::size_t>(c - 1)]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d: %s (%.1fs) %s\n", c, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
