#pragma once

// Upper bound (discrete ET mass-point search) and achievable lower bound
// (binary ET input, Case 1 / Case 2 / Case 3) on the secrecy capacity.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fdsec/errors.hpp"
#include "fdsec/et_distribution.hpp"
#include "fdsec/model.hpp"
#include "fdsec/numerics.hpp"
#include "fdsec/power_policy.hpp"

namespace fdsec {

struct FormulaOptions {
    // g ≡ 1 at the eavesdropper and the asymmetric half-duplex leakage term,
    // i.e. the expressions exactly as printed.
    bool printed = false;
};

enum class CaseLabel { Case1, Case2, Case3 };

inline const char* to_string(CaseLabel c) {
    switch (c) {
        case CaseLabel::Case1: return "Case1";
        case CaseLabel::Case2: return "Case2";
        default: return "Case3";
    }
}

struct MacDiagnostics {
    double r_et_bits = 1.0;
    double i_x2_y3_bits = 0.0;
    double i_x1_y3_bits = 0.0;
    double r_ehu_bits = 0.0;
    bool et_secure() const { return r_et_bits > i_x2_y3_bits; }
    bool ehu_secure() const { return r_ehu_bits > i_x1_y3_bits; }
};

struct SecrecyResult {
    double c_s_upper = 0.0;  // nats per channel use
    double c_s_lower = 0.0;
    CaseLabel case_label = CaseLabel::Case3;
    double hd_rate = 0.0;
    double hd_t_star = 0.0;
    MacDiagnostics diagnostics;
    bool feasible = true;
    // lower-bound internals
    double case1_rate = 0.0;
    double case2_rate = 0.0;
    bool case2_solved = false;
    double lambda1_case1 = 0.0;
    double c2_relative_residual = 0.0;
    double budget_relative_residual = 0.0;
    std::string note;
};

struct BoundSolution {
    SecrecyResult result;
    EtInputDistribution et;
    PowerPolicy policy;
};

inline double eve_amplitude(double g_sq, const FormulaOptions& opt) { return opt.printed ? 1.0 : std::sqrt(g_sq); }

/// ½ Σ ln(1 + v² P_EHU / (σ2² + x2² α2)) p(x2|v) p(v)
inline double legit_rate(const EtInputDistribution& et, const PowerPolicy& pol, const SystemParams& p,
                         const GainGrid& v) {
    double r = 0.0;
    for (std::size_t iv = 0; iv < v.size(); ++iv) {
        const auto& pts = et.at(iv);
        for (std::size_t j = 0; j < pts.size(); ++j) {
            const double snr = v[iv].gain * pol.at(iv, j) / (p.sigma2_sq + pts[j].x * pts[j].x * p.alpha2);
            r += 0.5 * std::log1p(snr) * pts[j].p * v[iv].prob;
        }
    }
    return r;
}

// ---- per-state leakage ------------------------------------------------------

/// I(X1; Y3 | v, g, f) from the two mixture entropies. `powers[j]` is the EHU
/// power paired with mass point j.
inline double state_leakage_integral(const std::vector<MassPoint>& pts, const std::vector<double>& powers,
                                     double g_amp, double f_sq, double sigma3_sq) {
    MixtureSpec y, z;
    y.sigma_sq = z.sigma_sq = sigma3_sq;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        y.means.push_back(g_amp * pts[j].x);
        y.probs.push_back(pts[j].p);
        y.component_sigma_sq.push_back(f_sq * powers[j] + sigma3_sq);
    }
    z.means = y.means;
    z.probs = y.probs;
    return mixture_entropy(y) - mixture_entropy(z);
}

/// Same quantity for ±x through 𝓘: ½ln(σy²/σ3²) + a_y² − 𝓘(a_y) − a_z² + 𝓘(a_z),
/// with each a² − 𝓘(a) evaluated directly to avoid cancelling large squares.
inline double state_leakage_closed_form(double x, double power, double g_amp, double f_sq, double sigma3_sq) {
    const double var_y = f_sq * power + sigma3_sq;
    const double ay = std::abs(g_amp * x) / std::sqrt(var_y);
    const double az = std::abs(g_amp * x) / std::sqrt(sigma3_sq);
    return 0.5 * std::log(var_y / sigma3_sq) + cal_I_excess(ay) - cal_I_excess(az);
}

/// I(X2; Y3 | v, g, f) for ±x as h(Y3) − h(Y3 | X2).
inline double state_x2_leakage_integral(double x, double power, double g_amp, double f_sq, double sigma3_sq) {
    const double var_y = f_sq * power + sigma3_sq;
    return mixture_entropy({{-g_amp * x, g_amp * x}, {0.5, 0.5}, var_y, {}}) - gaussian_entropy(var_y);
}

/// The 𝓘 form of the same term, a² − 𝓘(a) with a = g x / σy.
inline double state_x2_leakage_closed_form(double x, double power, double g_amp, double f_sq, double sigma3_sq) {
    return cal_I_excess(std::abs(g_amp * x) / std::sqrt(f_sq * power + sigma3_sq));
}

enum class LeakageMethod {
    Auto,        // tabulated closed form for binary laws, quadrature otherwise
    Quadrature,  // mixture entropies always
    ClosedForm,  // 𝓘 evaluated directly; binary laws only
};

/// Σ_{v,g,f} I(X1; Y3 | v, g, f) p(v) p(g) p(f)
inline double eve_leakage(const EtInputDistribution& et, const PowerPolicy& pol, const SystemParams& p,
                          const FadingGrid& fd, const FormulaOptions& opt = {},
                          LeakageMethod method = LeakageMethod::Auto) {
    const bool binary = et.is_binary_symmetric();
    if (method == LeakageMethod::ClosedForm && !binary)
        throw ShapeError("eve_leakage: closed form needs a binary symmetric ET law");
    const bool fast = binary && method == LeakageMethod::Auto;
    const double s3 = p.sigma3_sq;
    double total = 0.0;
    for (std::size_t iv = 0; iv < fd.v_sq.size(); ++iv) {
        const auto& pts = et.at(iv);
        const auto& powers = pol.p_ehu.at(iv);
        double acc_v = 0.0;
        for (const auto& g : fd.g_sq) {
            const double ga = eve_amplitude(g.gain, opt);
            double acc_g = 0.0;
            if (fast || method == LeakageMethod::ClosedForm) {
                const double x = std::abs(pts[0].x);
                const double pw = powers[0];
                const double dz = fast ? binary_mixture_excess(ga * x / std::sqrt(s3)) : 0.0;
                for (const auto& f : fd.f_sq) {
                    double i;
                    if (fast) {
                        const double var_y = f.gain * pw + s3;
                        i = 0.5 * std::log1p(f.gain * pw / s3) + binary_mixture_excess(ga * x / std::sqrt(var_y)) - dz;
                    } else {
                        i = state_leakage_closed_form(x, pw, ga, f.gain, s3);
                    }
                    acc_g += i * f.prob;
                }
            } else {
                MixtureSpec z;
                z.sigma_sq = s3;
                for (const auto& m : pts) {
                    z.means.push_back(ga * m.x);
                    z.probs.push_back(m.p);
                }
                const double hz = mixture_entropy(z);
                MixtureSpec y = z;
                y.component_sigma_sq.resize(pts.size());
                for (const auto& f : fd.f_sq) {
                    for (std::size_t j = 0; j < pts.size(); ++j) y.component_sigma_sq[j] = f.gain * powers[j] + s3;
                    acc_g += (mixture_entropy(y) - hz) * f.prob;
                }
            }
            acc_v += acc_g * g.prob;
        }
        total += acc_v * fd.v_sq[iv].prob;
    }
    return total;
}

inline double secrecy_rate(const EtInputDistribution& et, const PowerPolicy& pol, const SystemParams& p,
                           const FadingGrid& fd, const FormulaOptions& opt = {}) {
    return legit_rate(et, pol, p, fd.v_sq) - eve_leakage(et, pol, p, fd, opt);
}

/// Decodability bookkeeping of the achievability scheme, in bits.
inline MacDiagnostics mac_decodability_check(const EtInputDistribution& et, const PowerPolicy& pol,
                                             const SystemParams& p, const FadingGrid& fd,
                                             const FormulaOptions& opt = {}) {
    if (!et.is_binary_symmetric()) throw ShapeError("mac_decodability_check: needs a binary symmetric ET law");
    MacDiagnostics d;
    d.r_et_bits = 1.0;
    double i2 = 0.0;
    for (std::size_t iv = 0; iv < fd.v_sq.size(); ++iv) {
        const double x = std::abs(et.at(iv)[0].x);
        const double pw = pol.at(iv, 0);
        for (const auto& g : fd.g_sq) {
            const double ga = eve_amplitude(g.gain, opt);
            for (const auto& f : fd.f_sq) {
                const double var_y = f.gain * pw + p.sigma3_sq;
                i2 += binary_mixture_excess(ga * x / std::sqrt(var_y)) * f.prob * g.prob * fd.v_sq[iv].prob;
            }
        }
    }
    d.i_x2_y3_bits = nats_to_bits(i2);
    d.i_x1_y3_bits = nats_to_bits(eve_leakage(et, pol, p, fd, opt));
    d.r_ehu_bits = nats_to_bits(legit_rate(et, pol, p, fd.v_sq));
    return d;
}

// ---- lower bound --------------------------------------------------------------

struct Case2Solution {
    bool solved = false;
    std::vector<double> x0_sq;
    EtInputDistribution et;
    PowerPolicy policy;
    double rate = 0.0;
    double lambda1 = 0.0;
    double budget_relative_residual = 0.0;
    std::string error;
};

namespace detail {

// Per-v Lagrangian share at ET power s = x0²:
// ½ln(1 + v²P/(σ2² + sα2)) − λ1 s − λ2((1 − η(q̄1²+α1))P − η v² s), with P the EHU root at s.
inline double case2_share(double s, double v_sq, double lambda1, double lambda2, const SystemParams& p,
                          const GainGrid& f) {
    const double pw = solve_ehu_power(s, v_sq, lambda2, p, f);
    const double a = v_sq / (p.sigma2_sq + s * p.alpha2);
    return 0.5 * std::log1p(a * pw) - lambda1 * s - lambda2 * ((1.0 - p.recycle_fraction()) * pw - p.eta * v_sq * s);
}

// Largest s in [0, cap] with a nonnegative share; 0 when there is none.
inline double case2_level(double v_sq, double cap, double lambda1, double lambda2, const SystemParams& p,
                          const GainGrid& f) {
    auto r = [&](double s) { return case2_share(s, v_sq, lambda1, lambda2, p, f); };
    double prev_s = cap;
    double prev_r = r(cap);
    if (prev_r >= 0.0) return cap;
    constexpr int kSteps = 32;
    for (int k = 1; k <= kSteps; ++k) {
        const double s = cap * std::pow(10.0, -8.0 * k / kSteps);
        const double rs = r(s);
        if (rs >= 0.0) {
            std::uintmax_t iters = 100;
            const auto [a, b] = boost::math::tools::toms748_solve(r, s, prev_s, rs, prev_r,
                                                                  boost::math::tools::eps_tolerance<double>(40), iters);
            // keep the side with a nonnegative share
            return r(b) >= 0.0 ? b : a;
        }
        prev_s = s;
        prev_r = rs;
    }
    return 0.0;
}

inline std::vector<double> case2_levels(double lambda1, double lambda2, const SystemParams& p, const FadingGrid& fd) {
    std::vector<double> s(fd.v_sq.size());
    for (std::size_t iv = 0; iv < s.size(); ++iv)
        s[iv] = case2_level(fd.v_sq[iv].gain, p.p_et / fd.v_sq[iv].prob, lambda1, lambda2, p, fd.f_sq);
    return s;
}

inline EtInputDistribution levels_to_distribution(const std::vector<double>& s) {
    std::vector<double> x(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) x[i] = std::sqrt(std::max(0.0, s[i]));
    return EtInputDistribution::binary_per_v(x);
}

inline double levels_budget(const std::vector<double>& s, const GainGrid& v) {
    double b = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) b += s[i] * v[i].prob;
    return b;
}

struct Case2Point {
    std::vector<double> s;
    double budget = 0.0;
};

inline Case2Point case2_point(double lambda1, double lambda2, const SystemParams& p, const FadingGrid& fd) {
    Case2Point pt;
    pt.s = case2_levels(lambda1, lambda2, p, fd);
    pt.budget = levels_budget(pt.s, fd.v_sq);
    return pt;
}

// For fixed λ2, the λ1 >= 0 whose levels spend exactly P_ET. The level
// budget is nonincreasing in λ1 but may jump; a jump is closed by
// interpolating the levels on either side of it.
inline std::vector<double> case2_levels_on_budget(double lambda2, double& lambda1, const SystemParams& p,
                                                  const FadingGrid& fd) {
    auto lo_pt = case2_point(0.0, lambda2, p, fd);
    if (lo_pt.budget <= p.p_et) {
        lambda1 = 0.0;
        return lo_pt.s;
    }
    double l_lo = 0.0;
    double l_hi = std::max(lambda2 * p.eta * fd.omega_v, std::numeric_limits<double>::min());
    auto hi_pt = case2_point(l_hi, lambda2, p, fd);
    for (int k = 0; hi_pt.budget > p.p_et; ++k) {
        if (k >= 200) throw ConvergenceError("case 2: level budget never drops below P_ET", hi_pt.budget / p.p_et);
        l_lo = l_hi;
        lo_pt = std::move(hi_pt);
        l_hi *= 4.0;
        hi_pt = case2_point(l_hi, lambda2, p, fd);
    }
    for (int it = 0; it < 100 && (l_hi - l_lo) > 1e-9 * l_hi; ++it) {
        const double mid = l_lo > 0.0 ? std::sqrt(l_lo * l_hi) : 0.5 * l_hi;
        auto mid_pt = case2_point(mid, lambda2, p, fd);
        if (mid_pt.budget > p.p_et) {
            l_lo = mid;
            lo_pt = std::move(mid_pt);
        } else {
            l_hi = mid;
            hi_pt = std::move(mid_pt);
        }
    }
    lambda1 = 0.5 * (l_lo + l_hi);
    const double theta = (p.p_et - hi_pt.budget) / (lo_pt.budget - hi_pt.budget);
    std::vector<double> s(hi_pt.s.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = hi_pt.s[i] + theta * (lo_pt.s[i] - hi_pt.s[i]);
    return s;
}

// Scales the levels so their average is exactly p_et, respecting the per-state caps.
inline void close_budget(std::vector<double>& s, const SystemParams& p, const GainGrid& v) {
    for (int it = 0; it < 100; ++it) {
        const double b = levels_budget(s, v);
        if (std::abs(b - p.p_et) <= 1e-12 * p.p_et) return;
        double free_mass = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s[i] < p.p_et / v[i].prob) free_mass += s[i] * v[i].prob;
        if (free_mass <= 0.0) {
            // nothing to scale; hand the shortfall to the strongest state
            s.back() += (p.p_et - b) / v.back().prob;
            continue;
        }
        const double k = 1.0 + (p.p_et - b) / free_mass;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s[i] < p.p_et / v[i].prob) s[i] = std::min(s[i] * k, p.p_et / v[i].prob);
    }
}

}  // namespace detail

/// ET levels x0(v) adapted to the EHU-ET fading state. Alternates between
/// λ1 (ET budget met with equality for the current λ2) and λ2 (energy
/// balance met with equality for the current levels) until λ2 settles or
/// starts repeating.
inline Case2Solution solve_case2(const SystemParams& p, const FadingGrid& fd, const FormulaOptions& opt = {},
                                 double lambda2_start = 0.0, int max_rounds = 30) {
    Case2Solution out;
    try {
        double lambda2 = lambda2_start;
        if (!(lambda2 > 0.0)) lambda2 = calibrate_lambda2(EtInputDistribution::binary(std::sqrt(p.p_et)), p, fd).lambda2;
        // Every round yields levels on the budget and a calibrated λ2, so each
        // is achievable; the alternation can cycle, so the best round is kept.
        double best_rate = -std::numeric_limits<double>::infinity();
        std::vector<double> seen;
        for (int round = 0; round < max_rounds; ++round) {
            double lambda1 = 0.0;
            auto s = detail::case2_levels_on_budget(lambda2, lambda1, p, fd);
            detail::close_budget(s, p, fd.v_sq);
            auto et = detail::levels_to_distribution(s);
            auto pol = calibrate_lambda2(et, p, fd);
            pol.lambda1 = lambda1;
            const double rate = secrecy_rate(et, pol, p, fd, opt);
            if (rate > best_rate) {
                best_rate = rate;
                out.x0_sq = s;
                out.et = et;
                out.policy = pol;
                out.lambda1 = lambda1;
                out.rate = rate;
            }
            const double change = std::abs(pol.lambda2 - lambda2) / lambda2;
            seen.push_back(lambda2);
            lambda2 = pol.lambda2;
            if (change < 1e-6) break;
            const bool repeats = std::any_of(seen.begin(), seen.end(),
                                             [&](double l) { return std::abs(l - lambda2) <= 1e-9 * lambda2; });
            if (repeats) break;
        }
        out.budget_relative_residual = (out.et.average_power(fd.v_sq) - p.p_et) / p.p_et;
        out.solved = true;
    } catch (const Error& e) {
        out.solved = false;
        out.error = e.what();
    }
    return out;
}

/// Case-1 stationarity multiplier λ1 for the binary ±sqrt(P_ET) law.
inline double case1_lambda1(const PowerPolicy& pol, const SystemParams& p, const FadingGrid& fd) {
    double mean_p = 0.0;
    double rate = 0.0;
    for (std::size_t iv = 0; iv < fd.v_sq.size(); ++iv) {
        const double pw = pol.at(iv, 0);
        mean_p += pw * fd.v_sq[iv].prob;
        rate += 0.5 * std::log1p(fd.v_sq[iv].gain * pw / (p.sigma2_sq + p.p_et * p.alpha2)) * fd.v_sq[iv].prob;
    }
    const double bracket = (1.0 - p.recycle_fraction()) * mean_p - p.eta * p.p_et * fd.omega_v;
    return (pol.lambda2 * bracket - rate) / p.p_et;
}

inline BoundSolution infeasible_solution(const FadingGrid& fd, const std::string& why) {
    BoundSolution s;
    s.result.feasible = false;
    s.result.note = why;
    s.et = EtInputDistribution::binary(0.0);
    s.policy.p_ehu.assign(fd.v_sq.size(), std::vector<double>(2, 0.0));
    return s;
}

inline BoundSolution lower_bound(const SystemParams& p, const FadingGrid& fd, const FormulaOptions& opt = {}) {
    p.validate();
    const auto case1_et = EtInputDistribution::binary(std::sqrt(p.p_et));
    PowerPolicy case1_pol;
    try {
        case1_pol = calibrate_lambda2(case1_et, p, fd);
    } catch (const InfeasibleEnergyError& e) {
        return infeasible_solution(fd, e.what());
    }
    BoundSolution best;
    auto& r = best.result;
    r.case1_rate = secrecy_rate(case1_et, case1_pol, p, fd, opt);
    r.lambda1_case1 = case1_lambda1(case1_pol, p, fd);
    case1_pol.lambda1 = r.lambda1_case1;
    best.et = case1_et;
    best.policy = case1_pol;
    r.case_label = CaseLabel::Case1;
    double best_rate = r.case1_rate;

    if (r.lambda1_case1 < 0.0) {
        auto c2 = solve_case2(p, fd, opt, case1_pol.lambda2);
        r.case2_solved = c2.solved;
        if (c2.solved) {
            r.case2_rate = c2.rate;
            if (c2.rate > best_rate) {
                best_rate = c2.rate;
                best.et = c2.et;
                best.policy = c2.policy;
                r.case_label = CaseLabel::Case2;
                r.budget_relative_residual = c2.budget_relative_residual;
            }
        } else {
            r.note = "case 2 not solved: " + c2.error;
        }
    }
    if (!(best_rate > 0.0)) r.case_label = CaseLabel::Case3;
    r.c_s_lower = std::max(0.0, best_rate);
    r.c2_relative_residual = energy_balance(best.policy, best.et, p, fd).relative_residual();
    r.diagnostics = mac_decodability_check(best.et, best.policy, p, fd, opt);
    return best;
}

// ---- upper bound --------------------------------------------------------------

struct SearchConfig {
    int j_max = 3;
    int amplitude_levels = 24;
    double amplitude_lo = 0.05;  // × sqrt(P_ET)
    double amplitude_hi = 4.0;
    int prob_resolution = 16;
    int search_points = 6;  // fading points per channel while searching
    int finalists = 2;
    int local_moves = 120;  // evaluation budget per J >= 2
    // ET laws that depend on v: power only in the strongest k states
    std::vector<int> state_spreads = {1, 2, 4};
};

struct Candidate {
    std::vector<int> amp;  // amplitude grid indices, one per pair
    std::vector<int> q;    // pair masses in units of 1/resolution
    double rate = -std::numeric_limits<double>::infinity();
};

namespace detail {

inline std::vector<double> amplitude_grid(const SystemParams& p, const SearchConfig& c) {
    const double base = std::sqrt(p.p_et);
    std::vector<double> a;
    for (int i = 0; i < c.amplitude_levels; ++i) {
        const double t = c.amplitude_levels == 1 ? 0.0 : static_cast<double>(i) / (c.amplitude_levels - 1);
        a.push_back(base * c.amplitude_lo * std::pow(c.amplitude_hi / c.amplitude_lo, t));
    }
    a.push_back(base);
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

inline EtInputDistribution candidate_distribution(const Candidate& c, const std::vector<double>& amps, int res) {
    std::vector<double> a, q;
    int used = 0;
    for (std::size_t k = 0; k < c.amp.size(); ++k) {
        a.push_back(amps[static_cast<std::size_t>(c.amp[k])]);
        q.push_back(static_cast<double>(c.q[k]) / res);
        used += c.q[k];
    }
    return EtInputDistribution::symmetric_pairs(a, q, static_cast<double>(res - used) / res);
}

inline bool candidate_feasible(const Candidate& c, const std::vector<double>& amps, int res, double p_et) {
    double pw = 0.0;
    int used = 0;
    for (std::size_t k = 0; k < c.amp.size(); ++k) {
        if (c.q[k] <= 0) return false;
        const double a = amps[static_cast<std::size_t>(c.amp[k])];
        pw += a * a * c.q[k] / res;
        used += c.q[k];
    }
    for (std::size_t i = 0; i < c.amp.size(); ++i)
        for (std::size_t k = i + 1; k < c.amp.size(); ++k)
            if (c.amp[i] == c.amp[k]) return false;
    return used <= res && pw <= p_et * (1.0 + 1e-12);
}

inline double candidate_rate(const EtInputDistribution& et, const SystemParams& p, const FadingGrid& fd,
                             const FormulaOptions& opt, PowerPolicy* pol_out = nullptr) {
    try {
        auto pol = calibrate_lambda2(et, p, fd);
        const double r = secrecy_rate(et, pol, p, fd, opt);
        if (pol_out) *pol_out = std::move(pol);
        return r;
    } catch (const InfeasibleEnergyError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace detail

/// Best symmetric discrete ET law found by the finite search, evaluated on the
/// full fading grid. `seeds` (for example the lower-bound laws) compete too.
inline BoundSolution upper_bound(const SystemParams& p, const FadingGrid& fd, const SearchConfig& cfg = {},
                                 const FormulaOptions& opt = {}, const std::vector<BoundSolution>& seeds = {}) {
    p.validate();
    if (!(p.eta * p.p_et * fd.omega_v > p.p_p)) return infeasible_solution(fd, "harvest ceiling below processing cost");

    const int res = cfg.prob_resolution;
    const auto amps = detail::amplitude_grid(p, cfg);
    const auto coarse = FadingGrid::rayleigh(fd.omega_v, fd.omega_f, fd.omega_g, std::max(1, cfg.search_points));

    std::map<std::pair<std::vector<int>, std::vector<int>>, double> memo;
    auto score = [&](Candidate& c) {
        // canonical order so permutations share a memo entry
        std::vector<std::pair<int, int>> kv;
        for (std::size_t k = 0; k < c.amp.size(); ++k) kv.emplace_back(c.amp[k], c.q[k]);
        std::sort(kv.begin(), kv.end());
        for (std::size_t k = 0; k < kv.size(); ++k) std::tie(c.amp[k], c.q[k]) = kv[k];
        auto key = std::make_pair(c.amp, c.q);
        if (auto it = memo.find(key); it != memo.end()) return c.rate = it->second;
        if (!detail::candidate_feasible(c, amps, res, p.p_et))
            c.rate = -std::numeric_limits<double>::infinity();
        else
            c.rate = detail::candidate_rate(detail::candidate_distribution(c, amps, res), p, coarse, opt);
        memo.emplace(key, c.rate);
        return c.rate;
    };

    std::vector<Candidate> pool;
    // J = 1: exhaustive over amplitude and pair mass
    for (int i = 0; i < static_cast<int>(amps.size()); ++i)
        for (int q = 1; q <= res; ++q) {
            Candidate c{{i}, {q}};
            if (!detail::candidate_feasible(c, amps, res, p.p_et)) continue;
            score(c);
            pool.push_back(c);
        }
    auto by_rate = [](const Candidate& a, const Candidate& b) { return a.rate > b.rate; };
    std::sort(pool.begin(), pool.end(), by_rate);

    // J >= 2: local search grown from the best laws with one pair fewer
    std::vector<Candidate> frontier(pool.begin(), pool.begin() + std::min<std::size_t>(pool.size(), 4));
    for (int j = 2; j <= cfg.j_max; ++j) {
        std::vector<Candidate> grown;
        int budget = cfg.local_moves;
        for (const auto& base : frontier) {
            if (budget <= 0) break;
            // add a new pair by splitting mass off an existing one or from the zero mass
            for (int i = 0; i < static_cast<int>(amps.size()) && budget > 0; i += 2) {
                for (int take : {1, 2, 4}) {
                    Candidate c = base;
                    c.amp.push_back(i);
                    c.q.push_back(take);
                    int used = 0;
                    for (int qq : c.q) used += qq;
                    if (used > res) {
                        auto& big = *std::max_element(c.q.begin(), c.q.end() - 1);
                        big -= used - res;
                    }
                    if (!detail::candidate_feasible(c, amps, res, p.p_et)) continue;
                    --budget;
                    score(c);
                    grown.push_back(c);
                }
            }
        }
        std::sort(grown.begin(), grown.end(), by_rate);
        if (grown.empty()) break;
        // coordinate moves around the best grown laws
        Candidate cur = grown.front();
        bool improved = true;
        while (improved && budget > 0) {
            improved = false;
            for (std::size_t k = 0; k < cur.amp.size() && budget > 0; ++k) {
                for (int da : {-1, 1}) {
                    Candidate c = cur;
                    c.amp[k] += da;
                    if (c.amp[k] < 0 || c.amp[k] >= static_cast<int>(amps.size())) continue;
                    --budget;
                    if (score(c) > cur.rate) {
                        cur = c;
                        improved = true;
                    }
                }
                for (std::size_t m = 0; m < cur.q.size(); ++m) {
                    if (m == k) continue;
                    Candidate c = cur;
                    c.q[k] += 1;
                    c.q[m] -= 1;
                    --budget;
                    if (score(c) > cur.rate) {
                        cur = c;
                        improved = true;
                    }
                }
            }
        }
        grown.insert(grown.begin(), cur);
        std::sort(grown.begin(), grown.end(), by_rate);
        pool.insert(pool.end(), grown.begin(), grown.end());
        frontier.assign(grown.begin(), grown.begin() + std::min<std::size_t>(grown.size(), 4));
    }
    std::sort(pool.begin(), pool.end(), by_rate);

    // Reference on the search grid: the binary full-power law. Finalists that
    // do not beat it there are not worth a full-grid evaluation.
    Candidate reference{{static_cast<int>(std::find(amps.begin(), amps.end(), std::sqrt(p.p_et)) - amps.begin())}, {res}};
    const double reference_rate = score(reference);

    BoundSolution best;
    best.result.c_s_upper = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<std::vector<int>, std::vector<int>>> done;
    for (const auto& c : pool) {
        if (static_cast<int>(done.size()) >= cfg.finalists) break;
        if (!std::isfinite(c.rate) || c.rate <= reference_rate) break;
        const auto key = std::make_pair(c.amp, c.q);
        if (std::find(done.begin(), done.end(), key) != done.end()) continue;
        done.push_back(key);
        const auto et = detail::candidate_distribution(c, amps, res);
        PowerPolicy pol;
        const double r = detail::candidate_rate(et, p, fd, opt, &pol);
        if (r > best.result.c_s_upper) {
            best.result.c_s_upper = r;
            best.et = et;
            best.policy = pol;
        }
    }
    {
        // the plain binary law at full power is always a contender
        const auto et = EtInputDistribution::binary(std::sqrt(p.p_et));
        PowerPolicy pol;
        const double r = detail::candidate_rate(et, p, fd, opt, &pol);
        if (r > best.result.c_s_upper) {
            best.result.c_s_upper = r;
            best.et = et;
            best.policy = pol;
        }
    }
    for (const auto& s : seeds) {
        if (!s.result.feasible) continue;
        const double r = secrecy_rate(s.et, s.policy, p, fd, opt);
        if (r > best.result.c_s_upper) {
            best.result.c_s_upper = r;
            best.et = s.et;
            best.policy = s.policy;
        }
    }

    // v-dependent laws: the whole budget in the k strongest EHU-ET states,
    // each as a zero mass plus one symmetric pair of equal per-state power
    std::vector<std::size_t> order(fd.v_sq.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fd.v_sq[a].gain > fd.v_sq[b].gain; });
    for (int k : cfg.state_spreads) {
        if (k < 1 || k > static_cast<int>(order.size())) continue;
        double mass = 0.0;
        for (int i = 0; i < k; ++i) mass += fd.v_sq[order[static_cast<std::size_t>(i)]].prob;
        const double level = p.p_et / mass;
        auto law = [&](int q) {
            EtInputDistribution d;
            d.per_v.assign(fd.v_sq.size(), {{0.0, 1.0}});
            const double w = static_cast<double>(q) / res;
            const double a = std::sqrt(level / w);
            for (int i = 0; i < k; ++i) {
                auto& pts = d.per_v[order[static_cast<std::size_t>(i)]];
                pts.clear();
                if (q < res) pts.push_back({0.0, 1.0 - w});
                pts.push_back({a, 0.5 * w});
                pts.push_back({-a, 0.5 * w});
            }
            return d;
        };
        std::map<int, double> seen;
        auto eval = [&](int q) {
            if (q < 1 || q > res) return -std::numeric_limits<double>::infinity();
            if (auto it = seen.find(q); it != seen.end()) return it->second;
            const auto et = law(q);
            PowerPolicy pol;
            const double r = detail::candidate_rate(et, p, fd, opt, &pol);
            seen.emplace(q, r);
            if (r > best.result.c_s_upper) {
                best.result.c_s_upper = r;
                best.et = et;
                best.policy = pol;
            }
            return r;
        };
        int q_best = res;
        for (int q : {res / 4, res / 2, 3 * res / 4, res})
            if (eval(q) > eval(q_best)) q_best = q;
        for (int step : {-1, 1})
            while (eval(q_best + step) > eval(q_best)) q_best += step;
    }

    if (!std::isfinite(best.result.c_s_upper)) return infeasible_solution(fd, "no feasible candidate");
    best.result.c_s_upper = std::max(0.0, best.result.c_s_upper);
    return best;
}

}  // namespace fdsec
