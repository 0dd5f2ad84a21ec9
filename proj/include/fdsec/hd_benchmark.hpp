#pragma once

// Half-duplex benchmark: the EHU harvests for a fraction 1 − t of the block
// while the ET radiates at P_ET, then transmits for the remaining t while the
// ET is silent.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "fdsec/bounds.hpp"
#include "fdsec/errors.hpp"
#include "fdsec/model.hpp"
#include "fdsec/numerics.hpp"
#include "fdsec/power_policy.hpp"

namespace fdsec {

namespace detail {

// Σ_f p(f) ln(1 + f² P / σ3²)
inline double eve_log_sum(const GainGrid& f, double sigma3_sq, double power) {
    double s = 0.0;
    for (const auto& pt : f) s += pt.prob * std::log1p(pt.gain * power / sigma3_sq);
    return s;
}

inline double hd_objective(double a, double power, double lambda2, const GainGrid& f, double sigma3_sq) {
    return std::log1p(a * power) - eve_log_sum(f, sigma3_sq, power) - lambda2 * power;
}

}  // namespace detail

/// v²/σ1² − (1 + v²P/σ1²)(Σ_f f²p(f)/(f²P+σ3²) + λ2), divided by the sum of
/// the magnitudes of its terms.
inline double hd_power_residual(double power, double v_sq, double lambda2, const SystemParams& p, const GainGrid& f) {
    const double a = v_sq / p.sigma1_sq;
    const double growth = 1.0 + a * power;
    const double s = detail::eve_sum(f, p.sigma3_sq, power);
    return (a - growth * s - growth * lambda2) / (a + growth * s + growth * lambda2);
}

/// EHU transmit power in the half-duplex phase for one EHU-ET fading state.
/// The stationarity condition can have several roots when the eavesdropper
/// term bends the objective; the root with the largest per-state Lagrangian
/// wins, and zero when no root beats staying silent.
inline double hd_power(double v_sq, double lambda2, const SystemParams& p, const GainGrid& f) {
    if (!(lambda2 > 0.0)) throw DomainError("hd_power: lambda2 must be positive");
    const double a = v_sq / p.sigma1_sq;
    if (!(a > 0.0)) return 0.0;
    auto h = [&](double power) { return a / (1.0 + a * power) - detail::eve_sum(f, p.sigma3_sq, power) - lambda2; };
    // beyond 1/λ2 the first term alone is below λ2
    const double top = 1.0 / lambda2;
    constexpr int kScan = 96;
    const double bottom = top * 1e-14;
    double best = 0.0;
    double best_value = 0.0;
    double lo = 0.0;
    double flo = h(0.0);
    for (int i = 0; i <= kScan; ++i) {
        const double hi = bottom * std::pow(top / bottom, static_cast<double>(i) / kScan);
        const double fhi = h(hi);
        if (flo > 0.0 && fhi <= 0.0) {
            const double root = refine_root(h, lo, hi, flo, fhi, 52);
            const double value = detail::hd_objective(a, root, lambda2, f, p.sigma3_sq);
            if (value > best_value) {
                best = root;
                best_value = value;
            }
        }
        lo = hi;
        flo = fhi;
    }
    return best;
}

struct HdResult {
    double rate = 0.0;    // nats per channel use
    double t_star = 0.0;  // fraction of the block spent transmitting
    double lambda2 = 0.0;
    std::vector<double> power;  // per EHU-ET fading state, at t_star
};

namespace detail {

struct HdPoint {
    double rate = 0.0;
    double lambda2 = 0.0;
    std::vector<double> power;
};

inline HdPoint hd_at(double t, const SystemParams& p, const FadingGrid& fd, const FormulaOptions& opt) {
    HdPoint out;
    if (!(t > 0.0 && t < 1.0)) return out;
    const double budget = (1.0 - t) * p.eta * p.p_et * fd.omega_v / t - p.p_p;
    if (!(budget > 0.0)) return out;

    auto powers = [&](double lambda2) {
        std::vector<double> pw(fd.v_sq.size());
        for (std::size_t i = 0; i < pw.size(); ++i) pw[i] = hd_power(fd.v_sq[i].gain, lambda2, p, fd.f_sq);
        return pw;
    };
    auto residual = [&](double lambda2) {
        const auto pw = powers(lambda2);
        double mean = 0.0;
        for (std::size_t i = 0; i < pw.size(); ++i) mean += pw[i] * fd.v_sq[i].prob;
        return std::make_pair(mean - budget, std::max(mean, budget));
    };
    double a_max = 0.0;
    for (const auto& v : fd.v_sq) a_max = std::max(a_max, v.gain / p.sigma1_sq);
    if (!(a_max > 0.0)) return out;
    // The chosen power can jump between roots as λ2 moves; then the budget is
    // met from below, which keeps the rate achievable.
    const auto s = solve_multiplier(residual, a_max, 1e-9, "hd lambda2", true);
    out.lambda2 = s.lambda;
    out.power = powers(s.lambda);

    const double leak = opt.printed ? 1.0 : 0.5;
    double bracket = 0.0;
    for (std::size_t i = 0; i < out.power.size(); ++i) {
        const double pw = out.power[i];
        const double a = fd.v_sq[i].gain / p.sigma1_sq;
        bracket += fd.v_sq[i].prob * (0.5 * std::log1p(a * pw) - leak * eve_log_sum(fd.f_sq, p.sigma3_sq, pw));
    }
    out.rate = std::max(0.0, t * bracket);
    return out;
}

}  // namespace detail

/// Best time split on a uniform grid of `t_points` interior points, refined
/// by a Brent search in ln t between the neighbours of the best grid point.
inline HdResult hd_secrecy_rate(const SystemParams& p, const FadingGrid& fd, const FormulaOptions& opt = {},
                                int t_points = 64) {
    p.validate();
    if (t_points < 1) throw DomainError("hd_secrecy_rate: need at least one t point");
    if (!(p.eta * p.p_et * fd.omega_v > 0.0))
        throw InfeasibleEnergyError("half-duplex: no energy reaches the EHU");

    std::vector<double> ts, rates;
    for (int i = 1; i <= t_points; ++i) {
        const double t = static_cast<double>(i) / (t_points + 1);
        ts.push_back(t);
        rates.push_back(detail::hd_at(t, p, fd, opt).rate);
    }
    const auto k = static_cast<std::size_t>(std::max_element(rates.begin(), rates.end()) - rates.begin());
    HdResult best;
    best.t_star = ts[k];
    best.rate = rates[k];
    if (best.rate > 0.0) {
        // searched in ln t: the optimum can sit well below the first grid point
        const double lo = std::log(k == 0 ? 1e-3 * ts[0] : ts[k - 1]);
        const double hi = std::log(k + 1 == ts.size() ? 0.5 * (1.0 + ts.back()) : ts[k + 1]);
        const auto [u_opt, neg] = boost::math::tools::brent_find_minima(
            [&](double u) { return -detail::hd_at(std::exp(u), p, fd, opt).rate; }, lo, hi, 30);
        if (-neg > best.rate) {
            best.rate = -neg;
            best.t_star = std::exp(u_opt);
        }
    }
    const auto at = detail::hd_at(best.t_star, p, fd, opt);
    best.lambda2 = at.lambda2;
    best.power = at.power;
    best.rate = at.rate;
    return best;
}

}  // namespace fdsec
