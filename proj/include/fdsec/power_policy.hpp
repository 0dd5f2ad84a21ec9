#pragma once

// EHU power allocation: the per-(x2, v) stationarity root and the
// calibration of the energy-causality multiplier lambda2.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fdsec/errors.hpp"
#include "fdsec/et_distribution.hpp"
#include "fdsec/model.hpp"
#include "fdsec/numerics.hpp"

namespace fdsec {

struct PowerPolicy {
    std::vector<std::vector<double>> p_ehu;  // [v index][mass point index]
    double lambda1 = 0.0;
    double lambda2 = 0.0;

    double at(std::size_t iv, std::size_t j) const { return p_ehu.at(iv).at(j); }
};

namespace detail {

// Σ_f f² p(f) / (f² P + σ3²)
inline double eve_sum(const GainGrid& f, double sigma3_sq, double power) {
    double s = 0.0;
    for (const auto& pt : f) s += pt.gain * pt.prob / (pt.gain * power + sigma3_sq);
    return s;
}

struct EhuTerms {
    double a;  // v² / (σ2² + x2² α2)
    double l;  // λ2 (1 − η(q̄1² + α1))
};

inline EhuTerms ehu_terms(double x2_sq, double v_sq, double lambda2, const SystemParams& p) {
    return {v_sq / (p.sigma2_sq + x2_sq * p.alpha2), lambda2 * (1.0 - p.recycle_fraction())};
}

}  // namespace detail

/// g(P) of the EHU stationarity condition, divided by the sum of the
/// magnitudes of its three terms so the value is dimensionless.
inline double ehu_power_residual(double power, double x2_sq, double v_sq, double lambda2, const SystemParams& p,
                                 const GainGrid& f) {
    const auto t = detail::ehu_terms(x2_sq, v_sq, lambda2, p);
    const double growth = 1.0 + t.a * power;
    const double s = detail::eve_sum(f, p.sigma3_sq, power);
    const double g = t.a + growth * s - growth * t.l;
    return g / (t.a + growth * s + growth * t.l);
}

/// Nonnegative root P of v²/(σ2²+x2²α2) + (1 + v²P/(σ2²+x2²α2)) Σ_f f²p(f)/(f²P+σ3²)
/// = (1 + v²P/(σ2²+x2²α2)) λ2 (1 − η(q̄1²+α1)); zero when no positive root exists.
inline double solve_ehu_power(double x2_sq, double v_sq, double lambda2, const SystemParams& p, const GainGrid& f) {
    if (!(lambda2 > 0.0)) throw DomainError("solve_ehu_power: lambda2 must be positive");
    const auto t = detail::ehu_terms(x2_sq, v_sq, lambda2, p);
    // Dividing g by (1 + aP) leaves a strictly decreasing function.
    auto h = [&](double power) { return t.a / (1.0 + t.a * power) + detail::eve_sum(f, p.sigma3_sq, power) - t.l; };
    const double h0 = h(0.0);
    if (h0 <= 0.0 || t.a == 0.0) return 0.0;

    double hi = 10.0 * p.eta * p.p_et * p.omega_v() / (1.0 - p.recycle_fraction());
    if (!(hi > 0.0)) hi = 2.0 / t.l;  // h(2/l) < 0 always
    double lo = 0.0;
    double flo = h0;
    double fhi = h(hi);
    for (int k = 0; fhi > 0.0; ++k) {
        if (k >= 60) {
            hi = 2.0 / t.l;
            fhi = h(hi);
            break;
        }
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = h(hi);
    }
    return refine_root(h, lo, hi, flo, fhi, 52);
}

/// Power surface P_EHU(x2, v) for a fixed λ2.
inline PowerPolicy policy_for_lambda2(const EtInputDistribution& et, double lambda2, const SystemParams& p,
                                      const FadingGrid& fading) {
    PowerPolicy pol;
    pol.lambda2 = lambda2;
    pol.p_ehu.resize(fading.v_sq.size());
    for (std::size_t iv = 0; iv < fading.v_sq.size(); ++iv) {
        const auto& pts = et.at(iv);
        auto& row = pol.p_ehu[iv];
        row.resize(pts.size());
        std::map<double, double> cache;  // x2² -> power; ±x share one root
        for (std::size_t j = 0; j < pts.size(); ++j) {
            const double x2_sq = pts[j].x * pts[j].x;
            auto it = cache.find(x2_sq);
            if (it == cache.end())
                it = cache.emplace(x2_sq, solve_ehu_power(x2_sq, fading.v_sq[iv].gain, lambda2, p, fading.f_sq)).first;
            row[j] = it->second;
        }
    }
    return pol;
}

struct EnergyBalance {
    double mean_power = 0.0;  // Σ P_EHU p(x2|v) p(v)
    double spend = 0.0;       // mean_power + P_p
    double harvest = 0.0;     // η Σ v² x2² p p + η(q̄1²+α1) mean_power
    double residual() const { return spend - harvest; }
    double relative_residual() const {
        const double scale = std::max(spend, harvest);
        return scale > 0.0 ? residual() / scale : 0.0;
    }
};

inline EnergyBalance energy_balance(const PowerPolicy& pol, const EtInputDistribution& et, const SystemParams& p,
                                    const FadingGrid& fading) {
    EnergyBalance b;
    double received = 0.0;
    for (std::size_t iv = 0; iv < fading.v_sq.size(); ++iv) {
        const auto& pts = et.at(iv);
        const double pv = fading.v_sq[iv].prob;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            b.mean_power += pol.at(iv, j) * pts[j].p * pv;
            received += fading.v_sq[iv].gain * pts[j].x * pts[j].x * pts[j].p * pv;
        }
    }
    b.spend = b.mean_power + p.p_p;
    b.harvest = p.eta * received + p.recycle_fraction() * b.mean_power;
    return b;
}

/// LHS − RHS of the energy-causality constraint, in watts.
inline double energy_balance_residual(const PowerPolicy& pol, const EtInputDistribution& et, const SystemParams& p,
                                      const FadingGrid& fading) {
    return energy_balance(pol, et, p, fading).residual();
}

/// Largest λ2 at which some fading state still transmits; above it every power is zero.
inline double lambda2_ceiling(const EtInputDistribution& et, const SystemParams& p, const FadingGrid& fading) {
    const double s0 = detail::eve_sum(fading.f_sq, p.sigma3_sq, 0.0);
    double hi = 0.0;
    for (std::size_t iv = 0; iv < fading.v_sq.size(); ++iv)
        for (const auto& m : et.at(iv)) {
            const double a = fading.v_sq[iv].gain / (p.sigma2_sq + m.x * m.x * p.alpha2);
            hi = std::max(hi, (a + s0) / (1.0 - p.recycle_fraction()));
        }
    return hi;
}

struct MultiplierSearch {
    double lambda = 0.0;
    double relative_residual = 0.0;
    int evaluations = 0;
};

/// Finds λ > 0 with r(λ) = 0 for a residual that is nonincreasing in λ.
/// `r` returns (absolute residual, scale). Monotonicity is checked on every
/// evaluated point; a violation throws. With `accept_jump` a residual that
/// jumps over zero yields the side where it is nonpositive instead of an error.
inline MultiplierSearch solve_multiplier(const std::function<std::pair<double, double>(double)>& r, double lambda_hi,
                                         double rel_tol = 1e-9, const char* what = "lambda2",
                                         bool accept_jump = false) {
    std::vector<std::pair<double, double>> seen;  // (ln λ, relative residual)
    auto eval = [&](double u) {
        const auto [res, scale] = r(std::exp(u));
        const double rel = scale > 0.0 ? res / scale : res;
        seen.emplace_back(u, rel);
        return rel;
    };
    double uhi = std::log(lambda_hi) + 1e-9;
    double fhi = eval(uhi);
    for (int k = 0; fhi > 0.0; ++k) {
        if (k >= 200) throw ConvergenceError(std::string(what) + ": residual stays positive at large multiplier", fhi);
        uhi += 1.0;
        fhi = eval(uhi);
    }
    if (fhi == 0.0) return {std::exp(uhi), 0.0, static_cast<int>(seen.size())};
    double ulo = uhi - 1.0;
    double flo = eval(ulo);
    for (int k = 0; flo < 0.0; ++k) {
        if (k >= 400) throw ConvergenceError(std::string(what) + ": residual stays negative at small multiplier", flo);
        uhi = ulo;
        fhi = flo;
        ulo -= 2.0;
        flo = eval(ulo);
    }
    std::uintmax_t iters = 200;
    auto tol = [&](double a, double b) {
        return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a));
    };
    auto [a, b] = boost::math::tools::toms748_solve(eval, ulo, uhi, flo, fhi, tol, iters);
    double u = a;
    double fu = eval(a);
    const double fb = eval(b);
    if (std::abs(fb) < std::abs(fu)) {
        u = b;
        fu = fb;
    }

    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 1; i < seen.size(); ++i)
        if (seen[i].second > seen[i - 1].second + 1e-12)
            throw MonotonicityError(std::string(what) + ": residual is not monotone in the multiplier");
    if (!(std::abs(fu) <= rel_tol) && accept_jump) {
        u = fb <= 0.0 ? b : a;
        fu = fb <= 0.0 ? fb : fu;
        return {std::exp(u), fu, static_cast<int>(seen.size())};
    }
    if (!(std::abs(fu) <= rel_tol))
        throw ConvergenceError(std::string(what) + ": calibration did not reach tolerance", fu);
    return {std::exp(u), fu, static_cast<int>(seen.size())};
}

/// λ2 such that the energy-causality constraint holds with equality, and the
/// resulting power surface.
inline PowerPolicy calibrate_lambda2(const EtInputDistribution& et, const SystemParams& p, const FadingGrid& fading) {
    const double received = p.eta * et.average_received_power(fading.v_sq);
    if (!(received > p.p_p))
        throw InfeasibleEnergyError("harvested ET power does not exceed the processing cost");
    auto r = [&](double lambda2) {
        const auto b = energy_balance(policy_for_lambda2(et, lambda2, p, fading), et, p, fading);
        return std::make_pair(b.residual(), std::max(b.spend, b.harvest));
    };
    const auto s = solve_multiplier(r, lambda2_ceiling(et, p, fading), 1e-6);
    auto pol = policy_for_lambda2(et, s.lambda, p, fading);
    // Near the switch-on threshold the powers move by ~1e8 relative per unit
    // of ln λ2, below double resolution of λ2; close the balance by scaling
    // the powers instead. The factor is within 1e-6 of one.
    const auto b = energy_balance(pol, et, p, fading);
    const double net = (1.0 - p.recycle_fraction()) * b.mean_power;
    if (net > 0.0) {
        const double k = (received - p.p_p) / net;
        if (std::abs(k - 1.0) > 1e-3) throw ConvergenceError("lambda2: power rescale too large", k - 1.0);
        for (auto& row : pol.p_ehu)
            for (auto& x : row) x *= k;
    }
    return pol;
}

/// Expected energy harvested per channel use, η Σ (v² x2² + (q̄1²+α1) P_EHU) p p.
inline double expected_harvest(const PowerPolicy& pol, const EtInputDistribution& et, const SystemParams& p,
                               const FadingGrid& fading) {
    return energy_balance(pol, et, p, fading).harvest;
}

}  // namespace fdsec
