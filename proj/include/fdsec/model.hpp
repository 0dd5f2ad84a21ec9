#pragma once

// Physical parameters, unit conversions, path loss and the discretized
// Rayleigh fading grids shared by every solver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fdsec/errors.hpp"

namespace fdsec {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// Average power gain (c / (4 pi fc))^2 * d^-gamma of a link of length d.
inline double path_loss(double fc, double d, double gamma) {
    if (!(fc > 0.0) || !(d > 0.0) || !(gamma > 0.0))
        throw DomainError("path_loss: carrier frequency, distance and exponent must be positive");
    const double k = kSpeedOfLight / (4.0 * std::numbers::pi * fc);
    return k * k * std::pow(d, -gamma);
}

struct SystemParams {
    double eta = 0.8;           // harvesting efficiency
    double sigma1_sq = 1e-12;   // W, noise at the EHU
    double sigma2_sq = 1e-12;   // W, noise at the ET
    double sigma3_sq = 1e-12;   // W, noise at EVE
    double alpha1 = 1e-4;       // variance of the zero-mean EHU self-interference gain
    double qbar1 = 1.0;         // mean EHU self-interference amplitude gain
    double alpha2 = 1e-10;      // residual ET self-interference variance
    double p_et = 1e-3;         // W
    double p_p = 1e-15;         // W
    double fc = 2.4e9;          // Hz
    double gamma = 3.0;
    double d_ehu_et = 10.0;     // m
    double d_ehu_eve = 12.0;    // m
    double d_et_eve = 12.0;     // m
    double bandwidth_hz = 1e5;  // only used to report bit/s

    /// q̄₁² + α₁, the mean power gain of the EHU self-interference path.
    double recycle_gain() const { return qbar1 * qbar1 + alpha1; }
    /// Fraction of the EHU transmit power that is harvested back.
    double recycle_fraction() const { return eta * recycle_gain(); }

    double omega_v() const { return path_loss(fc, d_ehu_et, gamma); }
    double omega_f() const { return path_loss(fc, d_ehu_eve, gamma); }
    double omega_g() const { return path_loss(fc, d_et_eve, gamma); }

    void validate() const {
        if (!(eta > 0.0 && eta < 1.0)) throw DomainError("eta must lie in (0, 1)");
        if (!(sigma1_sq > 0.0 && sigma2_sq > 0.0 && sigma3_sq > 0.0))
            throw DomainError("noise variances must be positive");
        if (!(alpha1 >= 0.0 && alpha2 >= 0.0)) throw DomainError("self-interference variances must be non-negative");
        if (!(p_et >= 0.0 && p_p >= 0.0)) throw DomainError("powers must be non-negative");
        if (!(fc > 0.0 && gamma > 0.0)) throw DomainError("fc and gamma must be positive");
        if (!(d_ehu_et > 0.0 && d_ehu_eve > 0.0 && d_et_eve > 0.0)) throw DomainError("distances must be positive");
        if (!(recycle_fraction() < 1.0))
            throw DomainError("eta * (qbar1^2 + alpha1) must be < 1");
    }
};

struct GridPoint {
    double gain;  // squared magnitude
    double prob;
};

using GainGrid = std::vector<GridPoint>;

inline double grid_mean(std::span<const GridPoint> g) {
    double m = 0.0;
    for (const auto& p : g) m += p.gain * p.prob;
    return m;
}

inline double grid_mass(std::span<const GridPoint> g) {
    double m = 0.0;
    for (const auto& p : g) m += p.prob;
    return m;
}

/// Equal-probability quantile bins of an exponential law with mean `omega`,
/// each represented by its conditional mean. The grid mean equals omega.
inline GainGrid discretize_exponential(double omega, int n_points) {
    if (!(omega > 0.0)) throw DomainError("discretize_exponential: omega must be positive");
    if (n_points < 1) throw DomainError("discretize_exponential: need at least one point");
    const double n = n_points;
    GainGrid grid(static_cast<std::size_t>(n_points));
    // Bin i spans quantiles [i/n, (i+1)/n]; lower edge a_i = -omega ln(1 - i/n).
    // Conditional mean: omega + a_i (n - i) - a_{i+1} (n - i - 1).
    auto edge = [&](int i) { return -omega * std::log1p(-static_cast<double>(i) / n); };
    for (int i = 0; i < n_points; ++i) {
        const double a = edge(i);
        double mean = omega + a;
        if (i + 1 < n_points) mean = omega + a * (n - i) - edge(i + 1) * (n - i - 1);
        grid[static_cast<std::size_t>(i)] = {mean, 1.0 / n};
    }
    return grid;
}

struct FadingGrid {
    GainGrid v_sq;  // EHU-ET
    GainGrid f_sq;  // EHU-EVE
    GainGrid g_sq;  // ET-EVE
    double omega_v = 0.0;
    double omega_f = 0.0;
    double omega_g = 0.0;

    static FadingGrid rayleigh(double omega_v, double omega_f, double omega_g, int n_points) {
        return {discretize_exponential(omega_v, n_points), discretize_exponential(omega_f, n_points),
                discretize_exponential(omega_g, n_points), omega_v, omega_f, omega_g};
    }

    static FadingGrid from_params(const SystemParams& p, int n_points) {
        return rayleigh(p.omega_v(), p.omega_f(), p.omega_g(), n_points);
    }
};

/// Maps 64 random bits to a double in [0, 1) the same way on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Standard normal deviate via Box-Muller on `unit_uniform`, so traces do not
/// depend on the standard library's distribution implementations.
class NormalSource {
public:
    double operator()(std::mt19937_64& rng) {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = unit_uniform(rng);
        while (u1 <= 0.0) u1 = unit_uniform(rng);
        const double u2 = unit_uniform(rng);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct FadingDraw {
    std::size_t v_index;
    double v_sq;
    double f_sq;
    double g_sq;
};

/// Block-fading sampler: one independent draw per channel per slot.
class FadingSampler {
public:
    FadingSampler(const FadingGrid& grid, std::uint64_t seed) : grid_(grid), rng_(seed) {
        cdf_v_ = cumulative(grid_.v_sq);
        cdf_f_ = cumulative(grid_.f_sq);
        cdf_g_ = cumulative(grid_.g_sq);
    }

    FadingDraw next() {
        const std::size_t iv = pick(cdf_v_);
        const std::size_t jf = pick(cdf_f_);
        const std::size_t kg = pick(cdf_g_);
        return {iv, grid_.v_sq[iv].gain, grid_.f_sq[jf].gain, grid_.g_sq[kg].gain};
    }

    std::mt19937_64& engine() { return rng_; }

private:
    static std::vector<double> cumulative(const GainGrid& g) {
        std::vector<double> c(g.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) c[i] = (acc += g[i].prob);
        return c;
    }

    std::size_t pick(const std::vector<double>& cdf) {
        const double u = unit_uniform(rng_) * cdf.back();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    }

    FadingGrid grid_;
    std::mt19937_64 rng_;
    std::vector<double> cdf_v_, cdf_f_, cdf_g_;
};

}  // namespace fdsec
