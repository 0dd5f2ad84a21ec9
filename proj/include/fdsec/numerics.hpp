#pragma once

// Gaussian-mixture entropies, the binary-mixture deficit function and the
// bracketing root finders used by the solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "fdsec/errors.hpp"

namespace fdsec {

inline constexpr double kLn2 = std::numbers::ln2;
inline const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

inline double nats_to_bits(double nats) { return nats / kLn2; }

inline double gaussian_entropy(double var) {
    if (!(var > 0.0)) throw DomainError("gaussian_entropy: variance must be positive");
    return kHalfLog2PiE + 0.5 * std::log(var);
}

/// Density (1/sqrt(2 pi s_j^2)) sum_j p_j exp(-(y - mu_j)^2 / 2 s_j^2).
/// When `component_sigma_sq` is empty every component uses `sigma_sq`.
struct MixtureSpec {
    std::vector<double> means;
    std::vector<double> probs;
    double sigma_sq = 1.0;
    std::vector<double> component_sigma_sq;

    double variance_of(std::size_t j) const { return component_sigma_sq.empty() ? sigma_sq : component_sigma_sq[j]; }

    void validate() const {
        if (means.empty() || means.size() != probs.size())
            throw DomainError("MixtureSpec: means and probs must be non-empty and of equal length");
        if (!component_sigma_sq.empty() && component_sigma_sq.size() != means.size())
            throw DomainError("MixtureSpec: component variances must match the number of means");
        double total = 0.0;
        for (std::size_t j = 0; j < means.size(); ++j) {
            if (!std::isfinite(means[j])) throw DomainError("MixtureSpec: non-finite mean");
            if (!(probs[j] >= 0.0)) throw DomainError("MixtureSpec: negative probability");
            if (!(variance_of(j) > 0.0) || !std::isfinite(variance_of(j)))
                throw DomainError("MixtureSpec: variances must be positive");
            total += probs[j];
        }
        if (std::abs(total - 1.0) > 1e-12 * std::max<double>(1.0, static_cast<double>(means.size())))
            throw DomainError("MixtureSpec: probabilities must sum to 1");
    }
};

namespace detail {

struct Component {
    double mu;
    double var;
    double p;
};

inline constexpr double kWindow = 10.0;  // truncation half-width in standard deviations

// Gauss-Kronrod bisection driven by an absolute error target; Boost's own
// recursion is relative, which stalls on tail intervals.
template <class F>
double adaptive_gk(F& f, double a, double b, double tol, int depth, double& err_acc) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    double err = 0.0;
    const double r = GK::integrate(f, a, b, 0, 0.0, &err);
    if (err <= tol || depth == 0) {
        err_acc += err;
        return r;
    }
    const double m = 0.5 * (a + b);
    return adaptive_gk(f, a, m, 0.5 * tol, depth - 1, err_acc) + adaptive_gk(f, m, b, 0.5 * tol, depth - 1, err_acc);
}

// Entropy of one overlapping cluster (masses already renormalized to 1).
inline double cluster_entropy(const std::vector<Component>& comps, double abs_tol) {
    const std::size_t n = comps.size();
    double max_var = 0.0;
    double centre = 0.0;
    for (const auto& c : comps) {
        max_var = std::max(max_var, c.var);
        centre += c.p * c.mu;
    }
    const double s = std::sqrt(max_var);

    // Work in u = (y - centre) / s so the integrand is O(1); h(y) = h(u) + ln s.
    std::vector<double> mu(n), inv2var(n), logw(n), sd(n);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t j = 0; j < n; ++j) {
        const double v = comps[j].var / max_var;
        sd[j] = std::sqrt(v);
        mu[j] = (comps[j].mu - centre) / s;
        inv2var[j] = 0.5 / v;
        logw[j] = std::log(comps[j].p) - 0.5 * std::log(2.0 * std::numbers::pi * v);
        lo = std::min(lo, mu[j] - kWindow * sd[j]);
        hi = std::max(hi, mu[j] + kWindow * sd[j]);
    }

    // A mixture symmetric about its centre only needs the right half-line.
    bool mirrored = true;
    {
        std::vector<std::size_t> order(n);
        for (std::size_t j = 0; j < n; ++j) order[j] = j;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return mu[a] < mu[b]; });
        for (std::size_t i = 0; i < n && mirrored; ++i) {
            const auto a = order[i];
            const auto b = order[n - 1 - i];
            mirrored = std::abs(mu[a] + mu[b]) <= 1e-13 * (1.0 + std::abs(mu[a])) && comps[a].var == comps[b].var &&
                       comps[a].p == comps[b].p;
        }
    }
    if (mirrored) lo = 0.0;

    std::vector<double> breaks{lo, hi};
    for (std::size_t j = 0; j < n; ++j)
        for (double k : {-kWindow, -4.0, -1.5, 0.0, 1.5, 4.0, kWindow}) {
            const double b = mu[j] + k * sd[j];
            if (b > lo && b < hi) breaks.push_back(b);
        }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(), [](double a, double b) { return b - a < 1e-3; }),
                 breaks.end());
    breaks.back() = hi;

    std::vector<double> terms(n);
    auto integrand = [&](double u) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            const double d = u - mu[j];
            terms[j] = logw[j] - d * d * inv2var[j];
            m = std::max(m, terms[j]);
        }
        if (!std::isfinite(m)) return 0.0;
        double acc = 0.0;
        for (double t : terms) acc += std::exp(t - m);
        const double logp = m + std::log(acc);
        return -std::exp(logp) * logp;
    };

    double h = 0.0;
    double err_total = 0.0;
    const double piece_tol = 0.01 * abs_tol / static_cast<double>(breaks.size());
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        h += adaptive_gk(integrand, breaks[i], breaks[i + 1], piece_tol, 12, err_total);
    if (mirrored) {
        h *= 2.0;
        err_total *= 2.0;
    }
    if (!(err_total <= abs_tol) || !std::isfinite(h))
        throw QuadratureError("mixture_entropy: quadrature did not reach the requested tolerance", err_total);
    return h + std::log(s);
}

}  // namespace detail

/// Differential entropy in nats of a Gaussian mixture.
///
/// Components whose +-10 sigma windows do not overlap are combined exactly as
/// sum_c P_c h_c + H(P); only overlapping clusters are integrated numerically.
inline double mixture_entropy(const MixtureSpec& spec, double abs_tol = 1e-9) {
    spec.validate();
    std::vector<detail::Component> comps;
    comps.reserve(spec.means.size());
    for (std::size_t j = 0; j < spec.means.size(); ++j)
        if (spec.probs[j] > 0.0) comps.push_back({spec.means[j], spec.variance_of(j), spec.probs[j]});

    std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
        return a.mu != b.mu ? a.mu < b.mu : a.var < b.var;
    });
    std::vector<detail::Component> merged;
    for (const auto& c : comps) {
        if (!merged.empty() && merged.back().mu == c.mu && merged.back().var == c.var)
            merged.back().p += c.p;
        else
            merged.push_back(c);
    }
    if (merged.size() == 1) return gaussian_entropy(merged[0].var);

    std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
        return a.mu - detail::kWindow * std::sqrt(a.var) < b.mu - detail::kWindow * std::sqrt(b.var);
    });

    double h = 0.0;
    std::vector<detail::Component> cluster;
    double edge = -std::numeric_limits<double>::infinity();
    auto flush = [&] {
        if (cluster.empty()) return;
        double pc = 0.0;
        for (const auto& c : cluster) pc += c.p;
        double hc;
        if (cluster.size() == 1) {
            hc = gaussian_entropy(cluster[0].var);
        } else {
            for (auto& c : cluster) c.p /= pc;
            hc = detail::cluster_entropy(cluster, abs_tol);
        }
        h += pc * hc - pc * std::log(pc);
        cluster.clear();
    };
    for (const auto& c : merged) {
        const double sd = std::sqrt(c.var);
        if (!cluster.empty() && c.mu - detail::kWindow * sd > edge) flush();
        cluster.push_back(c);
        edge = std::max(edge, c.mu + detail::kWindow * sd);
    }
    flush();
    return h;
}

/// alpha² − 𝓘(alpha) = h(½N(alpha,1) + ½N(−alpha,1)) − ½ln(2πe), computed
/// without forming alpha². Always within [0, ln 2].
inline double cal_I_excess(double alpha) {
    if (!(alpha >= 0.0)) throw DomainError("cal_I_excess: argument must be non-negative");
    return std::clamp(mixture_entropy({{-alpha, alpha}, {0.5, 0.5}, 1.0, {}}) - kHalfLog2PiE, 0.0, kLn2);
}

/// 𝓘(alpha) = ½ln(2πe) + alpha² − h(½N(alpha,1) + ½N(−alpha,1)).
inline double cal_I(double alpha) {
    if (!(alpha >= 0.0)) throw DomainError("cal_I: argument must be non-negative");
    const double excess = cal_I_excess(alpha);
    const double a2 = alpha * alpha;
    double v = a2 - excess;
    // callers form a² − 𝓘; keep that inside [0, ln 2] after rounding too
    while (a2 - v > kLn2) v = std::nextafter(v, a2);
    return v;
}

enum class CalIForm {
    Companion,  // (2/sqrt(2 pi a^2)) e^{-a^2/2} ∫ e^{-y^2/2a^2} cosh y ln cosh y dy
    Printed,    // (2/sqrt(2 pi x)) e^{-x^2/2} ∫ e^{-y^2/2x} cosh y ln cosh y dy, taken literally
};

namespace detail {

inline double log_cosh(double y) {
    const double a = std::abs(y);
    return a + std::log1p(std::exp(-2.0 * a)) - kLn2;
}

// (1/sqrt(2 pi)) ∫_0^∞ [e^{-(t-c)^2/2} + e^{-(t+c)^2/2}] ln cosh(c t) dt
inline double folded_log_cosh_integral(double c) {
    auto f = [c](double t) {
        const double w = std::exp(-0.5 * (t - c) * (t - c)) + std::exp(-0.5 * (t + c) * (t + c));
        return w * log_cosh(c * t);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double top = c + 12.0;
    double acc = 0.0;
    const double pieces[] = {0.0, std::max(0.0, c - 3.0), c, c + 3.0, top};
    for (int i = 0; i < 4; ++i)
        if (pieces[i + 1] > pieces[i]) acc += GK::integrate(f, pieces[i], pieces[i + 1], 15, 1e-13);
    return acc / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace detail

/// Direct integral representations of 𝓘, used to cross-check the entropy identity.
inline double cal_I_integral(double x, CalIForm form = CalIForm::Companion) {
    if (!(x >= 0.0)) throw DomainError("cal_I_integral: argument must be non-negative");
    if (x == 0.0) return 0.0;
    if (form == CalIForm::Companion) return detail::folded_log_cosh_integral(x);
    // substituting y = sqrt(x) t turns the printed form into the folded integral at sqrt(x)
    return std::exp(0.5 * (x - x * x)) * detail::folded_log_cosh_integral(std::sqrt(x));
}

namespace detail {

class ExcessTable {
public:
    static constexpr double kStep = 0.005;
    static constexpr double kTop = 10.0;

    static const ExcessTable& instance() {
        static const ExcessTable t;
        return t;
    }

    double operator()(double a) const { return spline_(a); }

private:
    ExcessTable() : values_(build()), spline_(values_.data(), values_.size(), 0.0, kStep, 0.0, 0.0) {}

    static std::vector<double> build() {
        const int n = static_cast<int>(std::lround(kTop / kStep));
        std::vector<double> d(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) {
            const double a = i * kStep;
            d[static_cast<std::size_t>(i)] = cal_I_excess(a);
        }
        return d;
    }

    std::vector<double> values_;
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
};

}  // namespace detail

/// D(a) = h(½N(a,1) + ½N(−a,1)) − ½ln(2πe) = a² − 𝓘(a), tabulated.
/// Lies in [0, ln 2]; equals ln 2 once the two components stop overlapping.
inline double binary_mixture_excess(double a) {
    a = std::abs(a);
    if (a >= detail::ExcessTable::kTop) return kLn2;
    return std::clamp(detail::ExcessTable::instance()(a), 0.0, kLn2);
}

/// Entropy of ½N(m1, var) + ½N(m2, var) through the tabulated excess.
inline double binary_mixture_entropy(double m1, double m2, double var) {
    return gaussian_entropy(var) + binary_mixture_excess(0.5 * (m1 - m2) / std::sqrt(var));
}

struct BracketOptions {
    bool expand_upward = false;
    int max_expansions = 60;
    int max_iterations = 200;
};

/// Bisection for f(x) = 0 on [lo, hi]. Stops when |f(x)| <= tol or the
/// bracket is narrower than tol * max(1, |x|).
inline double bisect_root(const std::function<double(double)>& f, double lo, double hi, double tol,
                          BracketOptions opt = {}) {
    if (!(hi > lo)) throw DomainError("bisect_root: need lo < hi");
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    int expansions = 0;
    while (fhi != 0.0 && std::signbit(flo) == std::signbit(fhi)) {
        if (!opt.expand_upward || expansions++ >= opt.max_expansions)
            throw NoSignChangeError("bisect_root: no sign change on the bracket");
        const double width = hi - lo;
        lo = hi;
        flo = fhi;
        hi = lo + 2.0 * width;
        fhi = f(hi);
    }
    if (fhi == 0.0) return hi;
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < opt.max_iterations; ++it) {
        mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) <= tol || (hi - lo) <= tol * std::max(1.0, std::abs(mid))) return mid;
        if (std::signbit(fm) == std::signbit(flo)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return mid;
}

/// Root on a bracket known to contain a sign change, refined with TOMS 748
/// to (nearly) full double precision.
inline double refine_root(const std::function<double(double)>& f, double lo, double hi, double flo, double fhi,
                          int bits = 50) {
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (std::signbit(flo) == std::signbit(fhi)) throw NoSignChangeError("refine_root: no sign change on the bracket");
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                     boost::math::tools::eps_tolerance<double>(bits), iters);
    return 0.5 * (r.first + r.second);
}

}  // namespace fdsec
