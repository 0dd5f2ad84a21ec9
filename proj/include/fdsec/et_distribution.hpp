#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fdsec/errors.hpp"
#include "fdsec/model.hpp"

namespace fdsec {

struct MassPoint {
    double x;  // amplitude, W^1/2
    double p;
};

/// Input distribution of the ET symbol x2, conditioned on the EHU-ET fading
/// state. A single entry in `per_v` is shared by every fading state.
struct EtInputDistribution {
    std::vector<std::vector<MassPoint>> per_v;
    bool symmetric = true;

    bool shared() const { return per_v.size() == 1; }

    const std::vector<MassPoint>& at(std::size_t iv) const { return shared() ? per_v.front() : per_v.at(iv); }

    /// ±x with probability ½ each, in every fading state.
    static EtInputDistribution binary(double x) { return {{{{x, 0.5}, {-x, 0.5}}}, true}; }

    /// ±x0(v) with probability ½ each.
    static EtInputDistribution binary_per_v(const std::vector<double>& x0) {
        EtInputDistribution d;
        d.symmetric = true;
        for (double x : x0) d.per_v.push_back({{x, 0.5}, {-x, 0.5}});
        return d;
    }

    /// Symmetric mass points: amplitude a_j carries total probability q_j,
    /// split evenly over ±a_j, plus an optional mass at zero.
    static EtInputDistribution symmetric_pairs(const std::vector<double>& amplitudes, const std::vector<double>& pair_probs,
                                               double p_zero = 0.0) {
        if (amplitudes.size() != pair_probs.size()) throw ShapeError("symmetric_pairs: size mismatch");
        std::vector<MassPoint> pts;
        if (p_zero > 0.0) pts.push_back({0.0, p_zero});
        for (std::size_t j = 0; j < amplitudes.size(); ++j) {
            if (pair_probs[j] <= 0.0) continue;
            pts.push_back({amplitudes[j], 0.5 * pair_probs[j]});
            pts.push_back({-amplitudes[j], 0.5 * pair_probs[j]});
        }
        return {{pts}, true};
    }

    /// Σ_v Σ_j x_j² p(x_j|v) p(v).
    double average_power(const GainGrid& v) const {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            for (const auto& m : at(i)) s += m.x * m.x * m.p * v[i].prob;
        return s;
    }

    /// Σ_v Σ_j v² x_j² p(x_j|v) p(v), the ET power reaching the EHU.
    double average_received_power(const GainGrid& v) const {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            for (const auto& m : at(i)) s += v[i].gain * m.x * m.x * m.p * v[i].prob;
        return s;
    }

    /// A binary symmetric law in every state (±x with ½ each, x possibly 0).
    bool is_binary_symmetric() const {
        for (const auto& pts : per_v) {
            if (pts.size() == 1 && pts[0].x == 0.0) continue;
            if (pts.size() != 2) return false;
            if (pts[0].x != -pts[1].x || std::abs(pts[0].p - 0.5) > 1e-12 || std::abs(pts[1].p - 0.5) > 1e-12)
                return false;
        }
        return true;
    }

    /// Checks normalization, symmetry and (when p_et >= 0) the ET power budget.
    void validate(const GainGrid& v, double p_et = -1.0) const {
        if (per_v.empty()) throw ShapeError("EtInputDistribution: empty");
        if (!shared() && per_v.size() != v.size())
            throw ShapeError("EtInputDistribution: per-v table does not match the fading grid");
        for (const auto& pts : per_v) {
            if (pts.empty()) throw ShapeError("EtInputDistribution: no mass points");
            double total = 0.0;
            for (const auto& m : pts) {
                if (!(m.p >= 0.0) || !std::isfinite(m.x)) throw DomainError("EtInputDistribution: bad mass point");
                total += m.p;
            }
            if (std::abs(total - 1.0) > 1e-12 * static_cast<double>(pts.size()))
                throw DomainError("EtInputDistribution: probabilities must sum to 1");
            if (symmetric) {
                for (const auto& m : pts) {
                    double mirror = 0.0;
                    for (const auto& o : pts)
                        if (o.x == -m.x) mirror += o.p;
                    double self = 0.0;
                    for (const auto& o : pts)
                        if (o.x == m.x) self += o.p;
                    if (std::abs(mirror - self) > 1e-12) throw DomainError("EtInputDistribution: not symmetric");
                }
            }
        }
        if (p_et >= 0.0 && average_power(v) > p_et + 1e-9 * std::max(1.0, p_et))
            throw DomainError("EtInputDistribution: average power exceeds the ET budget");
    }

    EtInputDistribution negated() const {
        EtInputDistribution d = *this;
        for (auto& pts : d.per_v)
            for (auto& m : pts) m.x = -m.x;
        return d;
    }
};

}  // namespace fdsec
