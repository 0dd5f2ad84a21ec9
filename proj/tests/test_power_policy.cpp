#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fdsec/power_policy.hpp"

using namespace fdsec;

namespace {

const GainGrid kNoEve{{0.0, 1.0}};

double log_uniform(std::mt19937_64& rng, double lo, double hi) { return lo * std::pow(hi / lo, unit_uniform(rng)); }

}  // namespace

TEST(EhuPower, ClosedFormWithoutEavesdropperTerm) {
    SystemParams p;
    const double x2_sq = 1e-3, v_sq = 1e-7, l2 = 2e3;
    const double a = v_sq / (p.sigma2_sq + x2_sq * p.alpha2);
    const double l = l2 * (1.0 - p.recycle_fraction());
    EXPECT_NEAR(solve_ehu_power(x2_sq, v_sq, l2, p, kNoEve), 1.0 / l - 1.0 / a, 1e-12 * (1.0 / l));
}

TEST(EhuPower, ZeroWhenNoPositiveRoot) {
    SystemParams p;
    const auto f = discretize_exponential(p.omega_f(), 16);
    const double x2_sq = 1e-3, v_sq = 1e-7;
    const auto t = detail::ehu_terms(x2_sq, v_sq, 1.0, p);
    const double edge = (t.a + detail::eve_sum(f, p.sigma3_sq, 0.0)) / (1.0 - p.recycle_fraction());
    EXPECT_EQ(solve_ehu_power(x2_sq, v_sq, edge * 1.0001, p, f), 0.0);
    EXPECT_GT(solve_ehu_power(x2_sq, v_sq, edge * 0.99, p, f), 0.0);
    EXPECT_THROW(solve_ehu_power(x2_sq, v_sq, 0.0, p, f), DomainError);
}

TEST(EhuPower, ResidualOnRandomDraws) {
    SystemParams p;
    const auto f = discretize_exponential(p.omega_f(), 64);
    std::mt19937_64 rng(17);
    for (int i = 0; i < 200; ++i) {
        const double x2 = p.p_et * log_uniform(rng, 1e-3, 16.0);
        const double v2 = p.omega_v() * log_uniform(rng, 0.01, 10.0);
        const auto t = detail::ehu_terms(x2, v2, 1.0, p);
        const double top = (t.a + detail::eve_sum(f, p.sigma3_sq, 0.0)) / (1.0 - p.recycle_fraction());
        const double l2 = top * log_uniform(rng, 1e-5, 0.999);
        const double pw = solve_ehu_power(x2, v2, l2, p, f);
        ASSERT_GT(pw, 0.0);
        EXPECT_LE(std::abs(ehu_power_residual(pw, x2, v2, l2, p, f)), 1e-10);
    }
}

TEST(EhuPower, DecreasingInMultiplierAndInSelfInterference) {
    SystemParams p;
    const auto f = discretize_exponential(p.omega_f(), 16);
    double prev = INFINITY;
    for (double l2 = 1e2; l2 < 1e5; l2 *= 1.5) {
        const double pw = solve_ehu_power(1e-3, 1e-7, l2, p, f);
        EXPECT_LE(pw, prev);
        prev = pw;
    }
    EXPECT_GT(solve_ehu_power(0.0, 1e-7, 1e3, p, f), solve_ehu_power(1e-2, 1e-7, 1e3, p, f));
}

TEST(Policy, SymmetricPointsShareARoot) {
    SystemParams p;
    const auto fd = FadingGrid::from_params(p, 8);
    const auto et = EtInputDistribution::symmetric_pairs({0.01, 0.05}, {0.5, 0.5});
    const auto pol = policy_for_lambda2(et, 3e3, p, fd);
    for (std::size_t iv = 0; iv < fd.v_sq.size(); ++iv) {
        EXPECT_EQ(pol.at(iv, 0), pol.at(iv, 1));
        EXPECT_EQ(pol.at(iv, 2), pol.at(iv, 3));
    }
}

TEST(Calibration, ClosesEnergyBalance) {
    for (double dbm : {-30.0, -10.0, 0.0, 5.0}) {
        SystemParams p;
        p.p_et = dbm_to_watts(dbm);
        const auto fd = FadingGrid::from_params(p, 64);
        const auto et = EtInputDistribution::binary(std::sqrt(p.p_et));
        const auto pol = calibrate_lambda2(et, p, fd);
        const auto b = energy_balance(pol, et, p, fd);
        EXPECT_LE(std::abs(b.relative_residual()), 1e-9) << dbm;
        EXPECT_GT(b.mean_power, 0.0);
        // harvest written out directly
        double h = 0.0;
        for (std::size_t iv = 0; iv < fd.v_sq.size(); ++iv)
            h += p.eta * (fd.v_sq[iv].gain * p.p_et + p.recycle_gain() * pol.at(iv, 0)) * fd.v_sq[iv].prob;
        EXPECT_NEAR(expected_harvest(pol, et, p, fd), h, 1e-12 * h);
    }
}

TEST(Calibration, InfeasibleWhenHarvestBelowProcessingCost) {
    SystemParams p;
    const auto fd = FadingGrid::from_params(p, 8);
    const auto et = EtInputDistribution::binary(std::sqrt(p.p_et));
    p.p_p = p.eta * et.average_received_power(fd.v_sq) * 1.01;
    EXPECT_THROW(calibrate_lambda2(et, p, fd), InfeasibleEnergyError);
}

TEST(Calibration, CeilingSilencesEveryState) {
    SystemParams p;
    const auto fd = FadingGrid::from_params(p, 8);
    const auto et = EtInputDistribution::binary(std::sqrt(p.p_et));
    const auto pol = policy_for_lambda2(et, lambda2_ceiling(et, p, fd) * 1.000001, p, fd);
    for (const auto& row : pol.p_ehu)
        for (double x : row) EXPECT_EQ(x, 0.0);
}

TEST(Multiplier, SolvesAndChecksMonotonicity) {
    auto r = [](double l) { return std::make_pair(1.0 / l - 2.0, 1.0 / l + 2.0); };
    EXPECT_NEAR(solve_multiplier(r, 10.0).lambda, 0.5, 1e-12);
    auto bumpy = [](double l) {
        const double u = std::log(l);
        return std::make_pair(-u + 3.0 * std::sin(4.0 * u), 1.0);
    };
    EXPECT_THROW(solve_multiplier(bumpy, 1e3), MonotonicityError);
}
