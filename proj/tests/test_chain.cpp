#include "cryoamp/chain.hpp"
#include "cryoamp/constants.hpp"
#include "cryoamp/device.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace cryoamp;
using namespace cryoamp::chain;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double db(Complex h) { return 20.0 * std::log10(std::abs(h)); }

device::SmallSignalParams default_small_signal() {
    const auto p = device::default_transistor_params();
    return device::small_signal(device::solve_operating_point(device::BiasNetwork{}, p), p);
}

}  // namespace

TEST(Coupling, CornerFrequency) {
    const double f300 = corner_frequency({1e-12, 300e-12, 50.0});
    EXPECT_NEAR(f300, 1.0 / (2.0 * 3.141592653589793 * 50.0 * 300e-12), 1e-3);
    EXPECT_NEAR(f300, 10.6e6, 0.05e6);
    const double f10 = corner_frequency({1e-12, 10e-12, 50.0});
    EXPECT_NEAR(f10, 318e6, 1e6);
    EXPECT_NEAR(corner_frequency({1e-12, 3000e-12, 50.0}) / f300, 0.1, 1e-12);
    EXPECT_THROW(corner_frequency({1e-12, 0.0, 50.0}), DomainError);
}

TEST(Coupling, CapacitiveDivision) {
    EXPECT_NEAR(capacitive_division(3.16e-18, {1e-12, 300e-12, 50.0}), 10.5e-9, 0.01 * 10.5e-9);
    EXPECT_NEAR(capacitive_division(3.16e-18, {1e-12, 10e-12, 50.0}), 290e-9, 0.02 * 290e-9);
    EXPECT_EQ(capacitive_division(0.0, {}), 0.0);
}

TEST(HbtStage, DefaultUnityGainIsFlat) {
    const auto st = default_hbt_stage(device::BiasNetwork{}, device::default_transistor_params());
    for (double f : log_grid(100e3, 100e6, 200)) EXPECT_NEAR(db(st.evaluate(f)), 0.0, 1.0) << f;
    EXPECT_NEAR(std::abs(st.evaluate(10e6)), 1.0, 1e-3);
}

TEST(HbtStage, InfiniteCapacitorsGiveMidband) {
    const auto ss = default_small_signal();
    auto net = device::BiasNetwork{};
    net.c_in = net.c_out = net.c_bypass = inf;
    const auto st = hbt_stage_response(ss, net, 400.0);
    const double mid = ss.g_m * parallel(parallel(net.r_collector, ss.r_o), 400.0);
    for (double f : {1.0, 1e3, 1e6, 1e9}) {
        EXPECT_NEAR(st.evaluate(f).real(), -mid, 1e-12);
        EXPECT_NEAR(st.evaluate(f).imag(), 0.0, 1e-12);
    }
}

TEST(HbtStage, FiftyOhmLoadVersusUnityLoad) {
    device::SmallSignalParams ss{4e-3, 40e3, 1.249e6};
    // Hand analysis: 1k || 1.249M || 50 = 47.62 Ohm, times 4 mS.
    const double r = 1.0 / (1.0 / 1e3 + 1.0 / 1.249e6 + 1.0 / 50.0);
    EXPECT_NEAR(bypassed_midband_gain(ss, 1e3, 50.0), 4e-3 * r, 1e-12);
    EXPECT_NEAR(bypassed_midband_gain(ss, 1e3, 50.0), 0.19, 0.005);
    const double load = load_for_gain(ss, 1e3, 1.0);
    EXPECT_NEAR(bypassed_midband_gain(ss, 1e3, load), 1.0, 1e-12);
    EXPECT_GT(load, 300.0);
    EXPECT_THROW(load_for_gain(ss, 100.0, 1.0), DomainError);
}

TEST(HbtStage, EmitterShelfDepth) {
    const auto ss = default_small_signal();
    auto net = device::BiasNetwork{};
    net.c_in = net.c_out = inf;
    const auto st = hbt_stage_response(ss, net, 333.0);
    const double k = ss.g_m * net.r_emitter * 161.0 / 160.0;
    EXPECT_NEAR(std::abs(st.evaluate(1e-3)) * (1.0 + k) / std::abs(st.evaluate(1e9)), 1.0, 1e-6);
}

TEST(FixedGain, Examples) {
    const auto st = fixed_gain_stage(40.0, 100e3, 1.5e9, 6.0);
    EXPECT_NEAR(std::abs(st.evaluate(10e6)), 100.0, 1.0);
    EXPECT_NEAR(std::abs(fixed_gain_stage(0.0, 0.0, inf, 0.0).evaluate(1e6)), 1.0, 1e-15);
    const auto hp = fixed_gain_stage(20.0, 1e5, inf, 0.0);
    EXPECT_NEAR(std::abs(hp.evaluate(1e5)), 10.0 / std::sqrt(2.0), 1e-12);
    EXPECT_THROW(fixed_gain_stage(40.0, 2e9, 1e9, 6.0), DomainError);
}

TEST(Cascade, FriisEightKelvin) {
    const auto c = cascade({fixed_gain_stage(0.0, 0.0, inf, 2.0), fixed_gain_stage(40.0, 100e3, 1.5e9, 6.0)});
    EXPECT_DOUBLE_EQ(c.noise_temperature(), 8.0);
    EXPECT_NEAR(db(c.evaluate(10e6)), 40.0, 0.01);
}

TEST(Cascade, DefaultChainNoiseNearEightKelvin) {
    const auto c = cascade({default_hbt_stage(device::BiasNetwork{}, device::default_transistor_params()),
                            default_second_stage()});
    EXPECT_NEAR(c.noise_temperature(), 8.0, 1e-3);
}

TEST(Cascade, IdentityAndMultiplicativity) {
    const auto one = fixed_gain_stage(13.0, 1e4, 1e8, 3.0);
    const auto c1 = cascade({one});
    for (double f : {1e3, 1e5, 1e7}) EXPECT_EQ(c1.evaluate(f), one.evaluate(f));
    EXPECT_EQ(c1.noise_temperature(), 3.0);

    const auto a = fixed_gain_stage(20.0, 0.0, inf, 1.0);
    EXPECT_NEAR(db(cascade({a, a}).evaluate(1e6)), 40.0, 1e-12);

    const auto b = fixed_gain_stage(7.0, 3e4, 2e8, 1.0);
    const auto ab = cascade({one, b});
    for (double f : log_grid(1e3, 1e9, 25)) {
        const Complex expect = one.evaluate(f) * b.evaluate(f);
        EXPECT_NEAR(std::abs(ab.evaluate(f) - expect), 0.0, 1e-12 * std::abs(expect));
    }
}

TEST(Cascade, QuietHighGainStageFirstIsBest) {
    const auto quiet = fixed_gain_stage(20.0, 0.0, inf, 2.0);
    const auto noisy = fixed_gain_stage(20.0, 0.0, inf, 50.0);
    EXPECT_LT(cascade({quiet, noisy}).noise_temperature(), cascade({noisy, quiet}).noise_temperature());
}

TEST(Cascade, ZeroGainAheadIsNumericalError) {
    auto dead = fixed_gain_stage(0.0, 0.0, inf, 2.0);
    dead.gain_factor = 0.0;
    EXPECT_THROW(cascade({dead, fixed_gain_stage(0.0, 0.0, inf, 2.0)}), NumericalError);
    EXPECT_THROW(cascade({}), DomainError);
}

TEST(S21, UnityAndPole) {
    const auto unity = cascade({fixed_gain_stage(0.0, 0.0, inf, 0.0)});
    for (const auto& [f, v] : s21_db(unity, log_grid(1e3, 1e9, 20))) EXPECT_NEAR(v, 0.0, 1e-12);

    const auto lp = cascade({fixed_gain_stage(0.0, 0.0, 1e6, 0.0)});
    EXPECT_NEAR(s21_db(lp, {1e6})[0].second, -10.0 * std::log10(2.0), 1e-12);
    EXPECT_NEAR(s21_db(lp, {1e6})[0].second, -3.01, 0.005);
    EXPECT_THROW(s21_db(lp, {0.0}), DomainError);
}

TEST(S21, FirstStageOnlyFlatAtZeroDb) {
    const auto c = cascade({default_hbt_stage(device::BiasNetwork{}, device::default_transistor_params())});
    for (const auto& [f, v] : s21_db(c, log_grid(100e3, 100e6, 200))) EXPECT_NEAR(v, 0.0, 1.0) << f;
}

TEST(S21, TwoStageMidbandFortyDb) {
    const auto c = cascade({default_hbt_stage(device::BiasNetwork{}, device::default_transistor_params()),
                            default_second_stage()});
    // Above the second stage's low corner region the chain is flat at 40 dB.
    for (const auto& [f, v] : s21_db(c, log_grid(1e6, 100e6, 50))) EXPECT_NEAR(v, 40.0, 1.0) << f;
}

TEST(Snr, Examples) {
    EXPECT_NEAR(snr_db(290e-9, 35e-12, 1.0), 78.37, 0.05);
    EXPECT_NEAR(snr_db(290e-9, 35e-12, 100e6), -1.63, 0.05);
    EXPECT_NEAR(snr_db(35e-12 * std::sqrt(1e4), 35e-12, 1e4), 0.0, 1e-12);
    EXPECT_THROW(snr_db(0.0, 35e-12, 1.0), DomainError);
}

TEST(LogGrid, SinglePointAndEndpoints) {
    EXPECT_EQ(log_grid(1e5, 1e5, 200).size(), 1u);
    const auto g = log_grid(1e5, 1e8, 200);
    EXPECT_EQ(g.size(), 200u);
    EXPECT_EQ(g.front(), 1e5);
    EXPECT_EQ(g.back(), 1e8);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], std::pow(1e3, 1.0 / 199.0), 1e-12);
}
