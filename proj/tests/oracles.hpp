#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the solver, population or demodulation code under test.

#include "cryoamp/device.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

struct DcCase {
    cryoamp::device::BiasNetwork net;
    cryoamp::device::TransistorParams params;
};

// Network and device built so that (v_be, v_ce, i_c) is the exact solution.
inline DcCase back_substituted_case(double v_be, double v_ce, double i_c) {
    DcCase c;
    auto& p = c.params;
    p.v_teff = 0.025;
    p.v_early = 124.0;
    p.beta_f = 160.0;
    p.i_sat = i_c / (std::exp(v_be / p.v_teff) * (1.0 + v_ce / p.v_early));
    const double i_b = p.i_sat * std::exp(v_be / p.v_teff) / p.beta_f;

    auto& n = c.net;
    n.v_supply = 1.0;
    n.r_lower = 235e3;
    n.r_emitter = 24.0;
    const double v_e = n.r_emitter * (i_c + i_b);
    const double v_b = v_be + v_e;
    n.r_upper = (n.v_supply - v_b) / (v_b / n.r_lower + i_b);
    n.r_collector = (n.v_supply - (v_ce + v_e)) / i_c;
    return c;
}

// Random device/network with i_sat placed so the circuit sits in forward-active.
inline DcCase random_case(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    for (;;) {
        DcCase c;
        c.params.v_teff = in(0.020, 0.040);
        c.params.v_early = in(50.0, 200.0);
        c.params.beta_f = in(80.0, 300.0);
        c.net.r_upper *= in(0.7, 1.3);
        c.net.r_lower *= in(0.7, 1.3);
        c.net.r_collector *= in(0.7, 1.3);
        c.net.r_emitter *= in(0.7, 1.3);
        const double target = in(50e-6, 150e-6);
        try {
            c.params = cryoamp::device::calibrate_saturation_current(c.net, c.params, target);
            return c;
        } catch (const cryoamp::Error&) {
        }
    }
}

struct GridPoint {
    double v_be = 0.0;
    double v_ce = 0.0;
    double metric = std::numeric_limits<double>::infinity();
};

struct NodeMismatch {
    double base = 0.0;       // V, current mismatch times the divider's Thevenin resistance
    double collector = 0.0;  // V, current mismatch times R_3
};

// Kirchhoff mismatch written out from the circuit rather than taken from the library.
inline NodeMismatch dc_mismatch(const DcCase& c, double v_be, double v_ce) {
    const auto& p = c.params;
    const auto& n = c.net;
    const double x = v_be / p.v_teff;
    if (x > 200.0) return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    const double e = p.i_sat * std::exp(x);
    const double ic = e * (1.0 + v_ce / p.v_early);
    const double ib = e / p.beta_f;
    const double ve = n.r_emitter * (ic + ib);
    const double vb = v_be + ve;
    const double vc = v_ce + ve;
    const double rth = n.r_upper * n.r_lower / (n.r_upper + n.r_lower);
    return {((n.v_supply - vb) / n.r_upper - vb / n.r_lower - ib) * rth,
            ((n.v_supply - vc) / n.r_collector - ic) * n.r_collector};
}

// Exhaustive search on nested grids. For every v_be on the grid the collector
// node picks its best v_ce on the grid; the base node then picks v_be. Pitches
// go 10 mV, 1 mV, 0.1 mV, each pass scanning a window around the previous one.
inline GridPoint grid_search_operating_point(const DcCase& c) {
    auto best_vce = [&](double vbe, double lo, double hi, double step) {
        GridPoint b;
        const int n = static_cast<int>(std::lround((hi - lo) / step));
        for (int j = 0; j <= n; ++j) {
            const double vce = lo + step * j;
            if (vce < 0.0 || vce > c.net.v_supply) continue;
            const double m = std::abs(dc_mismatch(c, vbe, vce).collector);
            if (m < b.metric) b = {vbe, vce, m};
        }
        return b;
    };
    auto scan = [&](double be_lo, double be_hi, double ce_lo, double ce_hi, double step) {
        GridPoint b;
        const int n = static_cast<int>(std::lround((be_hi - be_lo) / step));
        for (int i = 0; i <= n; ++i) {
            const double vbe = be_lo + step * i;
            // The collector scan is repeated at finer pitch around its own optimum.
            GridPoint ce = best_vce(vbe, ce_lo, ce_hi, std::max(step, 10e-3));
            if (step < 10e-3) ce = best_vce(vbe, ce.v_ce - 10e-3, ce.v_ce + 10e-3, std::max(step, 1e-3));
            if (step < 1e-3) ce = best_vce(vbe, ce.v_ce - 1e-3, ce.v_ce + 1e-3, step);
            const double m = std::abs(dc_mismatch(c, vbe, ce.v_ce).base);
            if (m < b.metric) b = {vbe, ce.v_ce, m};
        }
        return b;
    };
    GridPoint best = scan(0.0, 1.2, 0.0, c.net.v_supply, 10e-3);
    best = scan(best.v_be - 20e-3, best.v_be + 20e-3, 0.0, c.net.v_supply, 1e-3);
    best = scan(best.v_be - 2e-3, best.v_be + 2e-3, 0.0, c.net.v_supply, 0.1e-3);
    return best;
}

// Along the solution curve v_ce moves by about (R_3 + R_4) g_m per volt of
// v_be, so a 0.1 mV v_be pitch resolves v_ce only to that multiple.
inline double grid_vce_resolution(const DcCase& c, double i_c) {
    const double slope = (c.net.r_collector + c.net.r_emitter) * i_c / c.params.v_teff;
    return 0.1e-3 * (1.0 + slope);
}

inline GridPoint grid_search_operating_point(const cryoamp::device::BiasNetwork& net,
                                             const cryoamp::device::TransistorParams& p) {
    return grid_search_operating_point(DcCase{net, p});
}

// Direct DFT of one frequency, accumulated in long double. Returns the rms
// value of that sinusoidal component.
inline double dft_component_rms(const std::vector<double>& x, double fs, double f) {
    long double re = 0.0L, im = 0.0L;
    const long double w = 2.0L * std::numbers::pi_v<long double> * f / fs;
    for (std::size_t i = 0; i < x.size(); ++i) {
        re += x[i] * std::cos(w * static_cast<long double>(i));
        im -= x[i] * std::sin(w * static_cast<long double>(i));
    }
    const long double amp = 2.0L * std::sqrt(re * re + im * im) / static_cast<long double>(x.size());
    return static_cast<double>(amp / std::sqrt(2.0L));
}

// Phase of that component relative to a sine reference, in (-pi, pi].
inline double dft_component_phase(const std::vector<double>& x, double fs, double f) {
    long double re = 0.0L, im = 0.0L;
    const long double w = 2.0L * std::numbers::pi_v<long double> * f / fs;
    for (std::size_t i = 0; i < x.size(); ++i) {
        re += x[i] * std::sin(w * static_cast<long double>(i));
        im += x[i] * std::cos(w * static_cast<long double>(i));
    }
    return static_cast<double>(std::atan2(im, re));
}

// Fixed-step RK4 on d rho/dt = r s(t) (1 - 2 rho) - rho / tau with a 0/1
// square drive, run from rho = 0 until `periods` have elapsed. Returns the
// last period sampled at `spp` points.
inline std::vector<double> rk4_population(double rate, double tau, double f_m, double duty, std::size_t periods,
                                          std::size_t spp, std::size_t substeps = 200) {
    const double T = 1.0 / f_m;
    const double dt = T / static_cast<double>(spp * substeps);
    auto deriv = [&](double rho, double phase) {
        const double drive = phase < duty ? rate : 0.0;
        return drive * (1.0 - 2.0 * rho) - rho / tau;
    };
    double rho = 0.0;
    std::vector<double> last(spp);
    for (std::size_t p = 0; p < periods; ++p) {
        for (std::size_t s = 0; s < spp; ++s) {
            if (p + 1 == periods) last[s] = rho;
            for (std::size_t k = 0; k < substeps; ++k) {
                // Sub-steps never straddle the switching instant because duty*spp is an integer in callers.
                const double phase = (static_cast<double>(s * substeps + k) + 0.5) / static_cast<double>(spp * substeps);
                const double k1 = deriv(rho, phase);
                const double k2 = deriv(rho + 0.5 * dt * k1, phase);
                const double k3 = deriv(rho + 0.5 * dt * k2, phase);
                const double k4 = deriv(rho + dt * k3, phase);
                rho += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
    }
    return last;
}

}  // namespace oracle
