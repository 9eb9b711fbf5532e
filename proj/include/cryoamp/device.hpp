#pragma once

// =============================================================================
// HBT device model and common-emitter bias network
// =============================================================================
// Forward-active exponential law with a linear Early factor on the collector
// current:
//
//   i_c = i_sat * exp(v_be / v_teff) * (1 + v_ce / v_early)
//   i_b = (i_sat / beta_f) * exp(v_be / v_teff)
//
// The bias network is the usual four-resistor common-emitter arrangement:
// r_upper from supply to base, r_lower from base to ground, r_collector from
// supply to collector and r_emitter from emitter to ground.
// =============================================================================

#include "cryoamp/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace cryoamp::device {

/// Largest accepted v_be / v_teff before the exponential is rejected.
inline constexpr double max_exponent = 200.0;

struct TransistorParams {
    double i_sat = 0.0;      // A
    double v_teff = 0.025;   // V, effective (not kT/q) junction voltage
    double v_early = 124.0;  // V
    double beta_f = 160.0;

    void validate() const {
        detail::require_positive(i_sat, "i_sat");
        detail::require_positive(v_teff, "v_teff");
        if (!(v_early >= 1.0)) throw DomainError("v_early must be at least 1 V");
        if (!(beta_f >= 1.0)) throw DomainError("beta_f must be at least 1");
    }
};

struct BiasNetwork {
    double v_supply = 1.0;        // V_1
    double r_upper = 574e3;       // R_2, supply to base
    double r_lower = 235e3;       // R_1, base to ground
    double r_collector = 1e3;     // R_3
    double r_emitter = 24.0;      // R_4
    double c_in = 12e-9;          // C_1
    double c_out = 12e-9;         // C_2
    double c_bypass = 220e-9;     // C_3

    void validate() const {
        detail::require_positive(v_supply, "v_supply");
        detail::require_positive(r_upper, "r_upper");
        detail::require_positive(r_lower, "r_lower");
        detail::require_positive(r_collector, "r_collector");
        detail::require_positive(r_emitter, "r_emitter");
        detail::require_positive(c_in, "c_in");
        detail::require_positive(c_out, "c_out");
        detail::require_positive(c_bypass, "c_bypass");
    }

    double thevenin_voltage() const { return v_supply * r_lower / (r_lower + r_upper); }
    double thevenin_resistance() const { return r_lower * r_upper / (r_lower + r_upper); }
};

struct OperatingPoint {
    double v_be = 0.0;
    double v_ce = 0.0;
    double i_b = 0.0;
    double i_c = 0.0;
};

struct SmallSignalParams {
    double g_m = 0.0;   // S
    double r_pi = 0.0;  // Ohm
    double r_o = 0.0;   // Ohm
};

struct Currents {
    double i_b = 0.0;
    double i_c = 0.0;
};

inline Currents evaluate_dc(const TransistorParams& params, double v_be, double v_ce) {
    params.validate();
    if (!(v_ce >= 0.0)) throw DomainError("v_ce must be non-negative");
    const double x = v_be / params.v_teff;
    if (x > max_exponent) {
        throw DomainError("v_be / v_teff = " + std::to_string(x) + " exceeds exponent cap");
    }
    const double e = params.i_sat * std::exp(x);
    return {e / params.beta_f, e * (1.0 + v_ce / params.v_early)};
}

/// Kirchhoff current residuals at the base and collector nodes (A).
struct NodeResiduals {
    double base = 0.0;
    double collector = 0.0;
};

inline NodeResiduals kirchhoff_residuals(const BiasNetwork& net, const TransistorParams& params,
                                         double v_be, double v_ce) {
    const double e = params.i_sat * std::exp(v_be / params.v_teff);
    const double i_c = e * (1.0 + v_ce / params.v_early);
    const double i_b = e / params.beta_f;
    const double v_e = net.r_emitter * (i_c + i_b);
    const double v_b = v_be + v_e;
    const double v_c = v_ce + v_e;
    return {(net.v_supply - v_b) / net.r_upper - v_b / net.r_lower - i_b,
            (net.v_supply - v_c) / net.r_collector - i_c};
}

struct SolverOptions {
    double tol = 1e-9;
    int max_iter = 100;
    double v_be_guess = 0.9;
    double v_ce_guess = -1.0;  // negative: v_supply / 2
};

/// Damped Newton on the two-node Kirchhoff system in (v_be, v_ce).
inline OperatingPoint solve_operating_point(const BiasNetwork& net, const TransistorParams& params,
                                            const SolverOptions& opts = {}) {
    params.validate();
    if (!std::isfinite(net.r_collector) || !std::isfinite(net.r_emitter)) {
        throw DomainError("collector/emitter branch is open: no DC path");
    }
    net.validate();
    detail::require_positive(opts.tol, "tol");

    const double vt = params.v_teff;
    const double g_div = 1.0 / net.r_lower + 1.0 / net.r_upper;

    struct State {
        bool ok = false;
        double i_c = 0.0, i_b = 0.0, e = 0.0;
        std::array<double, 2> f{};
        double norm = 0.0;
    };
    auto eval = [&](double v_be, double v_ce) {
        State s;
        if (!(v_be / vt <= max_exponent) || !std::isfinite(v_ce)) return s;
        const auto r = kirchhoff_residuals(net, params, v_be, v_ce);
        s.e = params.i_sat * std::exp(v_be / vt);
        s.i_c = s.e * (1.0 + v_ce / params.v_early);
        s.i_b = s.e / params.beta_f;
        s.f = {r.base, r.collector};
        s.norm = std::hypot(r.base, r.collector);
        s.ok = std::isfinite(s.norm);
        return s;
    };

    double v_be = opts.v_be_guess;
    double v_ce = opts.v_ce_guess < 0.0 ? 0.5 * net.v_supply : opts.v_ce_guess;
    State cur = eval(v_be, v_ce);
    if (!cur.ok) throw DomainError("initial guess overflows the device law");

    double last = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iter; ++it) {
        const double scale = std::max(cur.i_c, std::numeric_limits<double>::min());
        last = std::max(std::abs(cur.f[0]), std::abs(cur.f[1])) / scale;
        if (last < opts.tol) {
            if (v_ce < 0.0) throw DomainError("bias point outside forward-active region (v_ce < 0)");
            return {v_be, v_ce, cur.i_b, cur.i_c};
        }

        const double dve_dvbe = net.r_emitter * (cur.i_c + cur.i_b) / vt;
        const double dve_dvce = net.r_emitter * cur.e / params.v_early;
        const double a11 = -g_div * (1.0 + dve_dvbe) - cur.i_b / vt;
        const double a12 = -g_div * dve_dvce;
        const double a21 = -dve_dvbe / net.r_collector - cur.i_c / vt;
        const double a22 = -(1.0 + dve_dvce) / net.r_collector - cur.e / params.v_early;
        const double det = a11 * a22 - a12 * a21;
        if (det == 0.0 || !std::isfinite(det)) throw ConvergenceError("singular Jacobian", last);
        const double d_be = -(a22 * cur.f[0] - a12 * cur.f[1]) / det;
        const double d_ce = -(-a21 * cur.f[0] + a11 * cur.f[1]) / det;

        double step = 1.0;
        State trial;
        for (int halving = 0; halving < 60; ++halving) {
            trial = eval(v_be + step * d_be, v_ce + step * d_ce);
            if (trial.ok && trial.norm < cur.norm) break;
            step *= 0.5;
        }
        if (!trial.ok || !(trial.norm < cur.norm)) {
            throw ConvergenceError("line search stalled", last);
        }
        v_be += step * d_be;
        v_ce += step * d_ce;
        cur = trial;
    }
    throw ConvergenceError("Newton iteration did not converge in " + std::to_string(opts.max_iter) +
                               " iterations",
                           last);
}

/// Back-solves i_sat so that the network settles at the requested collector
/// current. The remaining parameters are taken from `params`.
inline TransistorParams calibrate_saturation_current(const BiasNetwork& net, TransistorParams params,
                                                     double target_i_c) {
    net.validate();
    detail::require_positive(target_i_c, "target_i_c");
    params.i_sat = 1.0;  // placeholder so validate() passes for the other fields
    params.validate();

    const double r_ce = net.r_collector + net.r_emitter;
    double i_b = target_i_c / params.beta_f;
    double v_ce = 0.0;
    for (int k = 0; k < 50; ++k) {
        v_ce = net.v_supply - r_ce * target_i_c - net.r_emitter * i_b;
        i_b = target_i_c / (params.beta_f * (1.0 + v_ce / params.v_early));
    }
    if (!(v_ce > 0.0)) throw DomainError("target collector current saturates the transistor");

    const double v_e = net.r_emitter * (target_i_c + i_b);
    const double v_b = (net.v_supply / net.r_upper - i_b) / (1.0 / net.r_upper + 1.0 / net.r_lower);
    const double v_be = v_b - v_e;
    if (!(v_be > 0.0)) throw DomainError("divider cannot supply the required base current");
    params.i_sat = target_i_c / (std::exp(v_be / params.v_teff) * (1.0 + v_ce / params.v_early));
    return params;
}

/// Default device: v_teff 25 mV, V_A 124 V, beta 160, i_sat set for i_c = 0.1 mA
/// on the default network.
inline TransistorParams default_transistor_params() {
    return calibrate_saturation_current(BiasNetwork{}, TransistorParams{}, 1e-4);
}

inline SmallSignalParams small_signal(const OperatingPoint& op, const TransistorParams& params) {
    if (!(op.i_c > 0.0)) throw DomainError("small-signal model needs i_c > 0");
    params.validate();
    const double g_m = op.i_c / params.v_teff;
    return {g_m, params.beta_f / g_m, (params.v_early + op.v_ce) / op.i_c};
}

inline double power_dissipation(const OperatingPoint& op) {
    return op.i_c * op.v_ce + op.i_b * op.v_be;
}

struct ThermalCheck {
    bool within_budget = false;  // p_dissipated < p_cooling
    double margin = 0.0;         // p_cooling - p_dissipated (W)
    bool meets_margin_ratio = false;
};

/// `margin_ratio` is the required p_cooling / p_dissipated headroom.
inline ThermalCheck thermal_budget_check(double p_dissipated, double p_cooling,
                                         double margin_ratio = 10.0) {
    if (p_dissipated < 0.0 || p_cooling < 0.0) throw DomainError("powers must be non-negative");
    ThermalCheck out;
    out.within_budget = p_dissipated < p_cooling;
    out.margin = p_cooling - p_dissipated;
    out.meets_margin_ratio = out.within_budget && p_cooling >= margin_ratio * p_dissipated;
    return out;
}

}  // namespace cryoamp::device
