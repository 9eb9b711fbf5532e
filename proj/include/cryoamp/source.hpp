#pragma once

// =============================================================================
// Electrons-on-helium signal source
// =============================================================================
// Stark-tuned resonance (Lorentzian in the bottom-plate voltage), pulsed
// two-level rate dynamics and the resulting image charge on the top plate.
//
// Rate model during one modulation period:
//
//   d(rho22)/dt = r(t) * (1 - 2 rho22) - rho22 / tau
//
// with r(t) = excitation_rate * scale while the microwaves are on and zero
// otherwise. Each on/off segment is integrated in closed form.
// =============================================================================

#include "cryoamp/constants.hpp"
#include "cryoamp/error.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace cryoamp::source {

struct CellGeometry {
    double c_cell = 1e-12;      // C_0, F
    double s_over_d = 5.65e-3;  // plate area over gap, m
    double delta_z = 35e-9;     // m

    void validate() const {
        detail::require_positive(c_cell, "c_cell");
        detail::require_positive(s_over_d, "s_over_d");
        detail::require_positive(delta_z, "delta_z");
    }
};

struct EnsembleParams {
    double n_s = 1e12;           // m^-2 (1e8 cm^-2)
    double rho22_target = 0.1;   // CW on-resonance occupancy
    double tau_relax = 1e-6;     // s
    double v_resonance = 11.6;   // V_BC at resonance
    double linewidth_v = 0.1;    // FWHM in V_BC
    double f_mw = 110e9;         // Hz, bookkeeping only

    void validate() const {
        if (!(rho22_target >= 0.0 && rho22_target <= 0.5)) {
            throw DomainError("rho22_target must lie in [0, 0.5]");
        }
        detail::require_positive(tau_relax, "tau_relax");
        detail::require_positive(linewidth_v, "linewidth_v");
        if (!(n_s >= 0.0)) throw DomainError("n_s must be non-negative");
    }
};

/// Pumping rate whose CW steady state equals `rho22`: r = rho / (tau (1 - 2 rho)).
inline double cw_excitation_rate(double rho22, double tau_relax) {
    detail::require_positive(tau_relax, "tau_relax");
    if (!(rho22 >= 0.0 && rho22 < 0.5)) throw DomainError("rho22 must lie in [0, 0.5)");
    return rho22 / (tau_relax * (1.0 - 2.0 * rho22));
}

struct DriveWaveform {
    double f_m = 250e3;            // Hz
    double duty = 0.5;
    double excitation_rate = -1.0; // 1/s; negative: back-solve from the ensemble

    void validate() const {
        detail::require_positive(f_m, "f_m");
        if (!(duty > 0.0 && duty < 1.0)) throw DomainError("duty must lie in (0, 1)");
    }

    double rate_for(const EnsembleParams& ens) const {
        return excitation_rate >= 0.0 ? excitation_rate
                                      : cw_excitation_rate(ens.rho22_target, ens.tau_relax);
    }
};

inline double stark_excitation_fraction(double v_bc, const EnsembleParams& ens) {
    detail::require_positive(ens.linewidth_v, "linewidth_v");
    const double x = 2.0 * (v_bc - ens.v_resonance) / ens.linewidth_v;
    return 1.0 / (1.0 + x * x);
}

/// Effective relaxation time of the pulsed drive: tau / (1 + 2 r tau duty).
inline double effective_relaxation_time(double rate, double tau_relax, double duty) {
    return tau_relax / (1.0 + 2.0 * rate * tau_relax * duty);
}

struct PopulationTrace {
    double sample_rate = 0.0;  // Hz
    std::size_t samples_per_period = 0;
    std::vector<double> rho22;
};

/// Periodic steady-state rho22(t) sampled on a uniform grid. The period start
/// value is the fixed point of the one-period map, which is what an unbounded
/// warm-up converges to; every period is therefore identical.
inline PopulationTrace rydberg_population(const DriveWaveform& drive, const EnsembleParams& ens,
                                          double excitation_scale, std::size_t n_periods,
                                          std::size_t samples_per_period) {
    if (!(ens.tau_relax > 0.0)) throw DomainError("tau_relax must be positive");
    drive.validate();
    if (samples_per_period < 16) throw DomainError("need at least 16 samples per period");
    if (n_periods < 1) throw DomainError("need at least one period");
    if (!(excitation_scale >= 0.0)) throw DomainError("excitation_scale must be non-negative");

    const double rate = drive.rate_for(ens) * excitation_scale;
    const double period = 1.0 / drive.f_m;
    const double t_on = drive.duty * period;
    const double t_off = period - t_on;
    const double k_on = 2.0 * rate + 1.0 / ens.tau_relax;
    const double k_off = 1.0 / ens.tau_relax;
    const double rho_on = rate / k_on;

    // rho(t_on) = rho_on + (rho0 - rho_on) a,  rho(T) = rho(t_on) b = rho0
    const double a = std::exp(-k_on * t_on);
    const double b = std::exp(-k_off * t_off);
    const double rho0 = rho_on * (1.0 - a) * b / (1.0 - a * b);
    const double rho_end_on = rho_on + (rho0 - rho_on) * a;

    std::vector<double> one(samples_per_period);
    const double dt = period / static_cast<double>(samples_per_period);
    for (std::size_t i = 0; i < samples_per_period; ++i) {
        const double t = static_cast<double>(i) * dt;
        one[i] = t < t_on ? rho_on + (rho0 - rho_on) * std::exp(-k_on * t)
                          : rho_end_on * std::exp(-k_off * (t - t_on));
    }

    PopulationTrace out;
    out.sample_rate = drive.f_m * static_cast<double>(samples_per_period);
    out.samples_per_period = samples_per_period;
    out.rho22.reserve(n_periods * samples_per_period);
    for (std::size_t p = 0; p < n_periods; ++p) out.rho22.insert(out.rho22.end(), one.begin(), one.end());
    return out;
}

/// Image-charge change for a given occupancy: delta_z e n_s rho22 S/D.
inline double image_charge(double rho22, const CellGeometry& geom, double n_s) {
    return geom.delta_z * constants::elementary_charge * n_s * rho22 * geom.s_over_d;
}

struct ImageChargeWaveform {
    std::vector<double> delta_q;  // C
    std::vector<double> v_ac;     // V
};

inline ImageChargeWaveform image_charge_waveform(const std::vector<double>& rho22,
                                                 const CellGeometry& geom, double n_s,
                                                 double c_parasitic) {
    geom.validate();
    detail::require_positive(c_parasitic, "c_parasitic");
    ImageChargeWaveform out;
    out.delta_q.reserve(rho22.size());
    out.v_ac.reserve(rho22.size());
    const double c_total = geom.c_cell + c_parasitic;
    for (double r : rho22) {
        const double q = image_charge(r, geom, n_s);
        out.delta_q.push_back(q);
        out.v_ac.push_back(q / c_total);
    }
    return out;
}

/// <i> = 2 pi f_m e n_s C_0 delta_z rho22 / eps_0, evaluated as written.
inline double rms_image_current(double f_m, const CellGeometry& geom, double n_s, double rho22) {
    return constants::two_pi * f_m * constants::elementary_charge * n_s * geom.c_cell * geom.delta_z *
           rho22 / constants::vacuum_permittivity;
}

}  // namespace cryoamp::source
