#pragma once

// =============================================================================
// Frequency-domain amplifier chain
// =============================================================================
// A stage is a real, minimum-phase rational response
//
//   H(f) = gain_factor * prod (1 + jf/f_z) / prod (1 + jf/f_p)
//                      * prod_hp (jf/f_h) / (1 + jf/f_h)
//                      * prod_lp 1 / (1 + jf/f_l)
//
// Noise is referred to the chain input and accumulated with the Friis rule on
// power gains evaluated at a reference frequency.
// =============================================================================

#include "cryoamp/constants.hpp"
#include "cryoamp/device.hpp"
#include "cryoamp/error.hpp"

#include <cmath>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

namespace cryoamp::chain {

using Complex = std::complex<double>;

inline constexpr double default_reference_frequency = 10e6;

struct StageResponse {
    double gain_factor = 1.0;
    std::vector<double> zeros;           // Hz, (1 + jf/f_z)
    std::vector<double> poles;           // Hz, 1 / (1 + jf/f_p)
    std::vector<double> highpass;        // Hz, (jf/f_h) / (1 + jf/f_h)
    std::vector<double> lowpass;         // Hz, 1 / (1 + jf/f_l)
    double noise_temperature = 0.0;      // K
    std::optional<double> input_noise_density;  // V/sqrt(Hz)

    Complex evaluate(double f) const {
        Complex h{gain_factor, 0.0};
        const Complex jf{0.0, f};
        for (double z : zeros) h *= 1.0 + jf / z;
        for (double p : poles) h /= 1.0 + jf / p;
        for (double c : highpass) h *= (jf / c) / (1.0 + jf / c);
        for (double c : lowpass) h /= 1.0 + jf / c;
        return h;
    }
};

struct ChainResponse {
    std::vector<StageResponse> stages;
    double reference_frequency = default_reference_frequency;

    Complex evaluate(double f) const {
        Complex h{1.0, 0.0};
        for (const auto& s : stages) h *= s.evaluate(f);
        return h;
    }

    /// Input-referred noise temperature, Friis on |H_k(f)|^2.
    double noise_temperature(double f) const {
        double total = 0.0;
        double preceding_gain = 1.0;
        for (std::size_t k = 0; k < stages.size(); ++k) {
            if (k > 0 && preceding_gain == 0.0) {
                throw NumericalError("zero gain ahead of stage " + std::to_string(k) +
                                     ": noise cannot be referred to the input");
            }
            total += k == 0 ? stages[k].noise_temperature : stages[k].noise_temperature / preceding_gain;
            preceding_gain *= std::norm(stages[k].evaluate(f));
        }
        return total;
    }

    double noise_temperature() const { return noise_temperature(reference_frequency); }
};

struct CouplingNetwork {
    double c_cell = 1e-12;        // C_0
    double c_parasitic = 10e-12;  // C_p
    double r_input = 50.0;        // R
};

inline double corner_frequency(const CouplingNetwork& net) {
    detail::require_positive(net.r_input, "r_input");
    detail::require_positive(net.c_parasitic, "c_parasitic");
    return 1.0 / (constants::two_pi * net.r_input * net.c_parasitic);
}

inline double capacitive_division(double delta_q, const CouplingNetwork& net) {
    if (!(delta_q >= 0.0)) throw DomainError("delta_q must be non-negative");
    return delta_q / (net.c_cell + net.c_parasitic);
}

inline double parallel(double a, double b) {
    if (std::isinf(a)) return b;
    if (std::isinf(b)) return a;
    return a * b / (a + b);
}

/// |A_v| = g_m (R_3 || r_o || R_load) with the emitter fully bypassed.
inline double bypassed_midband_gain(const device::SmallSignalParams& ss, double r_collector,
                                    double load_resistance) {
    return ss.g_m * parallel(parallel(r_collector, ss.r_o), load_resistance);
}

/// Load resistance that makes the bypassed mid-band gain exactly `target`.
inline double load_for_gain(const device::SmallSignalParams& ss, double r_collector, double target = 1.0) {
    detail::require_positive(target, "target gain");
    const double g_load = ss.g_m / target - 1.0 / r_collector - 1.0 / ss.r_o;
    if (!(g_load > 0.0)) throw DomainError("requested gain is not reachable with any passive load");
    return 1.0 / g_load;
}

/// Common-emitter stage: inverting mid-band gain -g_m (R_3 || r_o || R_load),
/// high-pass corners from C_1 and C_2, and a low-frequency shelf where C_3
/// stops bypassing R_4. Infinite capacitors remove the corresponding corner.
inline StageResponse hbt_stage_response(const device::SmallSignalParams& ss, const device::BiasNetwork& net,
                                        double load_resistance, double source_resistance = 50.0,
                                        double beta_f = 160.0) {
    if (!(load_resistance > 0.0)) throw DomainError("load resistance must be positive");
    detail::require_positive(ss.g_m, "g_m");
    const double r_out = parallel(net.r_collector, ss.r_o);
    const double midband = -ss.g_m * parallel(r_out, load_resistance);

    StageResponse st;
    st.noise_temperature = 2.0;

    if (std::isfinite(net.c_bypass)) {
        const double k = ss.g_m * net.r_emitter * (beta_f + 1.0) / beta_f;
        const double w = 1.0 / (net.r_emitter * net.c_bypass);
        st.zeros.push_back(w / constants::two_pi);
        st.poles.push_back((1.0 + k) * w / constants::two_pi);
        st.gain_factor = midband / (1.0 + k);
    } else {
        st.gain_factor = midband;
    }

    if (std::isfinite(net.c_in)) {
        const double r_in = parallel(parallel(net.r_lower, net.r_upper), ss.r_pi);
        st.highpass.push_back(1.0 / (constants::two_pi * (source_resistance + r_in) * net.c_in));
    }
    if (std::isfinite(net.c_out)) {
        st.highpass.push_back(1.0 / (constants::two_pi * (r_out + load_resistance) * net.c_out));
    }
    return st;
}

/// Fixed-gain amplifier with one high-pass and one low-pass pole.
inline StageResponse fixed_gain_stage(double gain_db, double f_low, double f_high, double noise_temperature) {
    if (!(f_low < f_high)) throw DomainError("f_low must be below f_high");
    StageResponse st;
    st.gain_factor = std::pow(10.0, gain_db / 20.0);
    if (f_low > 0.0) st.highpass.push_back(f_low);
    if (std::isfinite(f_high)) st.lowpass.push_back(f_high);
    st.noise_temperature = noise_temperature;
    return st;
}

inline ChainResponse cascade(std::vector<StageResponse> stages,
                             double reference_frequency = default_reference_frequency) {
    if (stages.empty()) throw DomainError("cascade needs at least one stage");
    ChainResponse out{std::move(stages), reference_frequency};
    for (std::size_t k = 0; k + 1 < out.stages.size(); ++k) {
        if (out.stages[k].gain_factor == 0.0) {
            throw NumericalError("zero mid-band gain in a non-final stage");
        }
    }
    (void)out.noise_temperature();
    return out;
}

inline std::vector<std::pair<double, double>> s21_db(const ChainResponse& chain,
                                                     const std::vector<double>& frequencies) {
    std::vector<std::pair<double, double>> out;
    out.reserve(frequencies.size());
    for (double f : frequencies) {
        if (!(f > 0.0)) throw DomainError("frequencies must be positive");
        out.emplace_back(f, 20.0 * std::log10(std::abs(chain.evaluate(f))));
    }
    return out;
}

inline double snr_db(double signal_rms, double input_noise_density, double bandwidth) {
    detail::require_positive(signal_rms, "signal_rms");
    detail::require_positive(input_noise_density, "input_noise_density");
    detail::require_positive(bandwidth, "bandwidth");
    return 20.0 * std::log10(signal_rms / (input_noise_density * std::sqrt(bandwidth)));
}

/// Log-spaced grid with `points` entries from f_min to f_max inclusive.
inline std::vector<double> log_grid(double f_min, double f_max, std::size_t points) {
    detail::require_positive(f_min, "f_min");
    if (!(f_max >= f_min)) throw DomainError("f_max must not be below f_min");
    if (points == 0) throw DomainError("grid needs at least one point");
    if (f_min == f_max || points == 1) return {f_min};
    std::vector<double> out(points);
    const double a = std::log10(f_min);
    const double b = std::log10(f_max);
    for (std::size_t i = 0; i < points; ++i) {
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    out.front() = f_min;
    out.back() = f_max;
    return out;
}

// -----------------------------------------------------------------------------
// Default two-stage readout
// -----------------------------------------------------------------------------

struct ChainSettings {
    double hbt_load = 0.0;  // Ohm; 0 = tune for unity mid-band gain
    double hbt_source_resistance = 50.0;
    double hbt_noise_temperature = 2.0;
    double second_gain_db = 40.0;
    double second_f_low = 150e3;
    double second_f_high = 1.5e9;
    double second_noise_temperature = 6.0;
    double reference_frequency = default_reference_frequency;
};

inline StageResponse default_hbt_stage(const device::BiasNetwork& net, const device::TransistorParams& params,
                                       const ChainSettings& cs = {}) {
    const auto op = device::solve_operating_point(net, params);
    const auto ss = device::small_signal(op, params);
    const double load = cs.hbt_load > 0.0 ? cs.hbt_load : load_for_gain(ss, net.r_collector, 1.0);
    auto st = hbt_stage_response(ss, net, load, cs.hbt_source_resistance, params.beta_f);
    st.noise_temperature = cs.hbt_noise_temperature;
    return st;
}

inline StageResponse default_second_stage(const ChainSettings& cs = {}) {
    return fixed_gain_stage(cs.second_gain_db, cs.second_f_low, cs.second_f_high, cs.second_noise_temperature);
}

}  // namespace cryoamp::chain
