#pragma once

// =============================================================================
// Time-domain synthesis and software lock-in detection
// =============================================================================

#include "cryoamp/chain.hpp"
#include "cryoamp/constants.hpp"
#include "cryoamp/error.hpp"
#include "cryoamp/fft.hpp"
#include "cryoamp/source.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <span>
#include <thread>
#include <vector>

namespace cryoamp::lockin {

struct SampledSignal {
    double sample_rate = 0.0;  // Hz
    std::vector<double> values;

    double duration() const { return static_cast<double>(values.size()) / sample_rate; }
};

struct SynthesisConfig {
    double sample_rate = 0.0;          // Hz
    double duration = 0.0;             // s
    std::uint64_t noise_seed = 0;
    double input_noise_density = 0.0;  // V/sqrt(Hz), referred to the chain input
};

struct LockInResult {
    double amplitude_r = 0.0;  // V rms
    double phase = 0.0;        // rad, (-pi, pi]
    double f_ref = 0.0;
    double time_constant = 0.0;
};

/// Random stream for (seed, stream index); independent of evaluation order.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

/// Applies the chain response in the frequency domain to (source + input noise).
/// The record is treated as one period of a periodic signal.
inline SampledSignal synthesize(const SampledSignal& source, const chain::ChainResponse& chain,
                                const SynthesisConfig& cfg, std::uint64_t stream = 0) {
    if (!(cfg.sample_rate > 0.0)) throw ConfigError("sample_rate must be positive");
    if (std::abs(source.sample_rate - cfg.sample_rate) > 1e-12 * cfg.sample_rate) {
        throw ConfigError("source sample rate does not match the synthesis config");
    }
    const auto expected = static_cast<std::size_t>(std::llround(cfg.duration * cfg.sample_rate));
    if (expected != source.values.size() || expected == 0) {
        throw ConfigError("duration x sample_rate = " + std::to_string(expected) + " samples, source has " +
                          std::to_string(source.values.size()));
    }
    if (!(cfg.input_noise_density >= 0.0)) throw ConfigError("noise density must be non-negative");

    std::vector<double> x = source.values;
    if (cfg.input_noise_density > 0.0) {
        auto rng = make_rng(cfg.noise_seed, stream);
        std::normal_distribution<double> gauss(0.0, cfg.input_noise_density * std::sqrt(0.5 * cfg.sample_rate));
        for (double& v : x) v += gauss(rng);
    }

    const std::size_t n = x.size();
    auto spectrum = fft::forward(x);
    const double df = cfg.sample_rate / static_cast<double>(n);
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        spectrum[k] *= chain.evaluate(static_cast<double>(k) * df);
    }
    return {cfg.sample_rate, fft::inverse(spectrum, n)};
}

/// Quadrature lock-in: mixes with unit-rms sine/cosine references, low-passes
/// with `filter_order` cascaded single-pole sections and reads the final value.
inline LockInResult demodulate(const SampledSignal& x, double f_ref, double time_constant,
                               int filter_order = 4) {
    if (!(f_ref > 0.0) || !(x.sample_rate >= 10.0 * f_ref)) {
        throw ConfigError("reference frequency not resolvable (need >= 10 samples per period)");
    }
    if (!(time_constant > 0.0)) throw ConfigError("time constant must be positive");
    if (filter_order < 1) throw ConfigError("filter order must be at least 1");
    if (x.duration() < 20.0 * time_constant * (1.0 - 1e-9)) {
        throw ConfigError("record shorter than 20 time constants");
    }

    const double alpha = -std::expm1(-1.0 / (x.sample_rate * time_constant));
    const double cycles_per_sample = f_ref / x.sample_rate;
    std::vector<double> sx(static_cast<std::size_t>(filter_order), 0.0);
    std::vector<double> sy(static_cast<std::size_t>(filter_order), 0.0);
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        double cycles = static_cast<double>(i) * cycles_per_sample;
        cycles -= std::floor(cycles);
        const double arg = constants::two_pi * cycles;
        double ux = x.values[i] * std::numbers::sqrt2 * std::sin(arg);
        double uy = x.values[i] * std::numbers::sqrt2 * std::cos(arg);
        for (int k = 0; k < filter_order; ++k) {
            sx[k] += alpha * (ux - sx[k]);
            sy[k] += alpha * (uy - sy[k]);
            ux = sx[k];
            uy = sy[k];
        }
    }
    const double xr = sx.back();
    const double yr = sy.back();
    double phase = std::atan2(yr, xr);
    if (phase <= -constants::pi) phase += constants::two_pi;
    return {std::hypot(xr, yr), phase, f_ref, time_constant};
}

/// |c_1| / sqrt(2) of the f_ref Fourier component of x by direct DFT over an
/// integer number of reference periods.
inline double dft_fundamental_rms(std::span<const double> x, double sample_rate, double f_ref) {
    double re = 0.0, im = 0.0;
    const double cycles_per_sample = f_ref / sample_rate;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double cycles = static_cast<double>(i) * cycles_per_sample;
        cycles -= std::floor(cycles);
        re += x[i] * std::cos(constants::two_pi * cycles);
        im -= x[i] * std::sin(constants::two_pi * cycles);
    }
    const double n = static_cast<double>(x.size());
    return 2.0 * std::hypot(re, im) / n / std::numbers::sqrt2;
}

// -----------------------------------------------------------------------------
// Figure sweeps
// -----------------------------------------------------------------------------

struct SweepSettings {
    double time_constant = 1e-3;           // lock-in tau, s
    int filter_order = 4;
    std::size_t samples_per_period = 32;
    std::size_t min_periods = 200;
    double settle_time_constants = 20.0;
    double input_noise_density = 35e-12;   // V/sqrt(Hz)
    std::uint64_t seed = 0;
    double c_parasitic = 10e-12;           // F, first-stage cable
    unsigned threads = 0;                  // 0: hardware concurrency
};

struct SweepPoint {
    double x = 0.0;
    LockInResult result;
};

/// One full pipeline evaluation: resonance -> population -> image charge ->
/// amplified record -> lock-in.
inline LockInResult measure_point(double v_bc, double f_m, const source::DriveWaveform& drive,
                                  const source::EnsembleParams& ens, const source::CellGeometry& geom,
                                  const chain::ChainResponse& chain, const SweepSettings& s,
                                  std::uint64_t stream) {
    source::DriveWaveform d = drive;
    d.f_m = f_m;
    const double scale = source::stark_excitation_fraction(v_bc, ens);
    const auto periods = static_cast<std::size_t>(std::max<double>(
        static_cast<double>(s.min_periods), std::ceil(s.settle_time_constants * s.time_constant * f_m - 1e-9)));
    auto pop = source::rydberg_population(d, ens, scale, periods, s.samples_per_period);

    SampledSignal v{pop.sample_rate, {}};
    {
        auto wave = source::image_charge_waveform(pop.rho22, geom, ens.n_s, s.c_parasitic);
        v.values = std::move(wave.v_ac);
    }
    pop.rho22 = {};

    SynthesisConfig cfg;
    cfg.sample_rate = v.sample_rate;
    cfg.duration = static_cast<double>(v.values.size()) / v.sample_rate;
    cfg.noise_seed = s.seed;
    cfg.input_noise_density = s.input_noise_density;
    const auto y = synthesize(v, chain, cfg, stream);
    return demodulate(y, f_m, s.time_constant, s.filter_order);
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

inline std::vector<SweepPoint> sweep_vbc(const std::vector<double>& v_bc_grid, const source::DriveWaveform& drive,
                                         const source::EnsembleParams& ens, const source::CellGeometry& geom,
                                         const chain::ChainResponse& chain, const SweepSettings& s) {
    if (!std::is_sorted(v_bc_grid.begin(), v_bc_grid.end())) throw InputError("V_BC grid must be sorted");
    ens.validate();
    std::vector<SweepPoint> out(v_bc_grid.size());
    detail::parallel_for(v_bc_grid.size(), s.threads, [&](std::size_t i) {
        out[i] = {v_bc_grid[i], measure_point(v_bc_grid[i], drive.f_m, drive, ens, geom, chain, s, i)};
    });
    return out;
}

inline std::vector<SweepPoint> sweep_fm(const std::vector<double>& f_m_grid, double v_bc,
                                        const source::DriveWaveform& drive, const source::EnsembleParams& ens,
                                        const source::CellGeometry& geom, const chain::ChainResponse& chain,
                                        const SweepSettings& s, bool allow_out_of_band = false) {
    if (!allow_out_of_band) {
        for (double f : f_m_grid) {
            if (f < 100e3 * (1.0 - 1e-12) || f > 100e6 * (1.0 + 1e-12)) {
                throw InputError("modulation frequency outside [100 kHz, 100 MHz]");
            }
        }
    }
    ens.validate();
    std::vector<SweepPoint> out(f_m_grid.size());
    detail::parallel_for(f_m_grid.size(), s.threads, [&](std::size_t i) {
        out[i] = {f_m_grid[i], measure_point(v_bc, f_m_grid[i], drive, ens, geom, chain, s, i)};
    });
    return out;
}

}  // namespace cryoamp::lockin
