#pragma once

// =============================================================================
// Run configuration
// =============================================================================
// Sectioned key/value text:
//
//   # comment
//   [network]
//   r_upper_Ohm = 574e3
//
// Keys carry SI units in their suffix so that values round-trip exactly
// through the manifest written next to every sweep. Unknown sections and keys
// are rejected.
// =============================================================================

#include "cryoamp/chain.hpp"
#include "cryoamp/device.hpp"
#include "cryoamp/error.hpp"
#include "cryoamp/lockin.hpp"
#include "cryoamp/source.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace cryoamp::config {

inline constexpr const char* version = "1.0.0";

struct ThermalSettings {
    double p_still = 33e-3;          // W
    double p_mixing_chamber = 420e-6; // W
    double margin_ratio = 10.0;
};

enum class SweepAxis { vbc, fm };

struct SweepGrid {
    SweepAxis axis = SweepAxis::vbc;
    double vbc_min = 10.0;
    double vbc_max = 12.0;
    std::size_t vbc_points = 81;
    double fm_min = 100e3;
    double fm_max = 10e6;
    std::size_t fm_points = 41;
};

struct RunConfig {
    device::TransistorParams device;
    bool i_sat_auto = true;
    double target_i_c = 1e-4;
    device::BiasNetwork network;
    source::CellGeometry geometry;
    double c_parasitic = 10e-12;
    source::EnsembleParams ensemble;
    source::DriveWaveform drive;
    chain::ChainSettings chain;
    bool second_stage = true;
    lockin::SweepSettings synthesis;
    ThermalSettings thermal;
    SweepGrid sweep;
    std::uint64_t seed = 0;

    /// Device parameters with i_sat back-solved when it is left on auto.
    device::TransistorParams resolved_device() const {
        if (!i_sat_auto) return device;
        return device::calibrate_saturation_current(network, device, target_i_c);
    }

    lockin::SweepSettings resolved_synthesis() const {
        auto s = synthesis;
        s.seed = seed;
        s.c_parasitic = c_parasitic;
        return s;
    }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, std::size_t line, const std::string& key) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("line " + std::to_string(line) + ": " + key + " expects a number");
    }
    return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::size_t line, const std::string& key) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("line " + std::to_string(line) + ": " + key + " expects a non-negative integer");
    }
    return v;
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct Field {
    std::string section;
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view, std::size_t)> set;
};

template <typename Access>
Field number(std::string section, std::string key, Access access) {
    const std::string name = section + "." + key;
    return {std::move(section), std::move(key),
            [access](const RunConfig& c) { return format_double(access(const_cast<RunConfig&>(c))); },
            [access, name](RunConfig& c, std::string_view v, std::size_t line) {
                access(c) = parse_double(v, line, name);
            }};
}

template <typename Access>
Field integer(std::string section, std::string key, Access access) {
    const std::string name = section + "." + key;
    return {std::move(section), std::move(key),
            [access](const RunConfig& c) { return std::to_string(access(const_cast<RunConfig&>(c))); },
            [access, name](RunConfig& c, std::string_view v, std::size_t line) {
                using T = std::remove_reference_t<decltype(access(c))>;
                access(c) = static_cast<T>(parse_uint(v, line, name));
            }};
}

/// Number that may also be `auto`.
template <typename Access, typename Flag>
Field number_or_auto(std::string section, std::string key, Access access, Flag is_auto) {
    const std::string name = section + "." + key;
    return {std::move(section), std::move(key),
            [access, is_auto](const RunConfig& c) {
                auto& m = const_cast<RunConfig&>(c);
                return is_auto(m) ? std::string("auto") : format_double(access(m));
            },
            [access, is_auto, name](RunConfig& c, std::string_view v, std::size_t line) {
                if (v == "auto") {
                    is_auto(c) = true;
                } else {
                    is_auto(c) = false;
                    access(c) = parse_double(v, line, name);
                }
            }};
}

inline Field boolean(std::string section, std::string key, std::function<bool&(RunConfig&)> access) {
    const std::string name = section + "." + key;
    return {std::move(section), std::move(key),
            [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)) ? "true" : "false"; },
            [access, name](RunConfig& c, std::string_view v, std::size_t line) {
                if (v == "true" || v == "on" || v == "1") {
                    access(c) = true;
                } else if (v == "false" || v == "off" || v == "0") {
                    access(c) = false;
                } else {
                    throw ConfigError("line " + std::to_string(line) + ": " + name + " expects true/false");
                }
            }};
}

inline const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        using C = RunConfig;
        f.push_back(number_or_auto("device", "i_sat_A", [](C& c) -> double& { return c.device.i_sat; },
                                   [](C& c) -> bool& { return c.i_sat_auto; }));
        f.push_back(number("device", "v_teff_V", [](C& c) -> double& { return c.device.v_teff; }));
        f.push_back(number("device", "v_early_V", [](C& c) -> double& { return c.device.v_early; }));
        f.push_back(number("device", "beta_f", [](C& c) -> double& { return c.device.beta_f; }));
        f.push_back(number("device", "target_i_c_A", [](C& c) -> double& { return c.target_i_c; }));

        f.push_back(number("network", "v_supply_V", [](C& c) -> double& { return c.network.v_supply; }));
        f.push_back(number("network", "r_upper_Ohm", [](C& c) -> double& { return c.network.r_upper; }));
        f.push_back(number("network", "r_lower_Ohm", [](C& c) -> double& { return c.network.r_lower; }));
        f.push_back(number("network", "r_collector_Ohm", [](C& c) -> double& { return c.network.r_collector; }));
        f.push_back(number("network", "r_emitter_Ohm", [](C& c) -> double& { return c.network.r_emitter; }));
        f.push_back(number("network", "c_in_F", [](C& c) -> double& { return c.network.c_in; }));
        f.push_back(number("network", "c_out_F", [](C& c) -> double& { return c.network.c_out; }));
        f.push_back(number("network", "c_bypass_F", [](C& c) -> double& { return c.network.c_bypass; }));

        f.push_back(number("geometry", "c_cell_F", [](C& c) -> double& { return c.geometry.c_cell; }));
        f.push_back(number("geometry", "s_over_d_m", [](C& c) -> double& { return c.geometry.s_over_d; }));
        f.push_back(number("geometry", "delta_z_m", [](C& c) -> double& { return c.geometry.delta_z; }));
        f.push_back(number("geometry", "c_parasitic_F", [](C& c) -> double& { return c.c_parasitic; }));

        f.push_back(number("ensemble", "n_s_per_m2", [](C& c) -> double& { return c.ensemble.n_s; }));
        f.push_back(number("ensemble", "rho22_target", [](C& c) -> double& { return c.ensemble.rho22_target; }));
        f.push_back(number("ensemble", "tau_relax_s", [](C& c) -> double& { return c.ensemble.tau_relax; }));
        f.push_back(number("ensemble", "v_resonance_V", [](C& c) -> double& { return c.ensemble.v_resonance; }));
        f.push_back(number("ensemble", "linewidth_V", [](C& c) -> double& { return c.ensemble.linewidth_v; }));
        f.push_back(number("ensemble", "f_mw_Hz", [](C& c) -> double& { return c.ensemble.f_mw; }));

        f.push_back(number("drive", "f_m_Hz", [](C& c) -> double& { return c.drive.f_m; }));
        f.push_back(number("drive", "duty", [](C& c) -> double& { return c.drive.duty; }));
        f.push_back({"drive", "excitation_rate_per_s",
                     [](const C& c) {
                         return c.drive.excitation_rate < 0.0 ? std::string("auto")
                                                              : format_double(c.drive.excitation_rate);
                     },
                     [](C& c, std::string_view v, std::size_t line) {
                         c.drive.excitation_rate =
                             v == "auto" ? -1.0 : parse_double(v, line, "drive.excitation_rate_per_s");
                     }});

        f.push_back({"chain", "hbt_load_Ohm",
                     [](const C& c) {
                         return c.chain.hbt_load > 0.0 ? format_double(c.chain.hbt_load) : std::string("auto");
                     },
                     [](C& c, std::string_view v, std::size_t line) {
                         c.chain.hbt_load = v == "auto" ? 0.0 : parse_double(v, line, "chain.hbt_load_Ohm");
                     }});
        f.push_back(number("chain", "hbt_source_resistance_Ohm",
                           [](C& c) -> double& { return c.chain.hbt_source_resistance; }));
        f.push_back(number("chain", "hbt_noise_temperature_K",
                           [](C& c) -> double& { return c.chain.hbt_noise_temperature; }));
        f.push_back(boolean("chain", "second_stage", [](C& c) -> bool& { return c.second_stage; }));
        f.push_back(number("chain", "second_gain_dB", [](C& c) -> double& { return c.chain.second_gain_db; }));
        f.push_back(number("chain", "second_f_low_Hz", [](C& c) -> double& { return c.chain.second_f_low; }));
        f.push_back(number("chain", "second_f_high_Hz", [](C& c) -> double& { return c.chain.second_f_high; }));
        f.push_back(number("chain", "second_noise_temperature_K",
                           [](C& c) -> double& { return c.chain.second_noise_temperature; }));
        f.push_back(number("chain", "reference_Hz", [](C& c) -> double& { return c.chain.reference_frequency; }));

        f.push_back(integer("synthesis", "samples_per_period",
                            [](C& c) -> std::size_t& { return c.synthesis.samples_per_period; }));
        f.push_back(integer("synthesis", "min_periods", [](C& c) -> std::size_t& { return c.synthesis.min_periods; }));
        f.push_back(number("synthesis", "settle_time_constants",
                           [](C& c) -> double& { return c.synthesis.settle_time_constants; }));
        f.push_back(number("synthesis", "input_noise_density_V_per_rtHz",
                           [](C& c) -> double& { return c.synthesis.input_noise_density; }));
        f.push_back(number("synthesis", "lockin_time_constant_s",
                           [](C& c) -> double& { return c.synthesis.time_constant; }));
        f.push_back(integer("synthesis", "lockin_filter_order", [](C& c) -> int& { return c.synthesis.filter_order; }));
        f.push_back(integer("synthesis", "threads", [](C& c) -> unsigned& { return c.synthesis.threads; }));

        f.push_back(number("thermal", "p_still_W", [](C& c) -> double& { return c.thermal.p_still; }));
        f.push_back(number("thermal", "p_mixing_chamber_W", [](C& c) -> double& { return c.thermal.p_mixing_chamber; }));
        f.push_back(number("thermal", "margin_ratio", [](C& c) -> double& { return c.thermal.margin_ratio; }));

        f.push_back({"sweep", "axis", [](const C& c) { return std::string(c.sweep.axis == SweepAxis::vbc ? "vbc" : "fm"); },
                     [](C& c, std::string_view v, std::size_t line) {
                         if (v == "vbc") {
                             c.sweep.axis = SweepAxis::vbc;
                         } else if (v == "fm") {
                             c.sweep.axis = SweepAxis::fm;
                         } else {
                             throw ConfigError("line " + std::to_string(line) + ": sweep.axis must be vbc or fm");
                         }
                     }});
        f.push_back(number("sweep", "vbc_min_V", [](C& c) -> double& { return c.sweep.vbc_min; }));
        f.push_back(number("sweep", "vbc_max_V", [](C& c) -> double& { return c.sweep.vbc_max; }));
        f.push_back(integer("sweep", "vbc_points", [](C& c) -> std::size_t& { return c.sweep.vbc_points; }));
        f.push_back(number("sweep", "fm_min_Hz", [](C& c) -> double& { return c.sweep.fm_min; }));
        f.push_back(number("sweep", "fm_max_Hz", [](C& c) -> double& { return c.sweep.fm_max; }));
        f.push_back(integer("sweep", "fm_points", [](C& c) -> std::size_t& { return c.sweep.fm_points; }));

        f.push_back(integer("run", "seed", [](C& c) -> std::uint64_t& { return c.seed; }));
        f.push_back({"run", "version", [](const C&) { return std::string(version); },
                     [](C&, std::string_view, std::size_t) {}});
        return f;
    }();
    return table;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    const auto& table = detail::fields();
    while (std::getline(in, line)) {
        ++line_no;
        auto text = detail::trim(line);
        if (const auto hash = text.find_first_of("#;"); hash != std::string_view::npos) {
            text = detail::trim(text.substr(0, hash));
        }
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            section = std::string(detail::trim(text.substr(1, text.size() - 2)));
            const bool known = std::any_of(table.begin(), table.end(),
                                           [&](const detail::Field& f) { return f.section == section; });
            if (!known) throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
        const std::string key(detail::trim(text.substr(0, eq)));
        const auto value = detail::trim(text.substr(eq + 1));
        const auto it = std::find_if(table.begin(), table.end(),
                                     [&](const detail::Field& f) { return f.section == section && f.key == key; });
        if (it == table.end()) {
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key " + section + "." + key);
        }
        it->set(cfg, value, line_no);
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    return parse_config(in);
}

/// Writes every field, grouped by section, in a form parse_config reads back
/// to an identical RunConfig.
inline void write_config(std::ostream& out, const RunConfig& cfg) {
    std::string section;
    for (const auto& f : detail::fields()) {
        if (f.section != section) {
            if (!section.empty()) out << '\n';
            section = f.section;
            out << '[' << section << "]\n";
        }
        out << f.key << " = " << f.get(cfg) << '\n';
    }
}

/// Manifest: the resolved configuration (auto values replaced by what was
/// used) so that replaying it reproduces the run.
inline RunConfig resolve(RunConfig cfg) {
    if (cfg.i_sat_auto) {
        cfg.device = cfg.resolved_device();
        cfg.i_sat_auto = false;
    }
    return cfg;
}

}  // namespace cryoamp::config
