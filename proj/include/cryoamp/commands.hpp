#pragma once

// =============================================================================
// Command implementations behind the `cryoamp` executable
// =============================================================================
// Every command reads a resolved RunConfig, writes CSV files into an output
// directory and a short human-readable summary to `log`. Exit codes:
//   0 success, 2 input/config error, 3 numerical failure,
//   4 fit-iv finished but the device failed the usability screen.
// =============================================================================

#include "cryoamp/chain.hpp"
#include "cryoamp/config.hpp"
#include "cryoamp/device.hpp"
#include "cryoamp/error.hpp"
#include "cryoamp/ivfit.hpp"
#include "cryoamp/lockin.hpp"
#include "cryoamp/source.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cryoamp::cli {

namespace exit_code {
inline constexpr int success = 0;
inline constexpr int input_error = 2;
inline constexpr int numerical_failure = 3;
inline constexpr int device_not_usable = 4;
}  // namespace exit_code

using config::detail::format_double;

inline int run_guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::input_error;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::input_error;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_code::numerical_failure;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_code::numerical_failure;
    }
}

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name);
    if (!out) throw InputError("cannot write " + (dir / name).string());
    return out;
}

enum class Stage { first, both };

/// HBT stage alone, or HBT followed by the fixed-gain second stage.
inline chain::ChainResponse build_chain(const config::RunConfig& cfg, Stage stage) {
    const auto params = cfg.resolved_device();
    std::vector<chain::StageResponse> stages{chain::default_hbt_stage(cfg.network, params, cfg.chain)};
    if (stage == Stage::both) stages.push_back(chain::default_second_stage(cfg.chain));
    return chain::cascade(std::move(stages), cfg.chain.reference_frequency);
}

// -----------------------------------------------------------------------------
// opp
// -----------------------------------------------------------------------------

struct OppReport {
    device::OperatingPoint op;
    double power = 0.0;
    device::ThermalCheck still;
    device::ThermalCheck mixing_chamber;
};

inline OppReport operating_point_report(const config::RunConfig& cfg) {
    const auto params = cfg.resolved_device();
    OppReport r;
    r.op = device::solve_operating_point(cfg.network, params);
    r.power = device::power_dissipation(r.op);
    r.still = device::thermal_budget_check(r.power, cfg.thermal.p_still, cfg.thermal.margin_ratio);
    r.mixing_chamber = device::thermal_budget_check(r.power, cfg.thermal.p_mixing_chamber, cfg.thermal.margin_ratio);
    return r;
}

inline int cmd_opp(const config::RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log) {
    const auto r = operating_point_report(cfg);
    auto csv = open_output(out_dir, "operating_point.csv");
    csv << "quantity,value,unit\n"
        << "v_be," << format_double(r.op.v_be) << ",V\n"
        << "v_ce," << format_double(r.op.v_ce) << ",V\n"
        << "i_b," << format_double(r.op.i_b) << ",A\n"
        << "i_c," << format_double(r.op.i_c) << ",A\n"
        << "power," << format_double(r.power) << ",W\n"
        << "still_margin," << format_double(r.still.margin) << ",W\n"
        << "still_ok," << (r.still.meets_margin_ratio ? 1 : 0) << ",bool\n"
        << "mixing_chamber_margin," << format_double(r.mixing_chamber.margin) << ",W\n"
        << "mixing_chamber_ok," << (r.mixing_chamber.meets_margin_ratio ? 1 : 0) << ",bool\n";

    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "operating point\n"
                  "  V_be = %.6f V\n  V_ce = %.6f V\n  I_b  = %.6g A\n  I_c  = %.6g A\n"
                  "  P    = %.4g uW\n"
                  "thermal budget (required headroom %gx)\n"
                  "  still          margin %.6g W  %s\n"
                  "  mixing chamber margin %.6g W  %s\n",
                  r.op.v_be, r.op.v_ce, r.op.i_b, r.op.i_c, r.power * 1e6, cfg.thermal.margin_ratio,
                  r.still.margin, r.still.meets_margin_ratio ? "PASS" : "FAIL", r.mixing_chamber.margin,
                  r.mixing_chamber.meets_margin_ratio ? "PASS" : "FAIL");
    log << buf;
    return exit_code::success;
}

// -----------------------------------------------------------------------------
// s21
// -----------------------------------------------------------------------------

inline std::vector<std::pair<double, double>> s21_table(const config::RunConfig& cfg, double f_min, double f_max,
                                                        std::size_t points, Stage stage) {
    return chain::s21_db(build_chain(cfg, stage), chain::log_grid(f_min, f_max, points));
}

inline int cmd_s21(const config::RunConfig& cfg, double f_min, double f_max, std::size_t points, Stage stage,
                   const std::filesystem::path& out_dir, std::ostream& log) {
    if (!(f_min > 0.0) || f_max < f_min) throw InputError("need 0 < f_min <= f_max");
    if (points == 0) throw InputError("need at least one point");
    const auto table = s21_table(cfg, f_min, f_max, points, stage);
    const std::string name = stage == Stage::first ? "s21_first.csv" : "s21_both.csv";
    auto csv = open_output(out_dir, name);
    csv << "f_Hz,s21_dB\n";
    double lo = table.front().second, hi = lo;
    for (const auto& [f, db] : table) {
        csv << format_double(f) << ',' << format_double(db) << '\n';
        lo = std::min(lo, db);
        hi = std::max(hi, db);
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "S21 (%s): %zu points, %.4g-%.4g Hz, min %.3f dB, max %.3f dB -> %s\n",
                  stage == Stage::first ? "first stage" : "two-stage", table.size(), f_min, f_max, lo, hi,
                  (out_dir / name).string().c_str());
    log << buf;
    return exit_code::success;
}

// -----------------------------------------------------------------------------
// sweep
// -----------------------------------------------------------------------------

inline std::vector<lockin::SweepPoint> run_sweep(const config::RunConfig& cfg) {
    const auto chain = build_chain(cfg, cfg.second_stage ? Stage::both : Stage::first);
    const auto s = cfg.resolved_synthesis();
    if (cfg.sweep.axis == config::SweepAxis::vbc) {
        const auto grid = ivfit::linear_grid(cfg.sweep.vbc_min, cfg.sweep.vbc_max, cfg.sweep.vbc_points);
        return lockin::sweep_vbc(grid, cfg.drive, cfg.ensemble, cfg.geometry, chain, s);
    }
    const auto grid = chain::log_grid(cfg.sweep.fm_min, cfg.sweep.fm_max, cfg.sweep.fm_points);
    return lockin::sweep_fm(grid, cfg.ensemble.v_resonance, cfg.drive, cfg.ensemble, cfg.geometry, chain, s);
}

inline void write_sweep_csv(std::ostream& out, const std::vector<lockin::SweepPoint>& pts) {
    out << "x_value,R_V,phase_rad\n";
    for (const auto& p : pts) {
        out << format_double(p.x) << ',' << format_double(p.result.amplitude_r) << ','
            << format_double(p.result.phase) << '\n';
    }
}

inline int cmd_sweep(const config::RunConfig& cfg_in, const std::filesystem::path& out_dir, std::ostream& log) {
    const auto cfg = config::resolve(cfg_in);
    const auto pts = run_sweep(cfg);
    const std::string stem = cfg.sweep.axis == config::SweepAxis::vbc ? "sweep_vbc" : "sweep_fm";
    {
        auto csv = open_output(out_dir, stem + ".csv");
        write_sweep_csv(csv, pts);
    }
    {
        auto manifest = open_output(out_dir, stem + ".manifest");
        manifest << "# cryoamp " << config::version << " run manifest; replay with --config <this file>\n";
        config::write_config(manifest, cfg);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].result.amplitude_r > pts[best].result.amplitude_r) best = i;
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s: %zu points, max R = %.6g V at x = %.6g -> %s\n", stem.c_str(), pts.size(),
                  pts.empty() ? 0.0 : pts[best].result.amplitude_r, pts.empty() ? 0.0 : pts[best].x,
                  (out_dir / (stem + ".csv")).string().c_str());
    log << buf;
    return exit_code::success;
}

// -----------------------------------------------------------------------------
// fit-iv
// -----------------------------------------------------------------------------

struct FitIvOptions {
    std::optional<std::string> input_path;   // v_be_V,i_b_A
    std::optional<std::string> output_path;  // i_b_A,v_ce_V,i_c_A[,direction]
    ivfit::EarlyFitOptions early;
    double target_i_c = 1e-4;   // A, where beta is read off
    double target_v_ce = 0.9;   // V
    double beta_for_isat = 0.0; // 0: use the fitted beta (or 160 without output data)
    double v_teff_fallback = 0.025;
    ivfit::ClassifyOptions classify;
};

struct FitIvReport {
    std::optional<ivfit::DiodeFit> diode;
    std::optional<ivfit::EarlyFit> early;
    std::optional<double> beta_f;
    std::optional<double> intrinsic_gain;
    std::optional<ivfit::DeviceClassification> classification;
};

inline FitIvReport fit_iv_report(const FitIvOptions& opt) {
    if (!opt.input_path && !opt.output_path) throw InputError("fit-iv needs --input and/or --output data");
    FitIvReport r;
    std::optional<ivfit::IVDataset> out_ds;
    if (opt.output_path) {
        out_ds = ivfit::load_iv_file(*opt.output_path);
        if (out_ds->kind != ivfit::IVKind::output_characteristics) {
            throw InputError(*opt.output_path + " does not hold output characteristics");
        }
        r.early = ivfit::fit_early_voltage(*out_ds, opt.early);
        r.beta_f = ivfit::fit_beta(*out_ds, {0.0, opt.target_v_ce, 0.0, opt.target_i_c});

        const auto fwd = out_ds->select(ivfit::SweepDirection::forward);
        if (out_ds->direction == ivfit::DatasetDirection::both) {
            const auto bwd = out_ds->select(ivfit::SweepDirection::backward);
            r.classification = ivfit::classify_transistor(fwd, &bwd, opt.classify);
        } else {
            r.classification = ivfit::classify_transistor(
                out_ds->direction == ivfit::DatasetDirection::backward ? *out_ds : fwd, nullptr, opt.classify);
        }
    }
    if (opt.input_path) {
        const auto in_ds = ivfit::load_iv_file(*opt.input_path);
        if (in_ds.kind != ivfit::IVKind::input_characteristics) {
            throw InputError(*opt.input_path + " does not hold input characteristics");
        }
        ivfit::DiodeFitOptions d;
        // The measured I_c/I_b includes the Early factor at the read-off V_ce; the
        // base current does not.
        double beta = r.beta_f.value_or(160.0);
        if (r.beta_f && r.early) beta /= 1.0 + opt.target_v_ce / r.early->v_early;
        d.beta_f = opt.beta_for_isat > 0.0 ? opt.beta_for_isat : beta;
        r.diode = ivfit::fit_diode_params(in_ds, d);
    }
    if (r.early) {
        r.intrinsic_gain = ivfit::intrinsic_gain(r.early->v_early, r.diode ? r.diode->v_teff : opt.v_teff_fallback);
    }
    return r;
}

inline int cmd_fit_iv(const FitIvOptions& opt, const std::filesystem::path& out_dir, std::ostream& log) {
    const auto r = fit_iv_report(opt);
    {
        auto csv = open_output(out_dir, "fit_report.csv");
        csv << "quantity,value,unit\n";
        if (r.diode) {
            csv << "i_sat," << format_double(r.diode->i_sat) << ",A\n"
                << "v_teff," << format_double(r.diode->v_teff) << ",V\n"
                << "diode_rms_log_residual," << format_double(r.diode->rms_log_residual) << ",1\n";
        }
        if (r.early) {
            csv << "v_early," << format_double(r.early->v_early) << ",V\n"
                << "early_r_squared," << format_double(r.early->r_squared) << ",1\n"
                << "early_curves_used," << r.early->used_labels.size() << ",1\n";
        }
        if (r.beta_f) csv << "beta_f," << format_double(*r.beta_f) << ",1\n";
        if (r.intrinsic_gain) csv << "mu_f," << format_double(*r.intrinsic_gain) << ",1\n";
        if (r.classification) csv << "verdict," << ivfit::to_string(r.classification->verdict) << ",\n";
    }
    if (r.classification) {
        auto csv = open_output(out_dir, "classification.csv");
        csv << "defect,sweep_index,v_lo_V,v_hi_V,metric\n";
        for (const auto& e : r.classification->evidence) {
            csv << (e.defect == ivfit::Defect::ndr ? "ndr" : "hysteresis") << ',' << e.sweep_index << ','
                << format_double(e.v_lo) << ',' << format_double(e.v_hi) << ',' << format_double(e.metric) << '\n';
        }
    }

    char buf[160];
    if (r.diode) {
        std::snprintf(buf, sizeof buf, "diode fit      i_sat = %.6g A, v_teff = %.6g V (rms ln residual %.3g)\n",
                      r.diode->i_sat, r.diode->v_teff, r.diode->rms_log_residual);
        log << buf;
    }
    if (r.early) {
        std::snprintf(buf, sizeof buf, "Early voltage  V_A = %.6g V from %zu curves (R^2 %.4f)\n", r.early->v_early,
                      r.early->used_labels.size(), r.early->r_squared);
        log << buf;
        for (const auto& w : r.early->warnings) log << "warning: " << w << '\n';
    }
    if (r.beta_f) {
        std::snprintf(buf, sizeof buf, "current gain   beta_F = %.6g at I_c = %.3g A, V_ce = %.3g V\n", *r.beta_f,
                      opt.target_i_c, opt.target_v_ce);
        log << buf;
    }
    if (r.intrinsic_gain) {
        std::snprintf(buf, sizeof buf, "intrinsic gain mu_f = %.6g\n", *r.intrinsic_gain);
        log << buf;
    }
    if (r.classification) {
        log << "verdict        " << ivfit::to_string(r.classification->verdict) << " ("
            << r.classification->evidence.size() << " evidence entries)\n";
        if (r.classification->verdict != ivfit::Verdict::usable) return exit_code::device_not_usable;
    }
    return exit_code::success;
}

// -----------------------------------------------------------------------------
// synth-iv
// -----------------------------------------------------------------------------

/// Writes a synthetic input/output characteristic pair generated from the
/// configured device (handy as fit-iv test input).
inline int cmd_synth_iv(const config::RunConfig& cfg, double noise_rel, const std::filesystem::path& out_dir,
                        std::ostream& log) {
    const auto params = cfg.resolved_device();
    const auto out_ds = ivfit::generate_output_family(params, ivfit::standard_base_currents(),
                                                      ivfit::standard_vce_grid(), noise_rel, cfg.seed);
    const auto in_ds = ivfit::generate_input_characteristics(params, ivfit::linear_grid(0.05, 0.3, 251), 0.91,
                                                             noise_rel, cfg.seed + 1);
    {
        auto csv = open_output(out_dir, "iv_output.csv");
        ivfit::write_iv_dataset(csv, out_ds);
    }
    {
        auto csv = open_output(out_dir, "iv_input.csv");
        ivfit::write_iv_dataset(csv, in_ds);
    }
    log << "wrote " << (out_dir / "iv_input.csv").string() << " and " << (out_dir / "iv_output.csv").string() << '\n';
    return exit_code::success;
}

}  // namespace cryoamp::cli
