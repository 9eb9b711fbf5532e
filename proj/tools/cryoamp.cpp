// cryoamp: command-line front end.

#include "cryoamp/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace cryoamp;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
};

config::RunConfig load(const Globals& g) {
    config::RunConfig cfg = g.config_path.empty() ? config::RunConfig{} : config::load_config(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

void add_globals(CLI::App& app, Globals& g) {
    app.add_option("--config", g.config_path, "INI-style run config (units in key names)");
    app.add_option("--seed", g.seed, "RNG seed for noise synthesis (integer)");
    app.add_option("--out", g.out_dir, "output directory for CSV files")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cryoamp: cryogenic HBT amplifier and Rydberg image-charge readout model"};
    app.set_version_flag("--version", std::string(config::version));
    app.require_subcommand(1);
    Globals g;
    add_globals(app, g);

    auto* fit = app.add_subcommand("fit-iv", "fit diode, Early and current-gain parameters from I-V CSV data");
    cli::FitIvOptions fit_opt;
    std::string fit_in, fit_out;
    fit->add_option("--input", fit_in, "input characteristics CSV (v_be_V,i_b_A)");
    fit->add_option("--output", fit_out, "output characteristics CSV (i_b_A,v_ce_V,i_c_A[,direction])");
    fit->add_option("--window-min", fit_opt.early.window_min, "lower edge of the Early fit window [V]")
        ->capture_default_str();
    fit->add_option("--window-max", fit_opt.early.window_max, "upper edge of the Early fit window [V]");
    fit->add_option("--label-min", fit_opt.early.label_min, "smallest base-current curve used for V_A [A]")
        ->capture_default_str();
    fit->add_option("--label-max", fit_opt.early.label_max, "largest base-current curve used for V_A [A]")
        ->capture_default_str();
    fit->add_option("--target-ic", fit_opt.target_i_c, "collector current where beta_F is read [A]")
        ->capture_default_str();
    fit->add_option("--target-vce", fit_opt.target_v_ce, "collector-emitter voltage where beta_F is read [V]")
        ->capture_default_str();
    fit->add_option("--beta", fit_opt.beta_for_isat, "beta_F used to turn I_b into I_c for the diode fit [1]; 0 = fitted");
    fit->add_option("--ndr-threshold", fit_opt.classify.ndr_threshold, "negative-slope threshold [A/V]")
        ->capture_default_str();
    fit->add_option("--hysteresis-threshold", fit_opt.classify.hysteresis_threshold,
                    "relative fwd/bwd current mismatch flagged as hysteresis [1]")
        ->capture_default_str();
    add_globals(*fit, g);

    auto* opp = app.add_subcommand("opp", "solve the DC operating point and check the thermal budget");
    add_globals(*opp, g);

    auto* s21 = app.add_subcommand("s21", "write the amplifier transmission |S21| in dB");
    double f_min = 100e3, f_max = 100e6;
    std::size_t points = 201;
    std::string stage = "both";
    s21->add_option("--f-min", f_min, "lowest frequency [Hz]")->capture_default_str();
    s21->add_option("--f-max", f_max, "highest frequency [Hz]")->capture_default_str();
    s21->add_option("--points", points, "log-spaced grid points [1]")->capture_default_str();
    s21->add_option("--stage", stage, "first (HBT stage only) or both")
        ->check(CLI::IsMember({"first", "both"}))
        ->capture_default_str();
    add_globals(*s21, g);

    auto* sweep = app.add_subcommand("sweep", "simulate a lock-in sweep over V_BC or the modulation frequency");
    std::optional<std::string> axis;
    std::optional<double> x_min, x_max;
    std::optional<std::size_t> x_points;
    sweep->add_option("--axis", axis, "vbc (bias voltage [V]) or fm (modulation frequency [Hz]); default vbc")
        ->check(CLI::IsMember({"vbc", "fm"}));
    sweep->add_option("--min", x_min, "first grid value [V for vbc, Hz for fm]");
    sweep->add_option("--max", x_max, "last grid value [V for vbc, Hz for fm]");
    sweep->add_option("--points", x_points, "grid points [1] (linear for vbc, log for fm)");
    add_globals(*sweep, g);

    auto* synth = app.add_subcommand("synth-iv", "generate synthetic I-V datasets from the configured device");
    double noise = 0.0;
    synth->add_option("--noise", noise, "relative Gaussian noise on currents [1]")->capture_default_str();
    add_globals(*synth, g);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::exit_code::input_error;
    }

    return cli::run_guarded(
        [&]() -> int {
            const std::filesystem::path out = g.out_dir;
            if (*fit) {
                if (!fit_in.empty()) fit_opt.input_path = fit_in;
                if (!fit_out.empty()) fit_opt.output_path = fit_out;
                fit_opt.v_teff_fallback = load(g).device.v_teff;
                return cli::cmd_fit_iv(fit_opt, out, std::cout);
            }
            auto cfg = load(g);
            if (*opp) return cli::cmd_opp(cfg, out, std::cout);
            if (*s21) {
                return cli::cmd_s21(cfg, f_min, f_max, points, stage == "first" ? cli::Stage::first : cli::Stage::both,
                                    out, std::cout);
            }
            if (*sweep) {
                if (axis) cfg.sweep.axis = *axis == "fm" ? config::SweepAxis::fm : config::SweepAxis::vbc;
                const bool vbc = cfg.sweep.axis == config::SweepAxis::vbc;
                if (x_min) (vbc ? cfg.sweep.vbc_min : cfg.sweep.fm_min) = *x_min;
                if (x_max) (vbc ? cfg.sweep.vbc_max : cfg.sweep.fm_max) = *x_max;
                if (x_points) (vbc ? cfg.sweep.vbc_points : cfg.sweep.fm_points) = *x_points;
                return cli::cmd_sweep(cfg, out, std::cout);
            }
            return cli::cmd_synth_iv(cfg, noise, out, std::cout);
        },
        std::cerr);
}
