#pragma once

// =============================================================================
// IV characteristics: CSV ingest, parameter extraction, usability screening
// =============================================================================
// Two dataset kinds are handled:
//   input characteristics   one sweep of (v_be, i_b)            `v_be_V,i_b_A`
//   output characteristics  (v_ce, i_c) sweeps labelled by i_b  `i_b_A,v_ce_V,i_c_A[,direction]`
// =============================================================================

#include "cryoamp/device.hpp"
#include "cryoamp/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cryoamp::ivfit {

enum class IVKind { input_characteristics, output_characteristics };
enum class SweepDirection { forward, backward };
enum class DatasetDirection { forward, backward, both };

struct IVPoint {
    double v = 0.0;
    double i = 0.0;
};

struct IVSweep {
    double label = 0.0;  // i_b (A) for output sweeps, unused for input sweeps
    SweepDirection direction = SweepDirection::forward;
    std::vector<IVPoint> points;  // ascending voltage
};

struct IVDataset {
    IVKind kind = IVKind::output_characteristics;
    std::vector<IVSweep> sweeps;
    DatasetDirection direction = DatasetDirection::forward;

    /// Sweeps of one direction, in label order.
    IVDataset select(SweepDirection dir) const {
        IVDataset out{kind, {}, dir == SweepDirection::forward ? DatasetDirection::forward
                                                                 : DatasetDirection::backward};
        for (const auto& s : sweeps) {
            if (s.direction == dir) out.sweeps.push_back(s);
        }
        return out;
    }
};

// -----------------------------------------------------------------------------
// CSV
// -----------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline double parse_number(std::string_view s, std::size_t line) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ParseError(line, "not a finite number: '" + std::string(s) + "'");
    }
    return v;
}

struct RawRow {
    double label;
    std::optional<SweepDirection> direction;
    IVPoint p;
    std::size_t line;
};

inline int sign(double x) { return (x > 0.0) - (x < 0.0); }

inline void finish_sweep(std::vector<IVSweep>& out, std::vector<IVPoint> pts, double label, int dir_sign,
                         std::optional<SweepDirection> declared, std::size_t line) {
    if (pts.size() < 2) throw ParseError(line, "sweep needs at least 2 points");
    SweepDirection dir = declared ? *declared : (dir_sign >= 0 ? SweepDirection::forward : SweepDirection::backward);
    std::sort(pts.begin(), pts.end(), [](const IVPoint& a, const IVPoint& b) { return a.v < b.v; });
    out.push_back({label, dir, std::move(pts)});
}

/// Splits one contiguous block into monotone sweeps. Without a declared
/// direction one reversal is allowed (the turning point starts the second
/// sweep); with a declared direction the block must be monotone.
inline void split_block(std::vector<IVSweep>& out, const std::vector<RawRow>& rows) {
    const bool declared = rows.front().direction.has_value();
    std::vector<IVPoint> seg;
    int dir = 0;
    int segments = 1;
    std::size_t seg_line = rows.front().line;
    for (const auto& r : rows) {
        if (seg.empty()) {
            seg.push_back(r.p);
            continue;
        }
        const int s = sign(r.p.v - seg.back().v);
        if (dir == 0) {
            if (s == 0) throw ParseError(r.line, "repeated voltage within a sweep");
            dir = s;
            seg.push_back(r.p);
            continue;
        }
        if (s == dir) {
            seg.push_back(r.p);
            continue;
        }
        if (declared || segments == 2) throw ParseError(r.line, "voltage is not monotone within the sweep");
        const IVPoint turn = seg.back();
        finish_sweep(out, std::move(seg), rows.front().label, dir, std::nullopt, seg_line);
        seg.clear();
        ++segments;
        seg_line = r.line;
        if (s != 0) seg.push_back(turn);
        seg.push_back(r.p);
        dir = s == 0 ? 0 : s;
    }
    finish_sweep(out, std::move(seg), rows.front().label, dir, rows.front().direction, seg_line);
    if (segments == 2 && out[out.size() - 1].direction == out[out.size() - 2].direction) {
        throw ParseError(rows.back().line, "second half of a turning sweep must reverse direction");
    }
}

}  // namespace detail

inline IVDataset load_iv_dataset(std::istream& in) {
    std::string text;
    std::size_t line_no = 0;
    std::vector<std::string_view> header;
    std::string header_line;
    while (std::getline(in, text)) {
        ++line_no;
        if (!detail::trim(text).empty()) {
            header_line = text;
            break;
        }
    }
    if (header_line.empty()) throw ParseError(line_no == 0 ? 1 : line_no, "missing header row");
    if (header_line.size() >= 3 && static_cast<unsigned char>(header_line[0]) == 0xEF) header_line.erase(0, 3);
    header = detail::split(header_line);
    const std::size_t header_line_no = line_no;

    IVDataset ds;
    bool has_direction = false;
    if (header.size() == 2 && header[0] == "v_be_V" && header[1] == "i_b_A") {
        ds.kind = IVKind::input_characteristics;
    } else if ((header.size() == 3 || header.size() == 4) && header[0] == "i_b_A" && header[1] == "v_ce_V" &&
               header[2] == "i_c_A" && (header.size() == 3 || header[3] == "direction")) {
        ds.kind = IVKind::output_characteristics;
        has_direction = header.size() == 4;
    } else {
        throw ParseError(header_line_no, "unrecognized header '" + std::string(detail::trim(header_line)) + "'");
    }

    std::vector<detail::RawRow> rows;
    while (std::getline(in, text)) {
        ++line_no;
        if (detail::trim(text).empty()) continue;
        const auto f = detail::split(text);
        if (f.size() != header.size()) {
            throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                          std::to_string(f.size()));
        }
        detail::RawRow r{0.0, std::nullopt, {}, line_no};
        if (ds.kind == IVKind::input_characteristics) {
            r.p = {detail::parse_number(f[0], line_no), detail::parse_number(f[1], line_no)};
        } else {
            r.label = detail::parse_number(f[0], line_no);
            r.p = {detail::parse_number(f[1], line_no), detail::parse_number(f[2], line_no)};
            if (has_direction) {
                if (f[3] == "fwd") {
                    r.direction = SweepDirection::forward;
                } else if (f[3] == "bwd") {
                    r.direction = SweepDirection::backward;
                } else {
                    throw ParseError(line_no, "direction must be fwd or bwd");
                }
            }
        }
        rows.push_back(r);
    }
    if (rows.empty()) throw ParseError(line_no, "no data rows");

    // contiguous blocks keyed by (label, declared direction)
    using Key = std::pair<double, int>;
    auto key_of = [](const detail::RawRow& r) {
        return Key{r.label, r.direction ? static_cast<int>(*r.direction) : -1};
    };
    std::set<Key> seen;
    std::vector<detail::RawRow> block;
    auto flush = [&] {
        if (block.empty()) return;
        if (!seen.insert(key_of(block.front())).second) {
            throw ParseError(block.front().line, "duplicate sweep label");
        }
        detail::split_block(ds.sweeps, block);
        block.clear();
    };
    for (const auto& r : rows) {
        if (!block.empty() && key_of(r) != key_of(block.front())) flush();
        block.push_back(r);
    }
    flush();

    if (ds.kind == IVKind::input_characteristics && ds.sweeps.size() != 1) {
        throw ParseError(line_no, "input characteristics must be a single monotone sweep");
    }
    std::stable_sort(ds.sweeps.begin(), ds.sweeps.end(), [](const IVSweep& a, const IVSweep& b) {
        if (a.direction != b.direction) return a.direction < b.direction;
        return a.label < b.label;
    });
    for (std::size_t k = 1; k < ds.sweeps.size(); ++k) {
        const auto& a = ds.sweeps[k - 1];
        const auto& b = ds.sweeps[k];
        if (a.direction == b.direction && !(a.label < b.label)) {
            throw ParseError(line_no, "duplicate sweep label");
        }
    }
    const bool fwd = std::any_of(ds.sweeps.begin(), ds.sweeps.end(),
                                 [](const IVSweep& s) { return s.direction == SweepDirection::forward; });
    const bool bwd = std::any_of(ds.sweeps.begin(), ds.sweeps.end(),
                                 [](const IVSweep& s) { return s.direction == SweepDirection::backward; });
    ds.direction = fwd && bwd ? DatasetDirection::both : (bwd ? DatasetDirection::backward : DatasetDirection::forward);
    return ds;
}

inline IVDataset load_iv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return load_iv_dataset(in);
}

inline std::string format_number(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Writes the dataset in the same CSV layout it is loaded from (shortest
/// round-trip number formatting).
inline void write_iv_dataset(std::ostream& out, const IVDataset& ds) {
    if (ds.kind == IVKind::input_characteristics) {
        out << "v_be_V,i_b_A\n";
        for (const auto& s : ds.sweeps) {
            for (const auto& p : s.points) out << format_number(p.v) << ',' << format_number(p.i) << '\n';
        }
        return;
    }
    const bool with_dir = ds.direction != DatasetDirection::forward;
    out << "i_b_A,v_ce_V,i_c_A" << (with_dir ? ",direction" : "") << '\n';
    for (const auto& s : ds.sweeps) {
        for (const auto& p : s.points) {
            out << format_number(s.label) << ',' << format_number(p.v) << ',' << format_number(p.i);
            if (with_dir) out << (s.direction == SweepDirection::forward ? ",fwd" : ",bwd");
            out << '\n';
        }
    }
}

// -----------------------------------------------------------------------------
// Synthetic data
// -----------------------------------------------------------------------------

inline std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
    if (points < 2) return {lo};
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return out;
}

/// Base-current labels 200 nA .. 1000 nA in 50 nA steps.
inline std::vector<double> standard_base_currents() {
    std::vector<double> out;
    for (int k = 0; k <= 16; ++k) out.push_back((200.0 + 50.0 * k) * 1e-9);
    return out;
}

/// Collector-voltage grid used for synthetic output families: 0-3 V, 1 mV steps.
inline std::vector<double> standard_vce_grid() { return linear_grid(0.0, 3.0, 3001); }

/// Output family at forced base currents, optionally with multiplicative
/// Gaussian noise of relative size `noise_rel`.
inline IVDataset generate_output_family(const device::TransistorParams& params, const std::vector<double>& labels,
                                        const std::vector<double>& v_ce_grid, double noise_rel = 0.0,
                                        std::uint64_t seed = 0) {
    params.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    IVDataset ds;
    ds.kind = IVKind::output_characteristics;
    for (double i_b : labels) {
        if (!(i_b > 0.0)) throw DomainError("base-current labels must be positive");
        const double v_be = params.v_teff * std::log(params.beta_f * i_b / params.i_sat);
        IVSweep s{i_b, SweepDirection::forward, {}};
        s.points.reserve(v_ce_grid.size());
        for (double v : v_ce_grid) {
            double i_c = device::evaluate_dc(params, v_be, v).i_c;
            if (noise_rel > 0.0) i_c *= 1.0 + noise_rel * gauss(rng);
            s.points.push_back({v, i_c});
        }
        ds.sweeps.push_back(std::move(s));
    }
    return ds;
}

inline IVDataset generate_input_characteristics(const device::TransistorParams& params,
                                                const std::vector<double>& v_be_grid, double v_ce = 0.91,
                                                double noise_rel = 0.0, std::uint64_t seed = 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    IVDataset ds;
    ds.kind = IVKind::input_characteristics;
    IVSweep s;
    for (double v : v_be_grid) {
        double i_b = device::evaluate_dc(params, v, v_ce).i_b;
        if (noise_rel > 0.0) i_b *= 1.0 + noise_rel * gauss(rng);
        s.points.push_back({v, i_b});
    }
    ds.sweeps.push_back(std::move(s));
    return ds;
}

// -----------------------------------------------------------------------------
// Fits
// -----------------------------------------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    std::size_t n = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    f.n = x.size();
    if (f.n < 2) return f;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(f.n);
    my /= static_cast<double>(f.n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < f.n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        f.ss_res += r * r;
        f.ss_tot += (y[i] - my) * (y[i] - my);
    }
    return f;
}

struct EarlyFitOptions {
    double window_min = 0.5;                                        // V
    double window_max = std::numeric_limits<double>::infinity();  // V, clipped to data
    double label_min = 200e-9;                                      // A
    double label_max = 800e-9;                                      // A
    double min_relative_slope = 1e-9;                               // 1/V; flatter curves are excluded
};

struct EarlyFit {
    double v_early = 0.0;
    std::vector<double> per_curve_intercepts;  // V (negative: the V_ce-axis crossing)
    std::vector<double> used_labels;
    std::pair<double, double> fit_window;
    double r_squared = 0.0;
    std::vector<std::string> warnings;
};

inline EarlyFit fit_early_voltage(const IVDataset& ds, const EarlyFitOptions& opt = {}) {
    if (ds.kind != IVKind::output_characteristics) throw InputError("Early fit needs output characteristics");
    const auto dir = ds.direction == DatasetDirection::backward ? SweepDirection::backward : SweepDirection::forward;

    double v_max = -std::numeric_limits<double>::infinity();
    for (const auto& s : ds.sweeps) {
        if (s.direction == dir && !s.points.empty()) v_max = std::max(v_max, s.points.back().v);
    }
    EarlyFit out;
    out.fit_window = {opt.window_min, std::min(opt.window_max, v_max)};
    if (!(out.fit_window.first < out.fit_window.second)) throw RangeError("fit window lies outside the data");

    const double label_tol = 1e-12;
    double weighted = 0.0, weights = 0.0, ss_res = 0.0, ss_tot = 0.0;
    for (const auto& s : ds.sweeps) {
        if (s.direction != dir) continue;
        if (s.label < opt.label_min * (1.0 - label_tol) || s.label > opt.label_max * (1.0 + label_tol)) continue;
        std::vector<double> x, y;
        for (const auto& p : s.points) {
            if (p.v >= out.fit_window.first && p.v <= out.fit_window.second) {
                x.push_back(p.v);
                y.push_back(p.i);
            }
        }
        const std::string tag = "curve i_b=" + format_number(s.label) + " A: ";
        if (x.size() < 2) {
            out.warnings.push_back(tag + "fewer than 2 points in window, excluded");
            continue;
        }
        const auto f = fit_line(x, y);
        if (!(f.slope > opt.min_relative_slope * std::abs(f.intercept))) {
            out.warnings.push_back(tag + "non-positive slope, excluded");
            continue;
        }
        const double intercept = -f.intercept / f.slope;
        out.per_curve_intercepts.push_back(intercept);
        out.used_labels.push_back(s.label);
        weighted += f.slope * std::abs(intercept);
        weights += f.slope;
        ss_res += f.ss_res;
        ss_tot += f.ss_tot;
    }
    if (out.per_curve_intercepts.empty()) throw FitError("no curve usable for the Early-voltage fit");
    out.v_early = weighted / weights;
    out.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
    return out;
}

inline double interpolate(const std::vector<IVPoint>& pts, double v) {
    if (pts.empty() || v < pts.front().v || v > pts.back().v) throw RangeError("voltage outside sweep range");
    auto it = std::lower_bound(pts.begin(), pts.end(), v, [](const IVPoint& p, double x) { return p.v < x; });
    if (it == pts.begin()) return it->i;
    const auto& b = *it;
    const auto& a = *(it - 1);
    return a.i + (b.i - a.i) * (v - a.v) / (b.v - a.v);
}

/// Current gain from the two curves bracketing the target collector current at
/// the target v_ce: delta i_c / delta i_b.
inline double fit_beta(const IVDataset& ds, const device::OperatingPoint& near) {
    if (ds.kind != IVKind::output_characteristics) throw InputError("beta fit needs output characteristics");
    const auto dir = ds.direction == DatasetDirection::backward ? SweepDirection::backward : SweepDirection::forward;
    std::vector<std::pair<double, double>> at;  // (label, i_c at target v_ce)
    for (const auto& s : ds.sweeps) {
        if (s.direction == dir) at.emplace_back(s.label, interpolate(s.points, near.v_ce));
    }
    if (at.size() < 2) throw RangeError("need at least two curves");
    for (std::size_t k = 0; k + 1 < at.size(); ++k) {
        const auto [l0, i0] = at[k];
        const auto [l1, i1] = at[k + 1];
        if ((i0 <= near.i_c && near.i_c <= i1) || (i1 <= near.i_c && near.i_c <= i0)) {
            return (i1 - i0) / (l1 - l0);
        }
    }
    throw RangeError("target collector current outside the measured family");
}

inline double intrinsic_gain(double v_early, double v_teff) {
    cryoamp::detail::require_positive(v_early, "v_early");
    cryoamp::detail::require_positive(v_teff, "v_teff");
    return v_early / v_teff;
}

struct DiodeFit {
    double i_sat = 0.0;
    double v_teff = 0.0;
    double rms_log_residual = 0.0;
    std::size_t points_used = 0;
};

struct DiodeFitOptions {
    double beta_f = 160.0;
    std::size_t min_points = 2;
    double max_v_teff = 1.0;  // V; flatter data is treated as degenerate
};

/// Log-linear least squares on ln(i_b) = ln(i_sat / beta_f) + v_be / v_teff.
inline DiodeFit fit_diode_params(const IVDataset& ds, const DiodeFitOptions& opt = {}) {
    if (ds.kind != IVKind::input_characteristics) throw InputError("diode fit needs input characteristics");
    std::vector<double> x, y;
    for (const auto& s : ds.sweeps) {
        for (const auto& p : s.points) {
            if (p.i > 0.0) {
                x.push_back(p.v);
                y.push_back(std::log(p.i));
            }
        }
    }
    if (x.size() < opt.min_points) throw FitError("too few points with positive current");
    const auto f = fit_line(x, y);
    if (!(f.slope > 1.0 / opt.max_v_teff)) throw FitError("current does not grow with v_be");
    DiodeFit out;
    out.v_teff = 1.0 / f.slope;
    out.i_sat = opt.beta_f * std::exp(f.intercept);
    out.rms_log_residual = std::sqrt(f.ss_res / static_cast<double>(f.n));
    out.points_used = f.n;
    return out;
}

// -----------------------------------------------------------------------------
// Usability screening
// -----------------------------------------------------------------------------

enum class Verdict { usable, hysteretic, negative_differential_resistance, both_defects };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::usable: return "usable";
        case Verdict::hysteretic: return "hysteretic";
        case Verdict::negative_differential_resistance: return "negative_differential_resistance";
        case Verdict::both_defects: return "both_defects";
    }
    return "?";
}

enum class Defect { ndr, hysteresis };

struct Evidence {
    Defect defect = Defect::ndr;
    std::size_t sweep_index = 0;  // index into the forward dataset's sweeps
    double v_lo = 0.0;
    double v_hi = 0.0;
    double metric = 0.0;  // smoothed slope (S) or relative mismatch
};

struct DeviceClassification {
    Verdict verdict = Verdict::usable;
    std::vector<Evidence> evidence;
};

struct ClassifyOptions {
    double ndr_threshold = 1e-6;         // S
    double hysteresis_threshold = 0.02;  // relative to the curve maximum
    std::size_t smoothing_points = 5;
    std::size_t min_hysteresis_points = 2;
};

namespace detail {

inline void find_ndr(const IVSweep& s, std::size_t index, const ClassifyOptions& opt, std::vector<Evidence>& out) {
    const auto& p = s.points;
    if (p.size() < 2) return;
    std::vector<double> slope(p.size() - 1);
    for (std::size_t k = 0; k + 1 < p.size(); ++k) slope[k] = (p[k + 1].i - p[k].i) / (p[k + 1].v - p[k].v);
    const std::size_t half = opt.smoothing_points / 2;
    std::vector<double> smooth(slope.size());
    for (std::size_t k = 0; k < slope.size(); ++k) {
        const std::size_t lo = k >= half ? k - half : 0;
        const std::size_t hi = std::min(slope.size() - 1, k + half);
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) acc += slope[j];
        smooth[k] = acc / static_cast<double>(hi - lo + 1);
    }
    for (std::size_t k = 0; k < smooth.size();) {
        if (!(smooth[k] < -opt.ndr_threshold)) {
            ++k;
            continue;
        }
        Evidence e{Defect::ndr, index, p[k].v, p[k + 1].v, smooth[k]};
        while (k < smooth.size() && smooth[k] < -opt.ndr_threshold) {
            e.v_hi = p[k + 1].v;
            e.metric = std::min(e.metric, smooth[k]);
            ++k;
        }
        out.push_back(e);
    }
}

inline void find_hysteresis(const IVSweep& fwd, const IVSweep& bwd, std::size_t index, const ClassifyOptions& opt,
                            std::vector<Evidence>& out) {
    double i_max = 0.0;
    for (const auto& p : fwd.points) i_max = std::max(i_max, std::abs(p.i));
    for (const auto& p : bwd.points) i_max = std::max(i_max, std::abs(p.i));
    if (i_max == 0.0) return;
    const double lo = std::max(fwd.points.front().v, bwd.points.front().v);
    const double hi = std::min(fwd.points.back().v, bwd.points.back().v);

    std::vector<std::pair<double, double>> mismatch;  // (v, relative difference)
    for (const auto& p : fwd.points) {
        if (p.v < lo || p.v > hi) continue;
        mismatch.emplace_back(p.v, std::abs(p.i - interpolate(bwd.points, p.v)) / i_max);
    }
    for (std::size_t k = 0; k < mismatch.size();) {
        if (!(mismatch[k].second > opt.hysteresis_threshold)) {
            ++k;
            continue;
        }
        const std::size_t start = k;
        Evidence e{Defect::hysteresis, index, mismatch[k].first, mismatch[k].first, 0.0};
        while (k < mismatch.size() && mismatch[k].second > opt.hysteresis_threshold) {
            e.v_hi = mismatch[k].first;
            e.metric = std::max(e.metric, mismatch[k].second);
            ++k;
        }
        if (k - start >= opt.min_hysteresis_points) out.push_back(e);
    }
}

}  // namespace detail

inline DeviceClassification classify_transistor(const IVDataset& forward, const IVDataset* backward,
                                                const ClassifyOptions& opt = {}) {
    if (forward.kind != IVKind::output_characteristics) throw InputError("classification needs output characteristics");
    DeviceClassification out;
    for (std::size_t k = 0; k < forward.sweeps.size(); ++k) detail::find_ndr(forward.sweeps[k], k, opt, out.evidence);

    if (backward != nullptr) {
        if (backward->sweeps.size() != forward.sweeps.size()) throw InputError("forward/backward sweep labels differ");
        for (std::size_t k = 0; k < forward.sweeps.size(); ++k) {
            if (backward->sweeps[k].label != forward.sweeps[k].label) {
                throw InputError("forward/backward sweep labels differ");
            }
        }
        for (std::size_t k = 0; k < backward->sweeps.size(); ++k) {
            detail::find_ndr(backward->sweeps[k], k, opt, out.evidence);
            detail::find_hysteresis(forward.sweeps[k], backward->sweeps[k], k, opt, out.evidence);
        }
    }

    const bool ndr = std::any_of(out.evidence.begin(), out.evidence.end(),
                                 [](const Evidence& e) { return e.defect == Defect::ndr; });
    const bool hyst = std::any_of(out.evidence.begin(), out.evidence.end(),
                                  [](const Evidence& e) { return e.defect == Defect::hysteresis; });
    out.verdict = ndr && hyst ? Verdict::both_defects
                : ndr         ? Verdict::negative_differential_resistance
                : hyst        ? Verdict::hysteretic
                              : Verdict::usable;
    return out;
}

inline DeviceClassification classify_transistor(const IVDataset& forward, const ClassifyOptions& opt = {}) {
    return classify_transistor(forward, nullptr, opt);
}

}  // namespace cryoamp::ivfit
