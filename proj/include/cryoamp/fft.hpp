#pragma once

// Thin RAII wrapper over FFTW's real-to-complex / complex-to-real transforms.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace cryoamp::fft {

namespace detail {

// The FFTW planner is not re-entrant; plan execution is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};

using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

}  // namespace detail

/// Spectrum of a real signal: bins 0 .. n/2.
inline std::vector<std::complex<double>> forward(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    std::vector<double> in(x.begin(), x.end());
    std::vector<std::complex<double>> out(n / 2 + 1);
    detail::Plan plan;
    {
        std::lock_guard lock(detail::planner_mutex());
        plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                        reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE));
    }
    if (!plan) throw std::runtime_error("FFTW planning failed");
    fftw_execute(plan.get());
    return out;
}

/// Inverse of `forward`, normalized so that inverse(forward(x)) == x.
inline std::vector<double> inverse(std::span<const std::complex<double>> spectrum, std::size_t n) {
    if (n == 0) return {};
    if (spectrum.size() != n / 2 + 1) throw std::invalid_argument("spectrum length does not match n");
    std::vector<std::complex<double>> in(spectrum.begin(), spectrum.end());
    std::vector<double> out(n);
    detail::Plan plan;
    {
        std::lock_guard lock(detail::planner_mutex());
        plan.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                        out.data(), FFTW_ESTIMATE));
    }
    if (!plan) throw std::runtime_error("FFTW planning failed");
    fftw_execute(plan.get());
    const double scale = 1.0 / static_cast<double>(n);
    for (double& v : out) v *= scale;
    return out;
}

}  // namespace cryoamp::fft
