#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "spectral.hpp"

namespace deconv {

// x grid for density values plus the frequency discretization: the inversion
// step is always delta = s_max / s_points, independent of the band actually
// integrated, so estimates at different bands share quadrature nodes.
struct GridSpec {
  double x_min = -12.0;
  double x_max = 12.0;
  std::uint32_t x_points = 1024;
  std::uint32_t s_points = 1024;
  double s_max = 64.0;

  void validate() const;
  double x(std::uint32_t i) const {
    return x_min + (x_max - x_min) * static_cast<double>(i) / (x_points - 1);
  }
  double dx() const { return (x_max - x_min) / (x_points - 1); }
  double delta() const { return s_max / s_points; }
  bool operator==(const GridSpec&) const = default;
};

struct DensityEstimate {
  GridSpec grid;
  std::vector<double> values;
  double h = 0.0;      // bandwidth used (0 = no band-limiting beyond the spectral cutoff)
  double band = 0.0;   // frequency band [0, band] actually integrated
  double s_step = 0.0; // trapezoid step inside the band
  double sigma = 0.0;
  std::uint64_t n = 0; // samples behind the estimate; 0 for a model density
};

// Empirical characteristic function at a single frequency (direct summation).
std::complex<double> ecf(std::span<const double> samples, double s);

// ecf on the uniform frequency grid {j*step : j = 0..count}, accumulated
// sample-by-sample with a complex-power recurrence; deterministic in the
// sample order.
std::vector<std::complex<double>> ecf_grid(std::span<const double> samples, double step,
                                           std::size_t count);

// Density of W = X + sigma*eta by inverting f_X*(s) g*(sigma s) over the band
// where the product exceeds 1e-12. Checks that the result integrates to 1.
DensityEstimate true_fw(const Scenario& sc, const GridSpec& grid);

// Same, but hard-capped at band <= cap (the band-limited target of a kernel
// estimate with bandwidth 1/cap).
DensityEstimate true_fw_banded(const Scenario& sc, const GridSpec& grid, double cap);

// Fourier-inversion density estimate from samples of Y. h > 0 integrates the
// band |s| <= 1/h; h = 0 requires a finite variance integral and truncates
// where the envelope of |g*(sigma s)/xi*(s)| falls below 1e-10 of its max.
DensityEstimate estimate(const Scenario& sc, std::span<const double> samples, double h,
                         const GridSpec& grid, bool clip_negative = false);

// Integrated squared difference on a shared grid (trapezoid rule).
double ise(const DensityEstimate& a, const DensityEstimate& b);

namespace detail {
// h=0 truncation point: where the envelope ratio drops to 1e-10 of its peak.
double h0_band(const Scenario& sc, double cap);
std::vector<double> invert_band(std::span<const std::complex<double>> spectrum, double step,
                                const GridSpec& grid);
} // namespace detail

} // namespace deconv
