#include "estimator.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "quadrature.hpp"

namespace deconv {

namespace {

// Bands wider than this multiple of s_max are refused rather than silently
// truncated further.
constexpr double MAX_BAND_FACTOR = 1000.0;
constexpr double H0_CUTOFF = 1e-10;   // envelope-ratio cutoff for h = 0
constexpr double TRUE_CUTOFF = 1e-12; // spectrum cutoff for the model density

double band_cap(const GridSpec& grid) { return MAX_BAND_FACTOR * grid.s_max; }

} // namespace

void GridSpec::validate() const {
  if (!(x_min < x_max)) throw config_error("grid needs x_min < x_max", "grid.x_min");
  if (x_points < 16) throw config_error("grid needs at least 16 x points", "grid.x_points");
  if (s_points < 64) throw config_error("grid needs at least 64 s points", "grid.s_points");
  if (!(s_max > 0.0)) throw config_error("grid needs s_max > 0", "grid.s_max");
  // Aliasing guard: images of the inversion sit 2*pi/delta apart.
  const double span = std::max(std::abs(x_min), std::abs(x_max));
  if (delta() * span > M_PI / 2.0)
    throw config_error("frequency step s_max/s_points is too coarse for the x range", "grid.s_points");
}

std::complex<double> ecf(std::span<const double> samples, double s) {
  if (samples.empty()) throw config_error("empty sample", "samples");
  std::complex<double> acc = 0.0;
  for (const double y : samples) acc += std::polar(1.0, s * y);
  return acc / static_cast<double>(samples.size());
}

std::vector<std::complex<double>> ecf_grid(std::span<const double> samples, double step,
                                           std::size_t count) {
  if (samples.empty()) throw config_error("empty sample", "samples");
  // Split re/im accumulators and an explicit power recurrence keep the inner
  // loop free of library complex arithmetic.
  std::vector<double> re(count + 1, 0.0), im(count + 1, 0.0);
  for (const double y : samples) {
    const double t = step * y;
    const double wr = std::cos(t), wi = std::sin(t);
    double zr = 1.0, zi = 0.0;
    for (std::size_t j = 0; j <= count; ++j) {
      re[j] += zr;
      im[j] += zi;
      const double nr = zr * wr - zi * wi;
      zi = zr * wi + zi * wr;
      zr = nr;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  std::vector<std::complex<double>> acc(count + 1);
  for (std::size_t j = 0; j <= count; ++j) acc[j] = {re[j] * inv_n, im[j] * inv_n};
  return acc;
}

namespace detail {

std::vector<double> invert_band(std::span<const std::complex<double>> spectrum, double step,
                                const GridSpec& grid) {
  // value(x) = (1/pi) * Re integral_0^S F(s) e^{-isx} ds, uniform trapezoid.
  const std::size_t m = spectrum.size() - 1;
  std::vector<double> fr(m + 1), fi(m + 1);
  for (std::size_t j = 0; j <= m; ++j) {
    fr[j] = spectrum[j].real();
    fi[j] = spectrum[j].imag();
  }
  std::vector<double> out(grid.x_points);
  for (std::uint32_t i = 0; i < grid.x_points; ++i) {
    const double x = grid.x(i);
    const double rr = std::cos(step * x), ri = -std::sin(step * x);
    double zr = 1.0, zi = 0.0;
    double sum = 0.5 * fr[0];
    for (std::size_t j = 1; j <= m; ++j) {
      const double nr = zr * rr - zi * ri;
      zi = zr * ri + zi * rr;
      zr = nr;
      const double term = fr[j] * zr - fi[j] * zi;
      sum += (j == m) ? 0.5 * term : term;
    }
    out[i] = sum * step / M_PI;
  }
  return out;
}

double h0_band(const Scenario& sc, double cap) {
  const auto& xe = sc.xi_model().envelope();
  const auto& ge = sc.g_model().envelope();
  const double sigma = sc.sigma();
  // log of the envelope of |g*(sigma s)/xi*(s)|; constants drop out.
  const auto log_ratio = [&](double s) {
    const double ss = sigma * s;
    double v = -0.5 * ge.poly_exp * std::log1p(ss * ss) + 0.5 * xe.poly_exp * std::log1p(s * s);
    if (ge.exp_scale > 0.0) v -= ge.exp_scale * std::pow(std::abs(ss), ge.exp_exp);
    if (xe.exp_scale > 0.0) v += xe.exp_scale * std::pow(std::abs(s), xe.exp_exp);
    return v;
  };

  // Scan a log-spaced ladder for the peak and the 1e-10 crossing.
  const double log_cut = std::log(H0_CUTOFF);
  double peak = log_ratio(0.0);
  double prev_s = 0.0, prev_v = peak;
  for (double s = 1e-3; s <= cap * 1.0000001; s *= 1.02) {
    const double v = log_ratio(s);
    peak = std::max(peak, v);
    if (v < peak + log_cut) {
      // crossing between prev_s and s; bisect against the final peak
      double lo = prev_s, hi = s;
      for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (log_ratio(mid) < peak + log_cut ? hi : lo) = mid;
      }
      return hi;
    }
    prev_s = s;
    prev_v = v;
  }
  (void)prev_v;
  throw admissibility_error(
      "h=0 spectral band exceeds " + std::to_string(MAX_BAND_FACTOR) +
          " x s_max before the envelope ratio decays to the 1e-10 cutoff",
      "h");
}

} // namespace detail

namespace {

DensityEstimate invert_model_spectrum(const Scenario& sc, const GridSpec& grid, double band) {
  const double delta = grid.delta();
  const std::size_t m = static_cast<std::size_t>(std::ceil(band / delta));
  const double step = band / static_cast<double>(m);
  std::vector<std::complex<double>> spec(m + 1);
  for (std::size_t j = 0; j <= m; ++j) {
    const double s = step * static_cast<double>(j);
    spec[j] = {sc.x_model().cf_real(s) * sc.g_model().cf_real(sc.sigma() * s), 0.0};
  }
  DensityEstimate est;
  est.grid = grid;
  est.values = detail::invert_band(spec, step, grid);
  est.h = 0.0;
  est.band = band;
  est.s_step = step;
  est.sigma = sc.sigma();
  est.n = 0;
  return est;
}

double true_band_cutoff(const Scenario& sc, const GridSpec& grid) {
  const auto product = [&](double s) {
    return sc.x_model().cf_real(s) * sc.g_model().cf_real(sc.sigma() * s);
  };
  const double cap = band_cap(grid);
  double lo = 0.0, hi = 1.0;
  while (product(hi) > TRUE_CUTOFF) {
    lo = hi;
    hi *= 2.0;
    if (hi > cap)
      throw admissibility_error("model spectrum band exceeds " +
                                    std::to_string(MAX_BAND_FACTOR) + " x s_max",
                                "grid.s_max");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (product(mid) > TRUE_CUTOFF ? lo : hi) = mid;
  }
  return hi;
}

void check_density(const DensityEstimate& est, const char* what) {
  for (const double v : est.values)
    if (!std::isfinite(v)) throw numeric_error(std::string(what) + " produced non-finite values");
  const double mass = quad::trapezoid(est.values, est.grid.dx());
  if (std::abs(mass - 1.0) > 1e-3)
    throw numeric_error(std::string(what) + " integrates to " + std::to_string(mass) +
                        "; the x grid is too coarse or too narrow");
}

} // namespace

DensityEstimate true_fw(const Scenario& sc, const GridSpec& grid) {
  grid.validate();
  DensityEstimate est = invert_model_spectrum(sc, grid, true_band_cutoff(sc, grid));
  check_density(est, "model density inversion");
  return est;
}

DensityEstimate true_fw_banded(const Scenario& sc, const GridSpec& grid, double cap) {
  grid.validate();
  if (!(cap > 0.0)) throw config_error("band cap must be positive", "band");
  const double band = std::min(cap, true_band_cutoff(sc, grid));
  return invert_model_spectrum(sc, grid, band);
}

DensityEstimate estimate(const Scenario& sc, std::span<const double> samples, double h,
                         const GridSpec& grid, bool clip_negative) {
  grid.validate();
  if (samples.empty()) throw config_error("empty sample", "samples");
  if (!(h >= 0.0) || !std::isfinite(h)) throw config_error("bandwidth h must be >= 0", "h");

  double band;
  if (h > 0.0) {
    band = 1.0 / h;
    if (band > band_cap(grid))
      throw admissibility_error("band 1/h = " + std::to_string(band) + " exceeds " +
                                    std::to_string(MAX_BAND_FACTOR) + " x s_max",
                                "h");
  } else {
    const QuadValue cls = rho_classification(sc);
    if (!cls.finite)
      throw admissibility_error("h=0 is inadmissible: the variance integral rho^2(sigma) diverges (" +
                                    cls.reason + ")",
                                "h");
    band = detail::h0_band(sc, band_cap(grid));
  }

  const double delta = grid.delta();
  const std::size_t m = static_cast<std::size_t>(std::ceil(band / delta));
  const double step = band / static_cast<double>(m);

  std::vector<std::complex<double>> spec = ecf_grid(samples, step, m);
  for (std::size_t j = 0; j <= m; ++j) {
    const double s = step * static_cast<double>(j);
    spec[j] *= sc.g_model().cf_real(sc.sigma() * s) / sc.xi_model().cf_real(s);
  }

  DensityEstimate est;
  est.grid = grid;
  est.values = detail::invert_band(spec, step, grid);
  est.h = h;
  est.band = band;
  est.s_step = step;
  est.sigma = sc.sigma();
  est.n = samples.size();
  if (clip_negative)
    for (double& v : est.values) v = std::max(v, 0.0);
  for (const double v : est.values)
    if (!std::isfinite(v)) throw numeric_error("estimate produced non-finite values");
  return est;
}

double ise(const DensityEstimate& a, const DensityEstimate& b) {
  if (!(a.grid == b.grid)) throw config_error("integrated squared error needs a shared x grid", "grid");
  double sum = 0.0;
  const std::size_t m = a.values.size();
  for (std::size_t i = 0; i < m; ++i) {
    const double d = a.values[i] - b.values[i];
    const double w = (i == 0 || i + 1 == m) ? 0.5 : 1.0;
    sum += w * d * d;
  }
  return sum * a.grid.dx();
}

} // namespace deconv
