#include "quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace deconv::quad {

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, double abs_tol, int max_depth) {
  if (!(b > a)) return 0.0;
  const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double tol = std::max(abs_tol, rel_tol * std::max(std::abs(whole), 1e-300));
  const double v = simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
  if (!std::isfinite(v)) throw numeric_error("quadrature produced a non-finite value");
  return v;
}

double integrate_to_infinity(const std::function<double(double)>& f, double a,
                             double rel_tol, double rel_tail) {
  double lo = a;
  double width = std::max(1.0, std::abs(a));
  double total = 0.0;
  double peak = 0.0;
  for (int seg = 0; seg < 200; ++seg) {
    const double hi = lo + width;
    const double part = adaptive_simpson(f, lo, hi, rel_tol, rel_tail * std::abs(total));
    total += part;
    peak = std::max({peak, std::abs(f(lo)), std::abs(f(hi))});
    const bool tiny_part = std::abs(part) <= rel_tail * std::max(std::abs(total), 1e-300);
    const bool decayed = std::abs(f(hi)) <= rel_tail * std::max(peak, 1e-300);
    if (tiny_part && decayed) return total;
    lo = hi;
    width *= 2.0;
  }
  throw numeric_error("semi-infinite quadrature failed to converge");
}

double trapezoid(std::span<const double> values, double step) {
  if (values.size() < 2) return 0.0;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
  return sum * step;
}

double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 300 && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

} // namespace deconv::quad
