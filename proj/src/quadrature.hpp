#pragma once

#include <functional>
#include <span>

namespace deconv::quad {

// Adaptive Simpson on [a,b]; recursion stops when the local error estimate
// drops below the tolerance share for the subinterval.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-9, double abs_tol = 0.0, int max_depth = 48);

// Integral of f over [a, inf): doubling segments [a,T], [T,2T], ... until a
// segment contributes less than rel_tail of the running total and the
// integrand has decayed to rel_tail of its running peak.
double integrate_to_infinity(const std::function<double(double)>& f, double a,
                             double rel_tol = 1e-9, double rel_tail = 1e-12);

double trapezoid(std::span<const double> values, double step);

// Location of the maximum of a unimodal f on [lo,hi] (golden section); with a
// monotone f the iterate collapses onto the favored endpoint.
double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-10);

} // namespace deconv::quad
