#pragma once

#include <functional>
#include <string>

#include "spectral.hpp"

namespace deconv {

// Smoothness regime of a (measurement-noise, blur) envelope pair. The label
// depends only on the envelope exponents: the exponential exponents b (noise)
// and beta (blur), and for b = beta = 0 the sign of alpha - (a + 1/2).
enum class CaseId { I, II, III, IV, V, VI, VII, VIII };

const char* case_name(CaseId c);

CaseId classify_case(const SmoothnessEnvelope& xi_env, const SmoothnessEnvelope& g_env);
CaseId classify_case(const Scenario& sc);

// Envelope exponents in the notation of the bound expressions.
struct RiskInputs {
  double a = 0.0, b = 0.0, d = 0.0;         // measurement noise: poly, exp exponent, exp scale
  double alpha = 0.0, beta = 0.0, gamma = 0.0; // blur shape
  double sigma = 0.0;                       // blur size
  double k = 1.0, B = 1.0;                  // smoothness ball
  double cg = 1.0;                          // blur upper envelope constant (squared cf scale)

  static RiskInputs from(const Scenario& sc);
};

// Constant in the small-h variance branch when beta > b > 0.
double kappa_constant(double d, double b, double gamma, double beta);

// Squared-bias bound: 0 at h = 0; otherwise the two-branch expression at
// h < sigma / h >= sigma, scaled by 2 * cg * B^2 / pi.
double bias_bound(const RiskInputs& in, double h);

struct VarianceBound {
  double value = 0.0;
  std::string branch; // sub-branch trace, e.g. "V: h < (gamma*beta*sigma^beta/(d*b))^(1/(beta-b))"
};

// The n-free variance factor for the classified case (shape expression,
// constant 1). h = 0 is admissible only where the h -> 0 limit of the row is
// finite (cases I, IV and the small-h branch of V); elsewhere it is refused.
VarianceBound variance_bound(const RiskInputs& in, double h);

struct RiskBound {
  double h = 0.0;
  double delta1 = 0.0; // squared-bias bound
  double delta2 = 0.0; // variance bound (n-free factor)
  double total = 0.0;  // delta1 + delta2 / n
  CaseId case_id = CaseId::I;
  std::string branch;
};

RiskBound risk_bound(const Scenario& sc, double h);

// Saddle-point profile of the variance integrand after s = z/h:
//   integral_0^1 P(z) exp(phi(z)) dz, variance ~ h^{-(2a+1)} * that integral.
struct PhiProfile {
  double a = 0.0, b = 0.0, d = 0.0;
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  double sigma = 0.0, h = 0.0;
  bool has_zstar = false;
  double zstar = 0.0; // interior maximum scale, defined when b, beta > 0 and b != beta

  double phi(double z) const;
  double dphi(double z) const;
  double ddphi(double z) const;
  double amplitude(double z) const; // P(z)
};

// Requires at least one positive exponential exponent.
PhiProfile phi_profile(const RiskInputs& in, double h);
PhiProfile phi_profile(const Scenario& sc, double h);

struct LaplaceApprox {
  double value = 0.0;
  std::string branch; // "interior" or "boundary"
};

// Order-level approximation of integral_lo^hi P(z) exp(Q(z)) dz by the value
// at the maximum of Q: exp(Q(z0)) P(z0) / sqrt(|Q''(z0)|) at an interior
// maximum, exp(Q(z0)) P(z0) / |Q'(z0)| at an endpoint maximum.
LaplaceApprox laplace_approx(const std::function<double(double)>& P,
                             const std::function<double(double)>& Q,
                             const std::function<double(double)>& dQ,
                             const std::function<double(double)>& ddQ, double lo, double hi);

// Root m of exp(m) m^z = n for n > e, by bisection (exact to 1e-10), and its
// closed-form asymptotic ln n - z ln ln n.
double solve_exp_eq(double z, double n);
double exp_root_asymptotic(double z, double n);

} // namespace deconv
