#include "risk.hpp"

#include <cmath>

#include "errors.hpp"
#include "quadrature.hpp"

namespace deconv {

namespace {

constexpr double DERIV_EPS = 1e-12; // degenerate-maximum threshold

// alpha == a + 1/2 up to representation noise
bool critical_poly(double alpha, double a) {
  return std::abs(alpha - (a + 0.5)) <= 1e-12 * std::max(1.0, std::abs(alpha));
}

CaseId classify_exponents(double a, double b, double alpha, double beta) {
  if (b == 0.0 && beta == 0.0) {
    if (critical_poly(alpha, a)) return CaseId::II;
    return alpha > a + 0.5 ? CaseId::I : CaseId::III;
  }
  if (b == 0.0) return CaseId::IV;   // beta > 0
  if (beta == 0.0) return CaseId::VII;
  if (beta > b) return CaseId::V;
  if (beta == b) return CaseId::VI;
  return CaseId::VIII; // b > beta > 0
}

double finite_or_throw(double log_value, const std::string& label) {
  const double v = std::exp(log_value);
  if (!std::isfinite(v))
    throw numeric_error(label + " overflows the double range (log value " +
                        std::to_string(log_value) + ")");
  return v;
}

} // namespace

const char* case_name(CaseId c) {
  switch (c) {
    case CaseId::I: return "I";
    case CaseId::II: return "II";
    case CaseId::III: return "III";
    case CaseId::IV: return "IV";
    case CaseId::V: return "V";
    case CaseId::VI: return "VI";
    case CaseId::VII: return "VII";
    case CaseId::VIII: return "VIII";
  }
  return "?";
}

CaseId classify_case(const SmoothnessEnvelope& xi_env, const SmoothnessEnvelope& g_env) {
  xi_env.validate("measurement-noise envelope");
  g_env.validate("blur envelope");
  return classify_exponents(xi_env.poly_exp, xi_env.exp_exp, g_env.poly_exp, g_env.exp_exp);
}

CaseId classify_case(const Scenario& sc) {
  return classify_exponents(sc.xi_model().envelope().poly_exp, sc.xi_model().envelope().exp_exp,
                            sc.g_model().envelope().poly_exp, sc.g_model().envelope().exp_exp);
}

RiskInputs RiskInputs::from(const Scenario& sc) {
  const SmoothnessEnvelope& xe = sc.xi_model().envelope();
  const SmoothnessEnvelope& ge = sc.g_model().envelope();
  RiskInputs in;
  in.a = xe.poly_exp;
  in.b = xe.exp_exp;
  in.d = xe.exp_scale;
  in.alpha = ge.poly_exp;
  in.beta = ge.exp_exp;
  in.gamma = ge.exp_scale;
  in.sigma = sc.sigma();
  in.k = sc.sobolev().k;
  in.B = sc.sobolev().B;
  in.cg = ge.c_upper * ge.c_upper;
  return in;
}

double kappa_constant(double d, double b, double gamma, double beta) {
  if (!(beta > b) || !(b > 0.0))
    throw config_error("the small-h branch constant needs beta > b > 0", "envelope");
  if (!(d > 0.0) || !(gamma > 0.0))
    throw config_error("the small-h branch constant needs d > 0 and gamma > 0", "envelope");
  return std::pow(d * b / (gamma * beta), b / (beta - b)) * (d * (beta - b) / b);
}

double bias_bound(const RiskInputs& in, double h) {
  if (!(h >= 0.0) || !std::isfinite(h)) throw config_error("bandwidth h must be >= 0", "h");
  if (h == 0.0) return 0.0; // full band: nothing is discarded
  const double scale = 2.0 * in.cg * in.B * in.B / M_PI;
  if (h >= in.sigma) return scale * std::pow(h, 2.0 * in.k);
  double v = std::pow(in.sigma, -2.0 * in.alpha) * std::pow(h, 2.0 * in.alpha + 2.0 * in.k);
  if (in.gamma > 0.0) v *= std::exp(-2.0 * in.gamma * std::pow(in.sigma / h, in.beta));
  return scale * v;
}

VarianceBound variance_bound(const RiskInputs& in, double h) {
  if (!(h >= 0.0) || !std::isfinite(h)) throw config_error("bandwidth h must be >= 0", "h");
  const CaseId id = classify_exponents(in.a, in.b, in.alpha, in.beta);
  const double a = in.a, b = in.b, d = in.d;
  const double alpha = in.alpha, beta = in.beta, gamma = in.gamma;
  const double sigma = in.sigma;
  const std::string cn = case_name(id);

  // min{(h/sigma)^(2 alpha), 1} in log form, and its branch tag
  const auto log_min_arm = [&](double hh) { return std::min(2.0 * alpha * std::log(hh / sigma), 0.0); };
  const auto arm_tag = [&](double hh) { return hh >= sigma ? ": h >= sigma" : ": h < sigma"; };

  switch (id) {
    case CaseId::I:
    case CaseId::IV: {
      if (h == 0.0) return {std::pow(sigma, -(2.0 * a + 1.0)), cn + ": h = 0"};
      const double hv = std::pow(h, -(2.0 * a + 1.0));
      const double sv = std::pow(sigma, -(2.0 * a + 1.0));
      return {std::min(hv, sv), cn + arm_tag(h)};
    }
    case CaseId::II: {
      if (h == 0.0)
        throw admissibility_error(
            "h=0 is inadmissible in case II: rho^2(sigma) = infinity (logarithmic divergence)",
            "h");
      const double m = std::min(std::pow(h, -(2.0 * a + 1.0)), std::pow(sigma, -(2.0 * a + 1.0)));
      return {m * std::max(std::log(sigma / h), 1.0), cn + arm_tag(h)};
    }
    case CaseId::III: {
      if (h == 0.0)
        throw admissibility_error("h=0 is inadmissible in case III: rho^2(sigma) = infinity", "h");
      const double v = finite_or_throw(-(2.0 * a + 1.0) * std::log(h) + log_min_arm(h),
                                       "case III variance bound");
      return {v, cn + arm_tag(h)};
    }
    case CaseId::V: {
      const double thr = std::pow(gamma * beta * std::pow(sigma, beta) / (d * b), 1.0 / (beta - b));
      const std::string thr_text = "(gamma*beta*sigma^beta/(d*b))^(1/(beta-b))";
      const double kap = kappa_constant(d, b, gamma, beta);
      const double lv_peak = kap * std::pow(sigma, -beta * b / (beta - b)) +
                             (beta * (b - 2.0) / (2.0 * (beta - b)) - 2.0 * alpha) * std::log(sigma);
      if (h > 0.0 && h >= thr) { // boundary assigned to the large-h branch
        const double lv_edge = (b - 2.0 * a - 1.0) * std::log(h) + 2.0 * d * std::pow(h, -b) +
                               log_min_arm(h);
        // Just above the threshold the edge expression overshoots the peak value that the
        // truncated integral can reach; both expressions bound it, so take the smaller.
        // This keeps the bound continuous and nonincreasing in h across the branch point.
        if (lv_edge <= lv_peak)
          return {finite_or_throw(lv_edge, "case V variance bound"), cn + ": h >= " + thr_text};
        return {finite_or_throw(lv_peak, "case V variance bound"),
                cn + ": h >= " + thr_text + " (peak clamp)"};
      }
      const std::string tag =
          h == 0.0 ? cn + ": h = 0 (small-h branch)" : cn + ": h < " + thr_text;
      return {finite_or_throw(lv_peak, "case V variance bound"), tag};
    }
    case CaseId::VI: {
      if (h == 0.0)
        throw admissibility_error(
            "h=0 is inadmissible in case VI: rho^2(sigma) = infinity under the small-sigma "
            "condition",
            "h");
      const double lv = (b - 2.0 * a - 1.0) * std::log(h) +
                        2.0 * std::pow(h, -b) * (d - gamma * std::pow(sigma, b)) + log_min_arm(h);
      return {finite_or_throw(lv, "case VI variance bound"), cn + arm_tag(h)};
    }
    case CaseId::VII:
    case CaseId::VIII: {
      if (h == 0.0)
        throw admissibility_error("h=0 is inadmissible in case " + cn + ": rho^2(sigma) = infinity",
                                  "h");
      const double lv = (b - 2.0 * a - 1.0) * std::log(h) + 2.0 * d * std::pow(h, -b) +
                        log_min_arm(h);
      return {finite_or_throw(lv, "case " + cn + " variance bound"), cn + arm_tag(h)};
    }
  }
  throw numeric_error("unreachable case classification");
}

RiskBound risk_bound(const Scenario& sc, double h) {
  const RiskInputs in = RiskInputs::from(sc);
  VarianceBound vb = variance_bound(in, h);
  RiskBound out;
  out.h = h;
  out.delta1 = bias_bound(in, h);
  out.delta2 = vb.value;
  out.total = out.delta1 + out.delta2 / static_cast<double>(sc.n());
  out.case_id = classify_case(sc);
  out.branch = std::move(vb.branch);
  if (!std::isfinite(out.total)) throw numeric_error("risk bound overflows the double range");
  return out;
}

double PhiProfile::phi(double z) const {
  double v = 0.0;
  if (d > 0.0) v += 2.0 * d * std::pow(z, b) * std::pow(h, -b);
  if (gamma > 0.0) v -= 2.0 * gamma * std::pow(z, beta) * std::pow(sigma, beta) * std::pow(h, -beta);
  return v;
}

double PhiProfile::dphi(double z) const {
  double v = 0.0;
  if (d > 0.0) v += 2.0 * d * b * std::pow(z, b - 1.0) * std::pow(h, -b);
  if (gamma > 0.0)
    v -= 2.0 * gamma * beta * std::pow(z, beta - 1.0) * std::pow(sigma, beta) * std::pow(h, -beta);
  return v;
}

double PhiProfile::ddphi(double z) const {
  double v = 0.0;
  if (d > 0.0) v += 2.0 * d * b * (b - 1.0) * std::pow(z, b - 2.0) * std::pow(h, -b);
  if (gamma > 0.0)
    v -= 2.0 * gamma * beta * (beta - 1.0) * std::pow(z, beta - 2.0) * std::pow(sigma, beta) *
         std::pow(h, -beta);
  return v;
}

double PhiProfile::amplitude(double z) const {
  return std::pow(sigma * sigma * z * z / (h * h) + 1.0, -alpha) * std::pow(z * z + h * h, a);
}

PhiProfile phi_profile(const RiskInputs& in, double h) {
  if (!(in.b > 0.0) && !(in.beta > 0.0))
    throw config_error("saddle profile needs at least one exponential envelope component",
                       "envelope");
  if (!(h > 0.0) || !std::isfinite(h)) throw config_error("saddle profile needs h > 0", "h");
  PhiProfile p;
  p.a = in.a;
  p.b = in.b;
  p.d = in.d;
  p.alpha = in.alpha;
  p.beta = in.beta;
  p.gamma = in.gamma;
  p.sigma = in.sigma;
  p.h = h;
  if (in.b > 0.0 && in.beta > 0.0 && in.b != in.beta) {
    p.has_zstar = true;
    p.zstar = std::pow(in.d * in.b / (in.gamma * in.beta) * std::pow(in.sigma, -in.beta),
                       1.0 / (in.beta - in.b)) *
              h;
  }
  return p;
}

PhiProfile phi_profile(const Scenario& sc, double h) {
  return phi_profile(RiskInputs::from(sc), h);
}

LaplaceApprox laplace_approx(const std::function<double(double)>& P,
                             const std::function<double(double)>& Q,
                             const std::function<double(double)>& dQ,
                             const std::function<double(double)>& ddQ, double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw config_error("approximation interval needs lo < hi, both finite", "interval");

  // maximum of Q: golden-section candidate plus the endpoints
  double z0 = quad::golden_section_max(Q, lo, hi, 1e-10);
  double best = Q(z0);
  if (Q(lo) > best) {
    z0 = lo;
    best = Q(lo);
  }
  if (Q(hi) > best) {
    z0 = hi;
    best = Q(hi);
  }

  const double q1 = dQ(z0);
  const double q2 = ddQ(z0);
  if (std::abs(q1) < DERIV_EPS && std::abs(q2) < DERIV_EPS)
    throw numeric_error("degenerate maximum: both Q' and Q'' vanish at the located maximum");

  // Positional branch rule: the golden-section locator proves an interior
  // maximum only when it settles away from both endpoints.
  const double edge = 1e-6 * (hi - lo);
  const bool interior_pos = (z0 - lo > edge) && (hi - z0 > edge);

  LaplaceApprox out;
  if (interior_pos ? std::abs(q2) >= DERIV_EPS : std::abs(q1) < DERIV_EPS) {
    out.value = std::exp(best) * P(z0) / std::sqrt(std::abs(q2));
    out.branch = "interior";
  } else {
    out.value = std::exp(best) * P(z0) / std::abs(q1);
    out.branch = "boundary";
  }
  if (!std::isfinite(out.value))
    throw numeric_error("approximation overflows the double range (Q maximum " +
                        std::to_string(best) + ")");
  return out;
}

double solve_exp_eq(double z, double n) {
  if (!(n > M_E) || !std::isfinite(n) || !std::isfinite(z))
    throw config_error("equation exp(m) m^z = n needs finite z and n > e", "n");
  const double lnn = std::log(n);
  const double lnlnn = std::log(lnn);
  const auto f = [&](double m) { return m + z * std::log(m) - lnn; };

  double lo = 1.0;
  double hi = lnn + std::abs(z) * lnlnn + 10.0;
  if (f(lo) > 0.0 || f(hi) < 0.0) {
    hi *= 2.0; // widen once
    if (f(lo) > 0.0 || f(hi) < 0.0)
      throw numeric_error("no sign change bracketing the root of exp(m) m^z = n");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double exp_root_asymptotic(double z, double n) {
  if (!(n > M_E)) throw config_error("asymptotic root needs n > e", "n");
  const double lnn = std::log(n);
  return lnn - z * std::log(lnn);
}

} // namespace deconv
