#include "spectral.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "quadrature.hpp"

namespace deconv {

namespace {

// Envelope constants are audited on |s| in [0, AUDIT_MAX]; beyond that the
// families' closed-form tails take over.
constexpr double AUDIT_MAX = 100.0;
constexpr int AUDIT_POINTS = 4001;

double gamma_draw(double shape, rng::CounterStream& stream) {
  if (shape < 1.0) {
    const double u = stream.next_unit();
    return gamma_draw(shape + 1.0, stream) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    const double x = stream.next_normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = stream.next_unit();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

// Symmetric stable draw with cf exp(-|t|^alpha), alpha in (0,2].
double stable_draw(double alpha, rng::CounterStream& stream) {
  const double theta = M_PI * (stream.next_unit() - 0.5);
  if (alpha == 1.0) return std::tan(theta);
  const double w = -std::log(stream.next_unit());
  const double t = std::sin(alpha * theta) / std::pow(std::cos(theta), 1.0 / alpha);
  const double r = std::pow(std::cos((1.0 - alpha) * theta) / w, (1.0 - alpha) / alpha);
  return t * r;
}

} // namespace

double SmoothnessEnvelope::shape(double s) const {
  double v = std::pow(s * s + 1.0, -0.5 * poly_exp);
  if (exp_scale > 0.0) v *= std::exp(-exp_scale * std::pow(std::abs(s), exp_exp));
  return v;
}

void SmoothnessEnvelope::validate(const char* what) const {
  const std::string ctx = what;
  if (!(c_lower > 0.0) || !(c_upper >= c_lower) || !std::isfinite(c_upper))
    throw config_error("envelope constants must satisfy 0 < c_lower <= c_upper < inf", ctx);
  if (!(poly_exp >= 0.0) || !(exp_exp >= 0.0) || !(exp_scale >= 0.0))
    throw config_error("envelope exponents must be nonnegative", ctx);
  if ((exp_exp == 0.0) != (exp_scale == 0.0))
    throw config_error("exponential envelope part needs both a positive exponent and a positive scale",
                       ctx);
  if (exp_scale == 0.0 && poly_exp <= 0.0)
    throw config_error("polynomial envelope exponent must be positive when the exponential part is absent",
                       ctx);
}

CharacteristicModel::CharacteristicModel(Family f, double scale, double shape)
    : family_(f), scale_(scale), shape_(shape) {
  switch (family_) {
    case Family::Gaussian:
      if (!(scale_ > 0.0)) throw config_error("gaussian scale must be positive", "scale");
      env_ = {1.0, 1.0, 0.0, 2.0, 0.5 * scale_ * scale_};
      break;
    case Family::Laplace:
      if (!(scale_ > 0.0)) throw config_error("laplace scale must be positive", "scale");
      env_ = {1.0, 1.0, 2.0, 0.0, 0.0};
      break;
    case Family::SymmetricGamma:
      if (!(scale_ > 0.0)) throw config_error("symmetric_gamma scale must be positive", "scale");
      if (!(shape_ > 0.0)) throw config_error("symmetric_gamma order must be positive", "order");
      env_ = {1.0, 1.0, 2.0 * shape_, 0.0, 0.0};
      break;
    case Family::ExpPower:
      if (!(scale_ > 0.0)) throw config_error("exp_power scale must be positive", "scale");
      if (!(shape_ > 0.0 && shape_ <= 2.0))
        throw config_error("exp_power exponent must lie in (0, 2]", "exponent");
      env_ = {1.0, 1.0, 0.0, shape_, scale_};
      break;
    case Family::Identity:
      env_ = {1.0, 1.0, 0.0, 0.0, 0.0};
      break;
  }
  if (!envelope_exempt()) {
    fit_envelope();
    env_.validate(name().c_str());
  }
}

void CharacteristicModel::fit_envelope() {
  double lo = 1e300, hi = 0.0;
  for (int i = 0; i < AUDIT_POINTS; ++i) {
    const double s = AUDIT_MAX * i / (AUDIT_POINTS - 1);
    const double ratio = cf_real(s) / env_.shape(s);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  env_.c_lower = lo;
  env_.c_upper = hi;
}

CharacteristicModel CharacteristicModel::gaussian(double scale) {
  return {Family::Gaussian, scale, 0.0};
}
CharacteristicModel CharacteristicModel::laplace(double scale) {
  return {Family::Laplace, scale, 0.0};
}
CharacteristicModel CharacteristicModel::symmetric_gamma(double scale, double order) {
  return {Family::SymmetricGamma, scale, order};
}
CharacteristicModel CharacteristicModel::exp_power(double scale, double exponent) {
  return {Family::ExpPower, scale, exponent};
}
CharacteristicModel CharacteristicModel::identity() { return {Family::Identity, 0.0, 0.0}; }

std::string CharacteristicModel::name() const {
  switch (family_) {
    case Family::Gaussian: return "gaussian(" + std::to_string(scale_) + ")";
    case Family::Laplace: return "laplace(" + std::to_string(scale_) + ")";
    case Family::SymmetricGamma:
      return "symmetric_gamma(" + std::to_string(scale_) + "," + std::to_string(shape_) + ")";
    case Family::ExpPower:
      return "exp_power(" + std::to_string(scale_) + "," + std::to_string(shape_) + ")";
    case Family::Identity: return "identity";
  }
  return "?";
}

double CharacteristicModel::cf_real(double s) const {
  switch (family_) {
    case Family::Gaussian: return std::exp(-0.5 * scale_ * scale_ * s * s);
    case Family::Laplace: return 1.0 / (1.0 + scale_ * scale_ * s * s);
    case Family::SymmetricGamma: return std::pow(1.0 + scale_ * scale_ * s * s, -shape_);
    case Family::ExpPower: return std::exp(-scale_ * std::pow(std::abs(s), shape_));
    case Family::Identity: return 1.0;
  }
  return 0.0;
}

std::complex<double> cf_eval(const CharacteristicModel& m, double s) { return m.cf(s); }

double CharacteristicModel::density(double x) const {
  switch (family_) {
    case Family::Gaussian: {
      const double v = scale_;
      return std::exp(-0.5 * x * x / (v * v)) / (v * std::sqrt(2.0 * M_PI));
    }
    case Family::Laplace:
      return std::exp(-std::abs(x) / scale_) / (2.0 * scale_);
    case Family::SymmetricGamma: {
      const double nu = shape_, lam = scale_;
      const double z = std::abs(x) / lam;
      if (z < 1e-12) {
        if (nu <= 0.5)
          throw numeric_error("symmetric_gamma density is unbounded at 0 for order <= 1/2");
        return std::tgamma(nu - 0.5) / (2.0 * lam * std::sqrt(M_PI) * std::tgamma(nu));
      }
      const double kv = std::cyl_bessel_k(nu - 0.5, z);
      return std::pow(0.5 * z, nu - 0.5) * kv / (lam * std::sqrt(M_PI) * std::tgamma(nu));
    }
    case Family::ExpPower: {
      const double v = scale_, beta = shape_;
      if (beta == 2.0) // cf exp(-v s^2) is a centered normal with variance 2v
        return std::exp(-0.25 * x * x / v) / std::sqrt(4.0 * M_PI * v);
      if (beta == 1.0) return v / (M_PI * (x * x + v * v));
      const double S = std::pow(std::log(1e16) / v, 1.0 / beta);
      const double seg = std::min(S, M_PI / (4.0 * (std::abs(x) + 1.0)));
      double total = 0.0;
      for (double lo = 0.0; lo < S; lo += seg) {
        const double hi = std::min(S, lo + seg);
        total += quad::adaptive_simpson(
            [&](double s) { return std::exp(-v * std::pow(s, beta)) * std::cos(s * x); }, lo, hi,
            1e-10, 1e-14);
      }
      return total / M_PI;
    }
    case Family::Identity:
      throw numeric_error("degenerate point-mass model has no density");
  }
  return 0.0;
}

double CharacteristicModel::sample(rng::CounterStream& stream) const {
  switch (family_) {
    case Family::Gaussian:
      return scale_ * stream.next_normal();
    case Family::Laplace: {
      const double u = stream.next_unit();
      return u < 0.5 ? scale_ * std::log(2.0 * u) : -scale_ * std::log(2.0 * (1.0 - u));
    }
    case Family::SymmetricGamma:
      return scale_ * (gamma_draw(shape_, stream) - gamma_draw(shape_, stream));
    case Family::ExpPower:
      return std::pow(scale_, 1.0 / shape_) * stable_draw(shape_, stream);
    case Family::Identity:
      return 0.0;
  }
  return 0.0;
}

QuadValue sobolev_norm_sq(const CharacteristicModel& m, double k) {
  if (m.family() == Family::Identity)
    return {false, 0.0, "point mass has a non-decaying spectrum"};
  const auto& env = m.envelope();
  if (env.exp_scale == 0.0 && k >= env.poly_exp - 0.5) {
    return {false, 0.0,
            "spectral tail |cf|^2 (s^2+1)^k ~ s^(2k-2a) is not integrable for k >= a - 1/2"};
  }
  const auto integrand = [&](double s) {
    const double c = m.cf_real(s);
    return c * c * std::pow(s * s + 1.0, k);
  };
  return {true, 2.0 * quad::integrate_to_infinity(integrand, 0.0), ""};
}

QuadValue rho_classification(const Scenario& sc) {
  const auto& xe = sc.xi_model().envelope();
  const auto& ge = sc.g_model().envelope();
  const double a = xe.poly_exp, b = xe.exp_exp, d = xe.exp_scale;
  const double alpha = ge.poly_exp, beta = ge.exp_exp, gamma = ge.exp_scale;
  const double sigma = sc.sigma();

  bool finite;
  std::string reason;
  if (beta > b) {
    finite = true;
  } else if (beta < b) {
    finite = false;
    reason = "noise spectrum decays on a faster exponential scale than the blur (beta < b)";
  } else if (b == 0.0) { // purely polynomial pair
    finite = alpha - a > 0.5;
    if (!finite)
      reason = "polynomial tail ratio s^(2a-2alpha) is not integrable for alpha <= a + 1/2";
  } else { // same exponential scale: compare the coefficients
    const double blur = gamma * std::pow(sigma, b);
    if (blur > d) {
      finite = true;
    } else if (blur < d) {
      finite = false;
      reason = "shared exponential scale with gamma*sigma^b < d leaves a growing ratio";
    } else {
      finite = alpha - a > 0.5;
      if (!finite)
        reason = "matched exponential scales reduce to a non-integrable polynomial ratio";
    }
  }
  return {finite, 0.0, reason};
}

QuadValue rho_squared(const Scenario& sc) {
  QuadValue cls = rho_classification(sc);
  if (!cls.finite) return cls;
  const double sigma = sc.sigma();

  const auto integrand = [&](double w) {
    const double num = sc.g_model().cf_real(sigma * w);
    const double den = sc.xi_model().cf_real(w);
    const double r = num / den;
    return r * r;
  };
  return {true, 2.0 * quad::integrate_to_infinity(integrand, 0.0), ""};
}

Scenario::Scenario(std::uint64_t n, double sigma, CharacteristicModel x, CharacteristicModel xi,
                   CharacteristicModel g, SobolevSpec sobolev, SigmaRule rule)
    : n_(n), sigma_(sigma), x_(std::move(x)), xi_(std::move(xi)), g_(std::move(g)),
      sobolev_(sobolev), rule_(rule) {}

Scenario Scenario::create(std::uint64_t n, double sigma, CharacteristicModel x,
                          CharacteristicModel xi, CharacteristicModel g, SobolevSpec sobolev,
                          SigmaRule rule) {
  if (n < 1) throw config_error("sample size n must be a positive integer", "n");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw config_error("sigma must be a positive finite real", "sigma");
  if (!(sobolev.k > 0.0)) throw config_error("smoothness degree k must be positive", "sobolev.k");
  if (!(sobolev.B > 0.0)) throw config_error("smoothness radius B must be positive", "sobolev.B");
  if (rule.mode == SigmaRule::Mode::Power && !(rule.coef > 0.0))
    throw config_error("sigma_rule coefficient must be positive", "sigma_rule.coef");

  const double d = xi.envelope().exp_scale, b = xi.envelope().exp_exp;
  const double gam = g.envelope().exp_scale;
  if (d > 0.0 && gam > 0.0) {
    const double cap = 0.5 * std::pow(d / gam, 1.0 / b);
    if (!(sigma < cap))
      throw config_error("sigma violates the small-blur condition sigma < (d/gamma)^(1/b)/2 (cap " +
                             std::to_string(cap) + ")",
                         "sigma");
  }

  const QuadValue norm = sobolev_norm_sq(x, sobolev.k);
  if (!norm.finite)
    throw config_error("target density lies outside the smoothness ball: " + norm.reason,
                       "x_model");
  if (norm.value > sobolev.B * sobolev.B * (1.0 + 1e-6))
    throw config_error("target density lies outside the smoothness ball: norm^2 = " +
                           std::to_string(norm.value) + " > B^2 = " +
                           std::to_string(sobolev.B * sobolev.B),
                       "sobolev.B");

  return Scenario(n, sigma, std::move(x), std::move(xi), std::move(g), sobolev, rule);
}

double Scenario::sigma_for_n(std::uint64_t n) const {
  if (rule_.mode == SigmaRule::Mode::Fixed) return sigma_;
  const double a = xi_.envelope().poly_exp, k = sobolev_.k;
  return rule_.coef * std::pow(static_cast<double>(n), -1.0 / (2.0 * k + 2.0 * a + 1.0));
}

Scenario Scenario::with_n_sigma(std::uint64_t n, std::optional<double> sigma) const {
  const double s = sigma.value_or(sigma_for_n(n));
  return create(n, s, x_, xi_, g_, sobolev_, rule_);
}

} // namespace deconv
