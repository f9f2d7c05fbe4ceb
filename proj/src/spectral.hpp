#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>

#include "rng.hpp"

namespace deconv {

// Two-sided envelope shape for |cf|:
//   c_lower * shape(s) <= |cf(s)| <= c_upper * shape(s),
//   shape(s) = (s^2+1)^(-poly_exp/2) * exp(-exp_scale * |s|^exp_exp).
struct SmoothnessEnvelope {
  double c_lower = 1.0;
  double c_upper = 1.0;
  double poly_exp = 0.0;   // a (measurement noise) or alpha (blur)
  double exp_exp = 0.0;    // b or beta
  double exp_scale = 0.0;  // d or gamma

  double shape(double s) const;
  void validate(const char* what) const; // throws config_error on a malformed envelope
};

enum class Family { Gaussian, Laplace, SymmetricGamma, ExpPower, Identity };

// A symmetric density with a real, positive characteristic function and a
// closed-form smoothness envelope. Identity is the degenerate point mass at 0
// (cf == 1), exempt from the envelope invariants.
class CharacteristicModel {
public:
  static CharacteristicModel gaussian(double scale);
  static CharacteristicModel laplace(double scale);
  static CharacteristicModel symmetric_gamma(double scale, double order);
  static CharacteristicModel exp_power(double scale, double exponent);
  static CharacteristicModel identity();

  Family family() const { return family_; }
  double scale() const { return scale_; }
  double shape_param() const { return shape_; }
  bool envelope_exempt() const { return family_ == Family::Identity; }
  const SmoothnessEnvelope& envelope() const { return env_; }
  std::string name() const;

  double cf_real(double s) const;  // all shipped families have a real cf
  std::complex<double> cf(double s) const { return {cf_real(s), 0.0}; }
  double density(double x) const;  // throws for Identity
  double sample(rng::CounterStream& stream) const;

private:
  CharacteristicModel(Family f, double scale, double shape);
  void fit_envelope();

  Family family_;
  double scale_;
  double shape_; // order (SymmetricGamma) / exponent (ExpPower); unused otherwise
  SmoothnessEnvelope env_;
};

std::complex<double> cf_eval(const CharacteristicModel& m, double s);

struct QuadValue {
  bool finite = false;
  double value = 0.0;
  std::string reason; // why divergent, when !finite
};

// Squared Sobolev-type norm (1/?) integral |cf|^2 (s^2+1)^k ds over the line.
// Divergence is decided analytically from the envelope tail, never from
// quadrature overflow.
QuadValue sobolev_norm_sq(const CharacteristicModel& m, double k);

struct SobolevSpec {
  double k = 1.0;
  double B = 1.0;
};

struct SigmaRule {
  enum class Mode { Fixed, Power } mode = Mode::Fixed;
  double coef = 0.0; // sigma(n) = coef * n^(-1/(2k+2a+1)) under Power
};

// Immutable problem instance: target density X, measurement noise xi, blur
// shape g with blur size sigma, sample size n, smoothness ball (k, B).
class Scenario {
public:
  static Scenario create(std::uint64_t n, double sigma, CharacteristicModel x,
                         CharacteristicModel xi, CharacteristicModel g, SobolevSpec sobolev,
                         SigmaRule rule = {});

  std::uint64_t n() const { return n_; }
  double sigma() const { return sigma_; }
  const CharacteristicModel& x_model() const { return x_; }
  const CharacteristicModel& xi_model() const { return xi_; }
  const CharacteristicModel& g_model() const { return g_; }
  const SobolevSpec& sobolev() const { return sobolev_; }
  const SigmaRule& sigma_rule() const { return rule_; }

  double sigma_for_n(std::uint64_t n) const;
  Scenario with_n_sigma(std::uint64_t n, std::optional<double> sigma) const;

private:
  Scenario(std::uint64_t n, double sigma, CharacteristicModel x, CharacteristicModel xi,
           CharacteristicModel g, SobolevSpec sobolev, SigmaRule rule);

  std::uint64_t n_;
  double sigma_;
  CharacteristicModel x_, xi_, g_;
  SobolevSpec sobolev_;
  SigmaRule rule_;
};

// Finiteness and value of the h=0 variance integral
// rho^2(sigma) = integral |g*(sigma w) / xi*(w)|^2 dw.
// rho_classification decides finiteness analytically from the envelope
// exponents (cheap, no quadrature and hence never fooled by overflow);
// rho_squared additionally evaluates the integral when finite.
QuadValue rho_classification(const Scenario& sc);
QuadValue rho_squared(const Scenario& sc);

} // namespace deconv
