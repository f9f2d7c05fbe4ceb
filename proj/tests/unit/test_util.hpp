#pragma once

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spectral.hpp"

namespace testutil {

inline deconv::Scenario make_sc(deconv::CharacteristicModel x, deconv::CharacteristicModel xi,
                                deconv::CharacteristicModel g, std::uint64_t n, double sigma,
                                double k = 1.0, double B = 2.0, deconv::SigmaRule rule = {}) {
  return deconv::Scenario::create(n, sigma, std::move(x), std::move(xi), std::move(g), {k, B},
                                  rule);
}

// One scenario per smoothness case; the target is Gaussian(1) with k=1, B=2
// throughout, only the noise/blur envelope pair changes.
inline deconv::Scenario case_scenario(int case_index, std::uint64_t n, double sigma) {
  using M = deconv::CharacteristicModel;
  const M x = M::gaussian(1.0);
  switch (case_index) {
    case 1: return make_sc(x, M::laplace(1.0), M::symmetric_gamma(1.0, 1.5), n, sigma);
    case 2: return make_sc(x, M::laplace(1.0), M::symmetric_gamma(1.0, 1.25), n, sigma);
    case 3: return make_sc(x, M::laplace(1.0), M::laplace(1.0), n, sigma);
    case 4: return make_sc(x, M::laplace(1.0), M::gaussian(1.0), n, sigma);
    case 5: return make_sc(x, M::exp_power(1.0, 1.0), M::gaussian(1.0), n, sigma);
    case 6: return make_sc(x, M::gaussian(1.0), M::gaussian(1.0), n, sigma);
    case 7: return make_sc(x, M::gaussian(1.0), M::laplace(1.0), n, sigma);
    case 8: return make_sc(x, M::gaussian(1.0), M::exp_power(1.0, 1.0), n, sigma);
    default: throw std::runtime_error("bad case index");
  }
}

inline std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    g[static_cast<std::size_t>(i)] =
        lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1));
  return g;
}

template <class Ex, class Fn>
void check_throws_containing(Fn&& fn, const std::string& needle) {
  try {
    fn();
    FAIL_CHECK("expected an exception mentioning '" << needle << "'");
  } catch (const Ex& e) {
    const std::string what = e.what();
    if (what.find(needle) == std::string::npos)
      FAIL_CHECK("exception text '" << what << "' lacks '" << needle << "'");
  }
}

} // namespace testutil
