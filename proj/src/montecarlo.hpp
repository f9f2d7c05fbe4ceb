#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "estimator.hpp"
#include "spectral.hpp"

namespace deconv {

// The n draws of Y = X + xi for one replicate. Each scalar draw is addressed
// by (seed, rep, index, component tag), so the result is independent of call
// order and thread assignment.
std::vector<double> sample_y(const Scenario& sc, std::uint64_t seed, std::uint64_t rep);

struct MiseResult {
  double mean_ise = 0.0;
  double std_error = 0.0; // sample sd of the per-replicate ISE / sqrt(reps)
  std::uint32_t reps = 0;
  std::uint64_t seed = 0;
  double h = 0.0;
};

// Monte Carlo MISE of the estimator at bandwidth h. Replicates run on a
// thread pool (threads <= 0: hardware count); the reduction is index-ordered,
// so results are bitwise identical for any thread count.
MiseResult mc_mise(const Scenario& sc, double h, std::uint32_t reps, std::uint64_t seed,
                   int threads, const GridSpec& grid = {}, std::uint64_t rep_base = 0);

struct HRule {
  enum class Mode { Oracle, Zero, Fixed } mode = Mode::Oracle;
  double fixed = 0.0;

  static HRule oracle() { return {Mode::Oracle, 0.0}; }
  static HRule zero() { return {Mode::Zero, 0.0}; }
  static HRule fixed_h(double h) { return {Mode::Fixed, h}; }
};

struct RatePoint {
  std::uint64_t n = 0;
  double sigma = 0.0;
  double h = 0.0;
  double mise = 0.0;
  double std_error = 0.0;
};

// One Monte Carlo MISE per sample size: sigma comes from the scenario's
// sigma rule, h from the bandwidth rule. Replicate indices are partitioned
// across points so no two points share draws. on_point (optional) observes
// each finished point in order.
std::vector<RatePoint> rate_study(const Scenario& sc, std::span<const std::uint64_t> n_list,
                                  const HRule& rule, std::uint32_t reps, std::uint64_t seed,
                                  int threads, const GridSpec& grid = {},
                                  const std::function<void(const RatePoint&)>& on_point = nullptr);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares of y against x (used on ln MISE vs ln n).
RateFit fit_rate(std::span<const double> x, std::span<const double> y);

} // namespace deconv
