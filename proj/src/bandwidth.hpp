#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "risk.hpp"
#include "spectral.hpp"

namespace deconv {

// Slowly-varying bandwidth scale for exponentially smooth measurement noise:
//   mu1 = [ (ln n + ((b-2a-2k-1)/b) ln ln n) / (2d) ]^(-1/b),
// and mu2, the same with d replaced by d - gamma sigma^b.
double mu1(std::uint64_t n, double a, double b, double d, double k);
double mu2(std::uint64_t n, double a, double b, double d, double k, double gamma, double sigma);

enum class ThresholdBranch { Above, Below };

struct BandwidthDecision {
  CaseId case_id = CaseId::I;
  ThresholdBranch branch = ThresholdBranch::Above;
  double threshold = 0.0;       // sigma threshold separating the branches
  double h_opt = 0.0;           // 0 means: estimate without band-limiting
  double predicted_delta = 0.0; // total-risk rate expression at (n, sigma)
  std::string trace;            // formula the decision evaluated
};

// Closed-form optimal bandwidth and predicted risk for the scenario's case.
BandwidthDecision optimal_bandwidth(const Scenario& sc);

struct GridSearchResult {
  double h = 0.0;
  double bound = 0.0;
};

// Minimizer of the evaluated risk bound over an ascending grid (independent
// check of the closed form). 0 is allowed only as the first entry and only
// where the h=0 variance is finite; ties keep the earliest grid point.
GridSearchResult grid_search_bandwidth(const Scenario& sc, std::span<const double> h_grid);

} // namespace deconv
