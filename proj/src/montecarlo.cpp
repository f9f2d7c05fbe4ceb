#include "montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "bandwidth.hpp"
#include "errors.hpp"

namespace deconv {

std::vector<double> sample_y(const Scenario& sc, std::uint64_t seed, std::uint64_t rep) {
  const std::uint64_t n = sc.n();
  std::vector<double> y(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    rng::CounterStream sx(seed, rep, i, rng::TAG_X);
    rng::CounterStream se(seed, rep, i, rng::TAG_XI);
    y[i] = sc.x_model().sample(sx) + sc.xi_model().sample(se);
  }
  return y;
}

MiseResult mc_mise(const Scenario& sc, double h, std::uint32_t reps, std::uint64_t seed,
                   int threads, const GridSpec& grid, std::uint64_t rep_base) {
  if (reps < 2) throw config_error("Monte Carlo needs reps >= 2", "reps");
  grid.validate();
  const DensityEstimate truth = true_fw(sc, grid);

  std::vector<double> ises(reps, 0.0);
  std::atomic<std::uint32_t> next{0};
  std::exception_ptr eptr;
  std::mutex emu;

  const auto body = [&]() {
    for (;;) {
      const std::uint32_t idx = next.fetch_add(1, std::memory_order_relaxed);
      if (idx >= reps) return;
      try {
        const std::vector<double> y = sample_y(sc, seed, rep_base + idx);
        const DensityEstimate est = estimate(sc, y, h, grid);
        ises[idx] = ise(est, truth);
      } catch (...) {
        {
          std::lock_guard<std::mutex> lk(emu);
          if (!eptr) eptr = std::current_exception();
        }
        next.store(reps, std::memory_order_relaxed);
        return;
      }
    }
  };

  const unsigned want =
      threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  const unsigned nt = std::min<unsigned>(want, reps);
  if (nt <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (eptr) std::rethrow_exception(eptr);

  // index-ordered reduction: independent of the thread count
  double mean = 0.0;
  for (const double v : ises) mean += v;
  mean /= static_cast<double>(reps);
  double ss = 0.0;
  for (const double v : ises) ss += (v - mean) * (v - mean);

  MiseResult out;
  out.mean_ise = mean;
  out.std_error =
      reps > 1 ? std::sqrt(ss / (static_cast<double>(reps) - 1.0) / static_cast<double>(reps)) : 0.0;
  out.reps = reps;
  out.seed = seed;
  out.h = h;
  return out;
}

std::vector<RatePoint> rate_study(const Scenario& sc, std::span<const std::uint64_t> n_list,
                                  const HRule& rule, std::uint32_t reps, std::uint64_t seed,
                                  int threads, const GridSpec& grid,
                                  const std::function<void(const RatePoint&)>& on_point) {
  if (n_list.size() < 3)
    throw config_error("rate study needs at least 3 sample sizes for a meaningful fit", "n_list");
  std::vector<RatePoint> points;
  points.reserve(n_list.size());
  for (std::size_t p = 0; p < n_list.size(); ++p) {
    const Scenario scn = sc.with_n_sigma(n_list[p], std::nullopt);
    double h = 0.0;
    switch (rule.mode) {
      case HRule::Mode::Oracle: h = optimal_bandwidth(scn).h_opt; break;
      case HRule::Mode::Zero: h = 0.0; break;
      case HRule::Mode::Fixed: h = rule.fixed; break;
    }
    const MiseResult m =
        mc_mise(scn, h, reps, seed, threads, grid, static_cast<std::uint64_t>(p) * reps);
    RatePoint pt;
    pt.n = n_list[p];
    pt.sigma = scn.sigma();
    pt.h = h;
    pt.mise = m.mean_ise;
    pt.std_error = m.std_error;
    points.push_back(pt);
    if (on_point) on_point(points.back());
  }
  return points;
}

RateFit fit_rate(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw config_error("rate fit needs matching x and y lengths", "fit");
  if (x.size() < 2) throw config_error("rate fit needs at least two points", "fit");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw config_error("rate fit needs non-constant x values", "fit");
  RateFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fit = out.intercept + out.slope * x[i];
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return out;
}

} // namespace deconv
