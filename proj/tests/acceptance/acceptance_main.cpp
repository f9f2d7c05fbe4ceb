// Acceptance harness: one numbered end-to-end check per shipped guarantee.
// Prints one PASS/FAIL line per check; the exit code is the failure count.
//
//   deconv_acceptance <cli-binary> <configs-dir> [scratch-dir]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bandwidth.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "montecarlo.hpp"
#include "risk.hpp"
#include "spectral.hpp"

using nlohmann::json;
using namespace deconv;
using M = CharacteristicModel;

namespace {

int g_failures = 0;

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  std::va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void report(int idx, const char* name, bool pass, const std::string& detail) {
  std::printf("%s %d: %s%s%s\n", pass ? "PASS" : "FAIL", idx, name, detail.empty() ? "" : " -- ",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

template <class Fn>
void criterion(int idx, const char* name, Fn&& body) {
  std::string detail;
  bool pass = false;
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("unexpected exception: ") + e.what();
  }
  report(idx, name, pass, detail);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string run_cli(const std::string& cmd, int& exit_code) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) {
    exit_code = -1;
    return out;
  }
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, got);
  const int st = pclose(p);
  exit_code = (st >= 0 && WIFEXITED(st)) ? WEXITSTATUS(st) : -1;
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    g[static_cast<std::size_t>(i)] =
        lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1));
  return g;
}

// One scenario per smoothness case: Gaussian(1) target, k=1, B=2 throughout,
// only the (noise, blur) family pair changes.
Scenario matrix_scenario(int case_index, std::uint64_t n, double sigma) {
  const M x = M::gaussian(1.0);
  auto mk = [&](M xi, M g) {
    return Scenario::create(n, sigma, x, std::move(xi), std::move(g), {1.0, 2.0});
  };
  switch (case_index) {
    case 1: return mk(M::laplace(1.0), M::symmetric_gamma(1.0, 1.5));
    case 2: return mk(M::laplace(1.0), M::symmetric_gamma(1.0, 1.25));
    case 3: return mk(M::laplace(1.0), M::laplace(1.0));
    case 4: return mk(M::laplace(1.0), M::gaussian(1.0));
    case 5: return mk(M::exp_power(1.0, 1.0), M::gaussian(1.0));
    case 6: return mk(M::gaussian(1.0), M::gaussian(1.0));
    case 7: return mk(M::gaussian(1.0), M::laplace(1.0));
    case 8: return mk(M::gaussian(1.0), M::exp_power(1.0, 1.0));
  }
  throw std::runtime_error("bad case index");
}

// Three blur sizes per case: above / near / below the case's bandwidth
// threshold at the matrix sample size (10^4; 10^5 for the last case, whose
// upper branch needs the larger n).
const double kThrPoly = std::pow(10000.0, -1.0 / 7.0);
const double kSigma[8][3] = {
    {2.0 * kThrPoly, 1.2 * kThrPoly, 0.5 * kThrPoly},
    {2.0 * kThrPoly, 1.2 * kThrPoly, 0.5 * kThrPoly},
    {2.0 * kThrPoly, 1.2 * kThrPoly, 0.5 * kThrPoly},
    {2.0 * kThrPoly, 1.2 * kThrPoly, 0.5 * kThrPoly},
    {0.45, 0.38, 0.117},
    {0.45, 0.33, 0.14},
    {0.45, 0.33, 0.14},
    {0.33, 0.28, 0.14},
};

std::uint64_t matrix_n(int case_index) { return case_index == 8 ? 100000 : 10000; }

Scenario rate_template() {
  return Scenario::create(1024, 0.5, M::laplace(1.0), M::laplace(1.0), M::gaussian(1.0),
                          {1.0, 2.0});
}

double gaussian_pdf(double x, double variance) {
  return std::exp(-x * x / (2.0 * variance)) / std::sqrt(2.0 * M_PI * variance);
}

} // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <cli-binary> <configs-dir> [scratch-dir]\n", argv[0]);
    return 64;
  }
  const std::string cli = argv[1];
  const std::string cfg_dir = argv[2];
  const std::string scratch = argc > 3 ? argv[3] : "/tmp";
  const std::string rates_cfg = cfg_dir + "/rate_case_iv.json";
  const std::string csv_t2 = scratch + "/accept_rates_t2.csv";
  const std::string csv_t1 = scratch + "/accept_rates_t1.csv";

  // 1. Smoothing-rate reproduction through the CLI: co-varying blur size
  //    sigma = 0.5 n^{-1/7} below the bandwidth threshold, oracle bandwidth,
  //    n = 2^10..2^16. Expected ln-MISE slope -2/7 in ln n.
  criterion(1, "bandwidth-oracle rate study (CLI)", [&](std::string& d) {
    const auto t0 = std::chrono::steady_clock::now();
    int status = -1;
    const std::string cmd = cli + " rates --config " + rates_cfg +
                            " --h oracle --threads 2 --format csv --out " + csv_t2;
    const std::string out = run_cli(cmd, status);
    if (status != 0) {
      d = fmt("CLI exited with %d", status);
      return false;
    }
    const json fit = json::parse(out);
    const double slope = fit.at("slope").get<double>();
    const double r2 = fit.at("r_squared").get<double>();
    const int points = static_cast<int>(fit.at("points").size());
    const double secs = seconds_since(t0);
    d = fmt("slope %.4f (target %.4f +/- 0.15), r^2 %.4f, %d points, %.1f s", slope, -2.0 / 7.0,
            r2, points, secs);
    return points == 4 && std::abs(slope + 2.0 / 7.0) <= 0.15 && r2 >= 0.9 && secs < 600.0;
  });

  // 2. Parametric branch of the same families: fixed sigma = 0.5 above the
  //    threshold, direct h = 0 estimate; MISE must scale like 1/n.
  criterion(2, "direct-estimate rate in n", [&](std::string& d) {
    const std::vector<std::uint64_t> ns{1024, 4096, 16384, 65536};
    const auto pts = rate_study(rate_template(), ns, HRule::zero(), 100, 1, 0);
    std::vector<double> lx, ly;
    for (const auto& p : pts) {
      lx.push_back(std::log(static_cast<double>(p.n)));
      ly.push_back(std::log(p.mise));
    }
    const RateFit f = fit_rate(lx, ly);
    d = fmt("slope %.4f (target -1 +/- 0.2)", f.slope);
    return std::abs(f.slope + 1.0) <= 0.2;
  });

  // 3. Blur-size scaling of the direct estimate's error at fixed n = 2^14:
  //    ln MISE on ln sigma has slope -(2a+1) = -5 for Laplace noise (a = 2).
  criterion(3, "variance-dominated sigma sweep", [&](std::string& d) {
    GridSpec wide;
    wide.s_points = 2048;
    wide.s_max = 128.0; // the h=0 band at sigma ~ 0.1 extends past the default cap
    const std::vector<double> sigmas{0.8, 0.4, 0.2, 0.1};
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      const Scenario sc = matrix_scenario(4, 16384, sigmas[i]);
      const MiseResult r = mc_mise(sc, 0.0, 200, 1, 0, wide, i * 200);
      lx.push_back(std::log(sigmas[i]));
      ly.push_back(std::log(r.mean_ise));
    }
    const RateFit f = fit_rate(lx, ly);
    d = fmt("slope %.3f (target -5 +/- 1)", f.slope);
    return std::abs(f.slope + 5.0) <= 1.0;
  });

  // 4. Threshold phenomenon at n = 2^16: above the threshold the direct
  //    estimate beats the kernel bandwidth 2 n^{-1/7}; below it the ordering
  //    reverses. Both gaps must exceed twice the combined standard error.
  criterion(4, "direct-vs-kernel crossover", [&](std::string& d) {
    const double hk = 2.0 * std::pow(65536.0, -1.0 / 7.0);
    const Scenario hi = rate_template().with_n_sigma(65536, 0.5);
    const MiseResult hi0 = mc_mise(hi, 0.0, 100, 1, 0);
    const MiseResult hik = mc_mise(hi, hk, 100, 1, 0);
    GridSpec wide;
    wide.s_points = 2048;
    wide.s_max = 128.0;
    const double slo = 0.5 * std::pow(65536.0, -1.0 / 7.0);
    const Scenario lo = rate_template().with_n_sigma(65536, slo);
    const MiseResult lo0 = mc_mise(lo, 0.0, 100, 1, 0, wide);
    const MiseResult lok = mc_mise(lo, hk, 100, 1, 0, wide);
    const double gap_hi = hik.mean_ise - hi0.mean_ise;
    const double band_hi = 2.0 * std::hypot(hi0.std_error, hik.std_error);
    const double gap_lo = lo0.mean_ise - lok.mean_ise;
    const double band_lo = 2.0 * std::hypot(lo0.std_error, lok.std_error);
    d = fmt("sigma 0.50: direct wins by %.3g (2se %.3g); sigma %.4f: kernel wins by %.3g "
            "(2se %.3g)",
            gap_hi, band_hi, slo, gap_lo, band_lo);
    return gap_hi > band_hi && gap_lo > band_lo;
  });

  // 5. Closed-form bandwidth vs an independent 200-point log-grid search of
  //    the evaluated risk bound, over all 8 cases x 3 blur regimes. The two
  //    must agree within a factor 3 and pick h = 0 in exactly the same cells.
  criterion(5, "formula vs grid-search bandwidth", [&](std::string& d) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::pair<int, int>> zeros;
    double worst = 1.0;
    for (int c = 1; c <= 8; ++c) {
      for (int r = 0; r < 3; ++r) {
        const Scenario sc = matrix_scenario(c, matrix_n(c), kSigma[c - 1][r]);
        const BandwidthDecision bd = optimal_bandwidth(sc);
        std::vector<double> grid;
        if (rho_classification(sc).finite) grid.push_back(0.0);
        for (double h : log_grid(1e-3, 2.0, 200)) grid.push_back(h);
        const GridSearchResult gs = grid_search_bandwidth(sc, grid);
        if (bd.h_opt == 0.0) {
          if (gs.h != 0.0) {
            d = fmt("case %d regime %d: formula picks 0, search picks %.4g", c, r, gs.h);
            return false;
          }
          zeros.emplace_back(c, r);
        } else {
          if (gs.h == 0.0) {
            d = fmt("case %d regime %d: search picks 0, formula %.4g", c, r, bd.h_opt);
            return false;
          }
          const double ratio = gs.h / bd.h_opt;
          worst = std::max(worst, std::max(ratio, 1.0 / ratio));
          if (ratio < 1.0 / 3.0 || ratio > 3.0) {
            d = fmt("case %d regime %d: search %.4g vs formula %.4g (ratio %.2f)", c, r, gs.h,
                    bd.h_opt, ratio);
            return false;
          }
        }
      }
    }
    const std::vector<std::pair<int, int>> expect{{1, 0}, {1, 1}, {4, 0}, {4, 1}, {5, 0}};
    const double secs = seconds_since(t0);
    if (zeros != expect) {
      d = fmt("h=0 selected in %zu cells, not the expected 5", zeros.size());
      return false;
    }
    d = fmt("24 cells agree (worst ratio %.2f), h=0 in the expected 5 cells, %.2f s", worst,
            secs);
    return secs < 60.0;
  });

  // 6. Bound shape: squared-bias bound nondecreasing and variance bound
  //    nonincreasing in h on all 24 cells (overflow tolerated only before the
  //    first finite value of an ascending sweep); for the exponential-noise
  //    cases the variance row must match h^{-(2a+1)} times the peak
  //    approximation of the profile integral within a factor-10 corridor.
  criterion(6, "bound shape and peak approximation", [&](std::string& d) {
    for (int c = 1; c <= 8; ++c) {
      for (int r = 0; r < 3; ++r) {
        const Scenario sc = matrix_scenario(c, matrix_n(c), kSigma[c - 1][r]);
        const RiskInputs in = RiskInputs::from(sc);
        double prev = bias_bound(in, 0.0);
        for (double h : log_grid(1e-3, 2.0, 60)) {
          const double bb = bias_bound(in, h);
          if (bb < prev * (1.0 - 1e-12)) {
            d = fmt("case %d sigma %.3f: bias drops at h=%.4g", c, kSigma[c - 1][r], h);
            return false;
          }
          prev = bb;
        }
        // variance: sweep stops at h = 1 -- the rows are small-h expressions
        // and genuinely turn upward past h ~ 2 sqrt(d) for b = 2 envelopes
        std::vector<double> hs;
        if (rho_classification(sc).finite) hs.push_back(0.0);
        for (double h : log_grid(1e-3, 1.0, 60)) hs.push_back(h);
        bool seen = false;
        double vprev = 0.0;
        for (double h : hs) {
          double v = 0.0;
          try {
            v = variance_bound(in, h).value;
          } catch (const numeric_error&) {
            if (seen) {
              d = fmt("case %d sigma %.3f: overflow after a finite value at h=%.4g", c,
                      kSigma[c - 1][r], h);
              return false;
            }
            continue;
          }
          if (seen && v > vprev * (1.0 + 1e-9)) {
            d = fmt("case %d sigma %.3f: variance rises at h=%.4g (%.6g -> %.6g)", c,
                    kSigma[c - 1][r], h, vprev, v);
            return false;
          }
          seen = true;
          vprev = v;
        }
      }
    }

    // peak-approximation comparison, 8x8 (sigma, h) per exponential-noise case;
    // sweeps stay where both sides are in the same small-(sigma,h) regime
    double rmin = std::numeric_limits<double>::infinity();
    double rmax = 0.0;
    for (int c = 5; c <= 8; ++c) {
      const double shi = (c == 8) ? 0.33 : 0.45;
      const double slo = (c == 5) ? 0.117 : 0.14;
      for (double s : log_grid(slo, shi, 8)) {
        std::vector<double> hs;
        if (c == 5) {
          // four points below the variance branch threshold sigma^2, four at
          // kernel scales past the clamped window above it
          for (double m : {0.2, 0.35, 0.5, 0.7}) hs.push_back(m * s * s);
          for (double m : {0.85, 1.1, 1.5, 2.0}) hs.push_back(m * s);
        } else if (c == 8) {
          hs = log_grid(1.5 * s, 1.0, 8); // boundary-maximum regime needs h >> sigma
        } else {
          hs = log_grid(0.3, 1.0, 8);
        }
        const Scenario sc = matrix_scenario(c, 10000, s);
        const RiskInputs in = RiskInputs::from(sc);
        for (double h : hs) {
          const PhiProfile prof = phi_profile(in, h);
          const LaplaceApprox la = laplace_approx([&](double z) { return prof.amplitude(z); },
                                                  [&](double z) { return prof.phi(z); },
                                                  [&](double z) { return prof.dphi(z); },
                                                  [&](double z) { return prof.ddphi(z); }, 0.0,
                                                  1.0);
          const double approx = std::pow(h, -(2.0 * in.a + 1.0)) * la.value;
          const double q = approx / variance_bound(in, h).value;
          rmin = std::min(rmin, q);
          rmax = std::max(rmax, q);
          if (!(q >= 0.1 && q <= 10.0)) {
            d = fmt("case %d sigma %.3f h %.4g: ratio %.4g outside [0.1, 10]", c, s, h, q);
            return false;
          }
        }
      }
    }
    d = fmt("24 cells monotone; peak-approximation ratio within [%.3f, %.3f]", rmin, rmax);
    return true;
  });

  // 7. Root solving for the bandwidth scale equation exp(m) m^z = n, plus its
  //    closed-form asymptotic ln n - z ln ln n improving with n.
  criterion(7, "exponential root equation", [&](std::string& d) {
    double worst = 0.0;
    for (double z : {0.0, 1.0, 2.0, 3.5}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double n : {1e4, 1e6, 1e8, 1e12}) {
        const double m = solve_exp_eq(z, n);
        const double resid = std::abs(std::exp(m) * std::pow(m, z) / n - 1.0);
        worst = std::max(worst, resid);
        if (!(resid < 1e-9)) {
          d = fmt("z=%.1f n=%.0e: residual %.3g", z, n, resid);
          return false;
        }
        const double rel = std::abs(exp_root_asymptotic(z, n) - m) / m;
        if (!(rel < prev || rel <= 1e-10)) {
          d = fmt("z=%.1f: asymptotic error %.3g not below %.3g", z, rel, prev);
          return false;
        }
        prev = rel;
      }
    }
    d = fmt("worst relative residual %.2e; asymptotic error decreasing for each z", worst);
    return true;
  });

  // 8. Closed-form ground truths: the no-noise direct estimate equals the
  //    blur-density mixture; Gaussian target + Gaussian blur gives a Gaussian;
  //    ise reproduces the exact L2 distance between N(0,1) and N(0,4).
  criterion(8, "closed-form ground truths", [&](std::string& d) {
    const GridSpec grid;
    const Scenario mix_sc =
        Scenario::create(200, 0.5, M::gaussian(1.0), M::identity(), M::gaussian(1.0), {1.0, 2.0});
    const std::vector<double> ys = sample_y(mix_sc, 7, 0);
    const DensityEstimate est = estimate(mix_sc, ys, 0.0, grid);
    double sup_mix = 0.0;
    for (std::uint32_t i = 0; i < grid.x_points; ++i) {
      const double x = grid.x(i);
      double m = 0.0;
      for (double y : ys) m += mix_sc.g_model().density((x - y) / 0.5) / 0.5;
      m /= static_cast<double>(ys.size());
      sup_mix = std::max(sup_mix, std::abs(est.values[i] - m));
    }
    if (!(sup_mix <= 1e-6)) {
      d = fmt("mixture reduction sup-error %.3g", sup_mix);
      return false;
    }

    // sigma = 0.4 keeps the gaussian/gaussian pair strictly inside the small-blur
    // cap 0.5; W = X + sigma eta has variance 1 + sigma^2 = 1.16
    const Scenario gg =
        Scenario::create(100, 0.4, M::gaussian(1.0), M::gaussian(1.0), M::gaussian(1.0), {1.0, 2.0});
    const DensityEstimate tf = true_fw(gg, grid);
    double sup_gg = 0.0;
    for (std::uint32_t i = 0; i < grid.x_points; ++i)
      sup_gg = std::max(sup_gg, std::abs(tf.values[i] - gaussian_pdf(grid.x(i), 1.16)));
    if (!(sup_gg <= 1e-6)) {
      d = fmt("gaussian convolution sup-error %.3g", sup_gg);
      return false;
    }

    DensityEstimate fa, fb;
    fa.grid = grid;
    fb.grid = grid;
    for (std::uint32_t i = 0; i < grid.x_points; ++i) {
      fa.values.push_back(gaussian_pdf(grid.x(i), 1.0));
      fb.values.push_back(gaussian_pdf(grid.x(i), 4.0));
    }
    const double got = ise(fa, fb);
    const double expect = 1.5 / (2.0 * std::sqrt(M_PI)) - 2.0 / std::sqrt(10.0 * M_PI);
    if (!(std::abs(got - expect) <= 1e-4)) {
      d = fmt("ise %.6f vs closed form %.6f", got, expect);
      return false;
    }
    d = fmt("mixture sup %.2e, convolution sup %.2e, ise error %.2e", sup_mix, sup_gg,
            std::abs(got - expect));
    return true;
  });

  // 9. Determinism: rerunning the first check's CLI study with a different
  //    thread count must reproduce the CSV byte for byte.
  criterion(9, "thread-count determinism", [&](std::string& d) {
    int status = -1;
    const std::string cmd = cli + " rates --config " + rates_cfg +
                            " --h oracle --threads 1 --format csv --out " + csv_t1;
    const std::string out = run_cli(cmd, status);
    if (status != 0) {
      d = fmt("CLI exited with %d", status);
      return false;
    }
    (void)json::parse(out);
    const std::string a = slurp(csv_t2);
    const std::string b = slurp(csv_t1);
    if (a.empty() || b.empty()) {
      d = "empty CSV output";
      return false;
    }
    if (a != b) {
      d = fmt("CSV differs between thread counts (%zu vs %zu bytes)", a.size(), b.size());
      return false;
    }
    d = fmt("byte-identical CSV across --threads 2 and --threads 1 (%zu bytes)", a.size());
    return true;
  });

  std::printf("acceptance: %d/9 passed\n", 9 - g_failures);
  return g_failures;
}
