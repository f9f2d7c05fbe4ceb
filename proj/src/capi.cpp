#include "deconv/deconv.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <span>
#include <string>

#include "bandwidth.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "montecarlo.hpp"
#include "risk.hpp"
#include "scenario_config.hpp"
#include "selftest.hpp"
#include "spectral.hpp"

using namespace deconv;

extern "C" {

struct deconv_scenario {
  ScenarioConfig cfg;
};

struct deconv_density {
  DensityEstimate est;
};

}  // extern "C"

namespace {

thread_local std::string t_message;
thread_local std::string t_context;

void clear_error() {
  t_message.clear();
  t_context.clear();
}

void set_error(std::string message, std::string context) {
  t_message = std::move(message);
  t_context = std::move(context);
}

template <typename F>
int guarded(F&& body) {
  clear_error();
  try {
    body();
    return DECONV_OK;
  } catch (const config_error& e) {
    set_error(e.what(), e.context());
    return DECONV_ERR_CONFIG;
  } catch (const admissibility_error& e) {
    set_error(e.what(), e.context());
    return DECONV_ERR_INADMISSIBLE;
  } catch (const numeric_error& e) {
    set_error(e.what(), e.context());
    return DECONV_ERR_NUMERIC;
  } catch (const std::bad_alloc&) {
    set_error("out of memory", "");
    return DECONV_ERR_NUMERIC;
  } catch (const std::exception& e) {
    set_error(e.what(), "");
    return DECONV_ERR_NUMERIC;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw config_error(what);
}

void copy_str(char* dst, size_t cap, const std::string& src) {
  if (dst == nullptr || cap == 0) return;
  size_t len = src.size() < cap - 1 ? src.size() : cap - 1;
  std::memcpy(dst, src.data(), len);
  dst[len] = '\0';
}

}  // namespace

extern "C" {

DECONV_API const char* deconv_version(void) { return "1.0.0"; }

DECONV_API const char* deconv_last_error_message(void) { return t_message.c_str(); }
DECONV_API const char* deconv_last_error_context(void) { return t_context.c_str(); }

/* ---- scenario ----------------------------------------------------------- */

DECONV_API int deconv_scenario_create(const char* json_text, deconv_scenario** out) {
  return guarded([&] {
    require(json_text != nullptr && out != nullptr, "null pointer argument");
    auto* sc = new deconv_scenario{load_config_text(json_text)};
    *out = sc;
  });
}

DECONV_API void deconv_scenario_destroy(deconv_scenario* sc) { delete sc; }

DECONV_API uint64_t deconv_scenario_n(const deconv_scenario* sc) {
  return sc ? sc->cfg.scenario.n() : 0;
}

DECONV_API double deconv_scenario_sigma(const deconv_scenario* sc) {
  return sc ? sc->cfg.scenario.sigma() : 0.0;
}

DECONV_API uint32_t deconv_scenario_reps(const deconv_scenario* sc) {
  return sc ? sc->cfg.reps : 0;
}

DECONV_API uint64_t deconv_scenario_seed(const deconv_scenario* sc) {
  return sc ? sc->cfg.seed : 0;
}

DECONV_API size_t deconv_scenario_n_list(const deconv_scenario* sc, uint64_t* out, size_t cap) {
  if (sc == nullptr) return 0;
  const auto& list = sc->cfg.n_list;
  if (out != nullptr) {
    size_t take = list.size() < cap ? list.size() : cap;
    for (size_t i = 0; i < take; ++i) out[i] = list[i];
  }
  return list.size();
}

DECONV_API double deconv_scenario_sigma_for_n(const deconv_scenario* sc, uint64_t n) {
  if (sc == nullptr) return 0.0;
  clear_error();
  try {
    return sc->cfg.scenario.sigma_for_n(n);
  } catch (const std::exception& e) {
    set_error(e.what(), "");
    return std::nan("");
  }
}

DECONV_API int deconv_scenario_derive(const deconv_scenario* sc, uint64_t n, double sigma,
                                      deconv_scenario** out) {
  return guarded([&] {
    require(sc != nullptr && out != nullptr, "null pointer argument");
    std::optional<double> s;
    if (sigma > 0.0) s = sigma;
    auto* derived = new deconv_scenario{*sc};
    try {
      derived->cfg.scenario = sc->cfg.scenario.with_n_sigma(n, s);
    } catch (...) {
      delete derived;
      throw;
    }
    *out = derived;
  });
}

/* ---- classification and risk bounds ------------------------------------- */

DECONV_API int deconv_classify(const deconv_scenario* sc, char* buf, size_t cap) {
  return guarded([&] {
    require(sc != nullptr && buf != nullptr && cap >= 5, "need a scenario and a buffer (cap >= 5)");
    copy_str(buf, cap, case_name(classify_case(sc->cfg.scenario)));
  });
}

DECONV_API int deconv_rho_squared(const deconv_scenario* sc, int* finite, double* value) {
  return guarded([&] {
    require(sc != nullptr && finite != nullptr && value != nullptr, "null pointer argument");
    auto q = rho_squared(sc->cfg.scenario);
    *finite = q.finite ? 1 : 0;
    *value = q.finite ? q.value : HUGE_VAL;
  });
}

DECONV_API int deconv_risk_bound_eval(const deconv_scenario* sc, double h,
                                      deconv_risk_bound* out) {
  return guarded([&] {
    require(sc != nullptr && out != nullptr, "null pointer argument");
    RiskBound rb = risk_bound(sc->cfg.scenario, h);
    out->h = rb.h;
    out->delta1 = rb.delta1;
    out->delta2 = rb.delta2;
    out->total = rb.total;
    copy_str(out->case_label, sizeof out->case_label, case_name(rb.case_id));
    copy_str(out->branch, sizeof out->branch, rb.branch);
  });
}

/* ---- bandwidth ----------------------------------------------------------- */

DECONV_API int deconv_optimal_bandwidth(const deconv_scenario* sc,
                                        deconv_bandwidth_decision* out) {
  return guarded([&] {
    require(sc != nullptr && out != nullptr, "null pointer argument");
    BandwidthDecision d = optimal_bandwidth(sc->cfg.scenario);
    copy_str(out->case_label, sizeof out->case_label, case_name(d.case_id));
    copy_str(out->branch, sizeof out->branch,
             d.branch == ThresholdBranch::Above ? "above" : "below");
    out->threshold = d.threshold;
    out->h_opt = d.h_opt;
    out->predicted_delta = d.predicted_delta;
    copy_str(out->trace, sizeof out->trace, d.trace);
  });
}

DECONV_API int deconv_grid_search_bandwidth(const deconv_scenario* sc, const double* h_grid,
                                            size_t count, double* h_best, double* bound_best) {
  return guarded([&] {
    require(sc != nullptr && h_grid != nullptr && h_best != nullptr && bound_best != nullptr,
            "null pointer argument");
    auto r = grid_search_bandwidth(sc->cfg.scenario, std::span<const double>(h_grid, count));
    *h_best = r.h;
    *bound_best = r.bound;
  });
}

DECONV_API int deconv_mu1(uint64_t n, double a, double b, double d, double k, double* out) {
  return guarded([&] {
    require(out != nullptr, "null pointer argument");
    *out = mu1(n, a, b, d, k);
  });
}

DECONV_API int deconv_mu2(uint64_t n, double a, double b, double d, double k, double gamma_,
                          double sigma, double* out) {
  return guarded([&] {
    require(out != nullptr, "null pointer argument");
    *out = mu2(n, a, b, d, k, gamma_, sigma);
  });
}

/* ---- densities and estimation ------------------------------------------- */

DECONV_API int deconv_true_density(const deconv_scenario* sc, deconv_density** out) {
  return guarded([&] {
    require(sc != nullptr && out != nullptr, "null pointer argument");
    *out = new deconv_density{true_fw(sc->cfg.scenario, sc->cfg.grid)};
  });
}

DECONV_API int deconv_estimate_density(const deconv_scenario* sc, const double* samples,
                                       size_t count, double h, deconv_density** out) {
  return guarded([&] {
    require(sc != nullptr && samples != nullptr && out != nullptr, "null pointer argument");
    *out = new deconv_density{
        estimate(sc->cfg.scenario, std::span<const double>(samples, count), h, sc->cfg.grid)};
  });
}

DECONV_API void deconv_density_destroy(deconv_density* d) { delete d; }

DECONV_API size_t deconv_density_points(const deconv_density* d) {
  return d ? d->est.values.size() : 0;
}

DECONV_API double deconv_density_h(const deconv_density* d) { return d ? d->est.h : 0.0; }

DECONV_API double deconv_density_band(const deconv_density* d) { return d ? d->est.band : 0.0; }

DECONV_API int deconv_density_copy(const deconv_density* d, double* x, double* value, size_t cap) {
  return guarded([&] {
    require(d != nullptr, "null pointer argument");
    require(cap >= d->est.values.size(), "buffer too small for the density grid");
    for (size_t i = 0; i < d->est.values.size(); ++i) {
      if (x != nullptr) x[i] = d->est.grid.x(static_cast<uint32_t>(i));
      if (value != nullptr) value[i] = d->est.values[i];
    }
  });
}

DECONV_API int deconv_ise(const deconv_density* a, const deconv_density* b, double* out) {
  return guarded([&] {
    require(a != nullptr && b != nullptr && out != nullptr, "null pointer argument");
    *out = ise(a->est, b->est);
  });
}

/* ---- sampling and Monte Carlo ------------------------------------------- */

DECONV_API int deconv_sample(const deconv_scenario* sc, uint64_t seed, uint64_t rep, double* buf,
                             size_t cap, size_t* written) {
  return guarded([&] {
    require(sc != nullptr && buf != nullptr, "null pointer argument");
    require(cap >= sc->cfg.scenario.n(), "buffer too small for n draws");
    auto ys = sample_y(sc->cfg.scenario, seed, rep);
    std::memcpy(buf, ys.data(), ys.size() * sizeof(double));
    if (written != nullptr) *written = ys.size();
  });
}

DECONV_API int deconv_mc_mise(const deconv_scenario* sc, double h, uint32_t reps, uint64_t seed,
                              int threads, uint64_t rep_base, deconv_mise* out) {
  return guarded([&] {
    require(sc != nullptr && out != nullptr, "null pointer argument");
    MiseResult r = mc_mise(sc->cfg.scenario, h, reps, seed, threads, sc->cfg.grid, rep_base);
    out->mean_ise = r.mean_ise;
    out->std_error = r.std_error;
    out->reps = r.reps;
    out->seed = r.seed;
    out->h = r.h;
  });
}

DECONV_API int deconv_fit_rate(const double* x, const double* y, size_t count,
                               deconv_rate_fit* out) {
  return guarded([&] {
    require(x != nullptr && y != nullptr && out != nullptr, "null pointer argument");
    RateFit f = fit_rate(std::span<const double>(x, count), std::span<const double>(y, count));
    out->slope = f.slope;
    out->intercept = f.intercept;
    out->r_squared = f.r_squared;
  });
}

/* ---- analysis helpers ---------------------------------------------------- */

DECONV_API int deconv_solve_exp_eq(double z, double n, double* out) {
  return guarded([&] {
    require(out != nullptr, "null pointer argument");
    *out = solve_exp_eq(z, n);
  });
}

DECONV_API double deconv_exp_root_asymptotic(double z, double n) {
  clear_error();
  try {
    return exp_root_asymptotic(z, n);
  } catch (const std::exception& e) {
    set_error(e.what(), "");
    return std::nan("");
  }
}

DECONV_API int deconv_laplace_approx(deconv_realfn P, void* p_ctx, deconv_realfn Q,
                                     deconv_realfn dQ, deconv_realfn ddQ, void* q_ctx, double lo,
                                     double hi, double* value, char* branch, size_t branch_cap) {
  return guarded([&] {
    require(P != nullptr && Q != nullptr && dQ != nullptr && ddQ != nullptr && value != nullptr,
            "null pointer argument");
    auto r = laplace_approx([&](double z) { return P(z, p_ctx); },
                            [&](double z) { return Q(z, q_ctx); },
                            [&](double z) { return dQ(z, q_ctx); },
                            [&](double z) { return ddQ(z, q_ctx); }, lo, hi);
    *value = r.value;
    if (branch != nullptr) copy_str(branch, branch_cap, r.branch);
  });
}

/* ---- selftest ------------------------------------------------------------ */

DECONV_API int deconv_selftest_run(char** report) {
  clear_error();
  try {
    SelftestResult r = selftest_run();
    if (report != nullptr) {
      char* s = static_cast<char*>(std::malloc(r.report.size() + 1));
      if (s == nullptr) {
        set_error("out of memory", "");
        return -1;
      }
      std::memcpy(s, r.report.c_str(), r.report.size() + 1);
      *report = s;
    }
    return r.failures;
  } catch (const std::exception& e) {
    set_error(e.what(), "");
    return -1;
  }
}

DECONV_API void deconv_string_free(char* s) { std::free(s); }

}  // extern "C"
