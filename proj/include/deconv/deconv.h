/* deconv — density deconvolution under small Berkson-type blur.
 *
 * C interface to the deconv core. All functions return an int status:
 *   0 ok, 1 numeric failure, 2 config/argument error, 3 admissibility refusal.
 * On failure deconv_last_error_message()/deconv_last_error_context() describe
 * the problem for the calling thread. Handles are opaque; destroy what you
 * create. All operations are pure given their inputs; handles are immutable
 * after creation and safe to share across threads.
 */
#ifndef DECONV_H
#define DECONV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DECONV_API __declspec(dllexport)
#else
#define DECONV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  DECONV_OK = 0,
  DECONV_ERR_NUMERIC = 1,      /* internal numeric failure            */
  DECONV_ERR_CONFIG = 2,       /* config / argument validation error  */
  DECONV_ERR_INADMISSIBLE = 3  /* admissibility refusal (e.g. h=0 with divergent variance integral) */
};

typedef struct deconv_scenario deconv_scenario; /* models + n + sigma + smoothness-ball + run settings */
typedef struct deconv_density deconv_density;   /* density values on an x grid */

DECONV_API const char* deconv_version(void);

/* Thread-local description of the most recent failure on this thread. */
DECONV_API const char* deconv_last_error_message(void);
DECONV_API const char* deconv_last_error_context(void);

/* ---- scenario ----------------------------------------------------------- */

/* Build a scenario from config JSON text (see README for the schema).
 * Validates the schema, the envelope invariants, the small-sigma condition
 * and the smoothness-ball membership of the target density. */
DECONV_API int deconv_scenario_create(const char* json_text, deconv_scenario** out);
DECONV_API void deconv_scenario_destroy(deconv_scenario* sc);

DECONV_API uint64_t deconv_scenario_n(const deconv_scenario* sc);
DECONV_API double deconv_scenario_sigma(const deconv_scenario* sc);
DECONV_API uint32_t deconv_scenario_reps(const deconv_scenario* sc);
DECONV_API uint64_t deconv_scenario_seed(const deconv_scenario* sc);
DECONV_API size_t deconv_scenario_n_list(const deconv_scenario* sc, uint64_t* out, size_t cap);
/* sigma the scenario's sigma-rule assigns to sample size n (fixed rule: the base sigma). */
DECONV_API double deconv_scenario_sigma_for_n(const deconv_scenario* sc, uint64_t n);
/* Derived scenario with different (n, sigma); pass sigma <= 0 to keep the rule's value. */
DECONV_API int deconv_scenario_derive(const deconv_scenario* sc, uint64_t n, double sigma,
                                      deconv_scenario** out);

/* ---- classification and risk bounds ------------------------------------- */

/* Writes the case label ("I".."VIII") into buf. */
DECONV_API int deconv_classify(const deconv_scenario* sc, char* buf, size_t cap);

/* Finiteness of the h=0 variance integral; classification is analytic
 * (from envelope exponents), value by quadrature when finite. */
DECONV_API int deconv_rho_squared(const deconv_scenario* sc, int* finite, double* value);

typedef struct deconv_risk_bound {
  double h;
  double delta1;      /* squared-bias bound */
  double delta2;      /* variance bound (the n-free factor) */
  double total;       /* delta1 + delta2 / n */
  char case_label[8];
  char branch[64];
} deconv_risk_bound;

DECONV_API int deconv_risk_bound_eval(const deconv_scenario* sc, double h, deconv_risk_bound* out);

/* ---- bandwidth ----------------------------------------------------------- */

typedef struct deconv_bandwidth_decision {
  char case_label[8];
  char branch[16];       /* "above" / "below" */
  double threshold;      /* sigma threshold separating the branches */
  double h_opt;          /* 0 means: estimate without band-limiting */
  double predicted_delta;
  char trace[256];       /* formula the decision evaluated */
} deconv_bandwidth_decision;

DECONV_API int deconv_optimal_bandwidth(const deconv_scenario* sc, deconv_bandwidth_decision* out);

/* Minimize the risk bound over an ascending grid of h values (0 allowed as
 * first element when the h=0 variance integral is finite). */
DECONV_API int deconv_grid_search_bandwidth(const deconv_scenario* sc, const double* h_grid,
                                            size_t count, double* h_best, double* bound_best);

/* Slowly-varying bandwidth scales used by the oracle in the exponential-decay cases. */
DECONV_API int deconv_mu1(uint64_t n, double a, double b, double d, double k, double* out);
DECONV_API int deconv_mu2(uint64_t n, double a, double b, double d, double k,
                          double gamma_, double sigma, double* out);

/* ---- densities and estimation ------------------------------------------- */

DECONV_API int deconv_true_density(const deconv_scenario* sc, deconv_density** out);
DECONV_API int deconv_estimate_density(const deconv_scenario* sc, const double* samples,
                                       size_t count, double h, deconv_density** out);
DECONV_API void deconv_density_destroy(deconv_density* d);
DECONV_API size_t deconv_density_points(const deconv_density* d);
DECONV_API double deconv_density_h(const deconv_density* d);
DECONV_API double deconv_density_band(const deconv_density* d);
DECONV_API int deconv_density_copy(const deconv_density* d, double* x, double* value, size_t cap);
DECONV_API int deconv_ise(const deconv_density* a, const deconv_density* b, double* out);

/* ---- sampling and Monte Carlo ------------------------------------------- */

/* Fill buf with the scenario's n draws of Y = X + xi for replicate `rep`.
 * Deterministic in (seed, rep, index) — independent of call order or threads. */
DECONV_API int deconv_sample(const deconv_scenario* sc, uint64_t seed, uint64_t rep,
                             double* buf, size_t cap, size_t* written);

typedef struct deconv_mise {
  double mean_ise;
  double std_error;
  uint32_t reps;
  uint64_t seed;
  double h;
} deconv_mise;

/* rep_base offsets the replicate indices (draws are addressed by (seed, rep,
 * index)); a rate study gives point p the block rep_base = p*reps so points
 * never share draws. */
DECONV_API int deconv_mc_mise(const deconv_scenario* sc, double h, uint32_t reps,
                              uint64_t seed, int threads, uint64_t rep_base, deconv_mise* out);

typedef struct deconv_rate_fit {
  double slope;
  double intercept;
  double r_squared;
} deconv_rate_fit;

/* Least squares fit of y against x (used on ln MISE vs ln n). */
DECONV_API int deconv_fit_rate(const double* x, const double* y, size_t count, deconv_rate_fit* out);

/* ---- analysis helpers ---------------------------------------------------- */

/* Root m of exp(m)·m^z = n (n > e), and its closed-form asymptotic. */
DECONV_API int deconv_solve_exp_eq(double z, double n, double* out);
DECONV_API double deconv_exp_root_asymptotic(double z, double n);

typedef double (*deconv_realfn)(double z, void* ctx);

/* Laplace/endpoint approximation of the integral of P(z)·exp(Q(z)) over [lo,hi].
 * branch (if non-NULL, cap >= 16) receives "interior" or "boundary". */
DECONV_API int deconv_laplace_approx(deconv_realfn P, void* p_ctx,
                                     deconv_realfn Q, deconv_realfn dQ, deconv_realfn ddQ,
                                     void* q_ctx, double lo, double hi,
                                     double* value, char* branch, size_t branch_cap);

/* ---- selftest ------------------------------------------------------------ */

/* Runs the built-in example checks. Returns the number of failures and, if
 * report is non-NULL, a malloc'd line-per-check report to free with
 * deconv_string_free. */
DECONV_API int deconv_selftest_run(char** report);
DECONV_API void deconv_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DECONV_H */
