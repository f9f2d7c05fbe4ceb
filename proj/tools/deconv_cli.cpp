// deconv-cli: command-line front end over the deconv C API.
//
// Exit codes: 0 ok, 1 numeric failure, 2 config error, 3 admissibility
// refusal. Errors go to stderr as single-line JSON {code, message, context}.
// All floating-point output uses 17 significant digits.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deconv/deconv.h"
#include "json.hpp"

namespace {

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit_error_json(int code, const std::string& message, const std::string& context) {
  nlohmann::json j{{"code", code}, {"message", message}, {"context", context}};
  std::cerr << j.dump() << "\n";
}

int fail_from_api(int status) {
  emit_error_json(status, deconv_last_error_message(), deconv_last_error_context());
  return status;
}

int fail_config(const std::string& message, const std::string& context) {
  emit_error_json(DECONV_ERR_CONFIG, message, context);
  return DECONV_ERR_CONFIG;
}

struct ScenarioHandle {
  deconv_scenario* sc = nullptr;
  ~ScenarioHandle() { deconv_scenario_destroy(sc); }
};

struct DensityHandle {
  deconv_density* d = nullptr;
  ~DensityHandle() { deconv_density_destroy(d); }
};

// Loads the config file and builds a scenario; on failure reports and
// returns the exit code, else 0.
int load_scenario(const std::string& path, ScenarioHandle& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail_config("cannot read config file", path);
  std::ostringstream text;
  text << in.rdbuf();
  int rc = deconv_scenario_create(text.str().c_str(), &out.sc);
  if (rc != DECONV_OK) return fail_from_api(rc);
  return 0;
}

// Output sink: --out path or stdout.
struct Sink {
  std::ofstream file;
  std::ostream* os = &std::cout;

  int open(const std::string& path) {
    if (path.empty()) return 0;
    file.open(path, std::ios::binary);
    if (!file) return fail_config("cannot open output file", path);
    os = &file;
    return 0;
  }
  std::ostream& out() { return *os; }
};

// --h accepts a nonnegative real, "oracle" (case-optimal bandwidth for the
// scenario at hand) or "zero".
int resolve_h(const std::string& spec, const deconv_scenario* sc, double& h) {
  if (spec == "zero") {
    h = 0.0;
    return 0;
  }
  if (spec == "oracle") {
    deconv_bandwidth_decision d;
    int rc = deconv_optimal_bandwidth(sc, &d);
    if (rc != DECONV_OK) return fail_from_api(rc);
    h = d.h_opt;
    return 0;
  }
  char* end = nullptr;
  double v = std::strtod(spec.c_str(), &end);
  if (end == spec.c_str() || *end != '\0' || !std::isfinite(v) || v < 0.0)
    return fail_config("--h must be a nonnegative real, 'oracle' or 'zero'", "--h=" + spec);
  h = v;
  return 0;
}

std::string bandwidth_json(const deconv_bandwidth_decision& d) {
  std::string s = "{\"case\":\"";
  s += d.case_label;
  s += "\",\"branch\":\"";
  s += d.branch;
  s += "\",\"threshold\":" + fmt17(d.threshold);
  s += ",\"h_opt\":" + fmt17(d.h_opt);
  s += ",\"predicted_delta\":" + fmt17(d.predicted_delta);
  s += ",\"trace\":\"";
  s += d.trace;
  s += "\"}";
  return s;
}

int cmd_classify(const std::string& config) {
  ScenarioHandle sh;
  if (int rc = load_scenario(config, sh)) return rc;
  char label[8];
  int rc = deconv_classify(sh.sc, label, sizeof label);
  if (rc != DECONV_OK) return fail_from_api(rc);
  std::cout << "{\"case\":\"" << label << "\"}\n";
  return 0;
}

int cmd_bandwidth(const std::string& config, const std::string& out_path) {
  ScenarioHandle sh;
  if (int rc = load_scenario(config, sh)) return rc;
  deconv_bandwidth_decision d;
  int rc = deconv_optimal_bandwidth(sh.sc, &d);
  if (rc != DECONV_OK) return fail_from_api(rc);
  Sink sink;
  if (int src = sink.open(out_path)) return src;
  sink.out() << bandwidth_json(d) << "\n";
  return 0;
}

int cmd_risk_bound(const std::string& config, const std::vector<std::string>& h_specs,
                   const std::string& out_path) {
  ScenarioHandle sh;
  if (int rc = load_scenario(config, sh)) return rc;
  if (h_specs.empty()) return fail_config("risk-bound needs at least one --h", "--h");
  Sink sink;
  if (int src = sink.open(out_path)) return src;
  sink.out() << "h,delta1,delta2,total,case,branch\n";
  for (const auto& spec : h_specs) {
    double h = 0.0;
    if (int rc = resolve_h(spec, sh.sc, h)) return rc;
    deconv_risk_bound rb;
    int rc = deconv_risk_bound_eval(sh.sc, h, &rb);
    if (rc != DECONV_OK) return fail_from_api(rc);
    sink.out() << fmt17(rb.h) << ',' << fmt17(rb.delta1) << ',' << fmt17(rb.delta2) << ','
               << fmt17(rb.total) << ',' << rb.case_label << ',' << rb.branch << "\n";
  }
  sink.out().flush();
  return 0;
}

int cmd_estimate(const std::string& config, const std::string& h_spec, bool truth,
                 std::optional<std::uint64_t> seed_opt, const std::string& format,
                 const std::string& out_path) {
  ScenarioHandle sh;
  if (int rc = load_scenario(config, sh)) return rc;
  DensityHandle dh;
  double h = 0.0;
  if (truth) {
    int rc = deconv_true_density(sh.sc, &dh.d);
    if (rc != DECONV_OK) return fail_from_api(rc);
  } else {
    if (int rc = resolve_h(h_spec, sh.sc, h)) return rc;
    std::uint64_t seed = seed_opt.value_or(deconv_scenario_seed(sh.sc));
    std::vector<double> ys(deconv_scenario_n(sh.sc));
    size_t written = 0;
    int rc = deconv_sample(sh.sc, seed, 0, ys.data(), ys.size(), &written);
    if (rc != DECONV_OK) return fail_from_api(rc);
    rc = deconv_estimate_density(sh.sc, ys.data(), written, h, &dh.d);
    if (rc != DECONV_OK) return fail_from_api(rc);
  }
  size_t m = deconv_density_points(dh.d);
  std::vector<double> xs(m), vals(m);
  if (int rc = deconv_density_copy(dh.d, xs.data(), vals.data(), m); rc != DECONV_OK)
    return fail_from_api(rc);
  Sink sink;
  if (int src = sink.open(out_path)) return src;
  if (format == "json") {
    std::string s = "{\"h\":" + fmt17(deconv_density_h(dh.d)) +
                    ",\"band\":" + fmt17(deconv_density_band(dh.d)) + ",\"x\":[";
    for (size_t i = 0; i < m; ++i) s += (i ? "," : "") + fmt17(xs[i]);
    s += "],\"value\":[";
    for (size_t i = 0; i < m; ++i) s += (i ? "," : "") + fmt17(vals[i]);
    s += "]}";
    sink.out() << s << "\n";
  } else {
    sink.out() << "x,value\n";
    for (size_t i = 0; i < m; ++i) sink.out() << fmt17(xs[i]) << ',' << fmt17(vals[i]) << "\n";
  }
  sink.out().flush();
  return 0;
}

std::string mise_csv_row(std::uint64_t n, const deconv_mise& m) {
  std::string s = std::to_string(n);
  s += ',' + fmt17(m.h) + ',' + fmt17(m.mean_ise) + ',' + fmt17(m.std_error) + ',' +
       std::to_string(m.reps) + ',' + std::to_string(m.seed);
  return s;
}

int cmd_mise(const std::string& config, const std::string& h_spec,
             std::optional<std::uint64_t> seed_opt, int threads, const std::string& format,
             const std::string& out_path) {
  ScenarioHandle sh;
  if (int rc = load_scenario(config, sh)) return rc;
  double h = 0.0;
  if (int rc = resolve_h(h_spec, sh.sc, h)) return rc;
  std::uint64_t seed = seed_opt.value_or(deconv_scenario_seed(sh.sc));
  deconv_mise m;
  int rc = deconv_mc_mise(sh.sc, h, deconv_scenario_reps(sh.sc), seed, threads, 0, &m);
  if (rc != DECONV_OK) return fail_from_api(rc);
  Sink sink;
  if (int src = sink.open(out_path)) return src;
  if (format == "json") {
    sink.out() << "{\"n\":" << deconv_scenario_n(sh.sc) << ",\"h\":" << fmt17(m.h)
               << ",\"mean_ise\":" << fmt17(m.mean_ise) << ",\"std_error\":" << fmt17(m.std_error)
               << ",\"reps\":" << m.reps << ",\"seed\":" << m.seed << "}\n";
  } else {
    sink.out() << "n,h,mean_ise,std_error,reps,seed\n";
    sink.out() << mise_csv_row(deconv_scenario_n(sh.sc), m) << "\n";
  }
  sink.out().flush();
  return 0;
}

int cmd_rates(const std::string& config, const std::string& h_spec,
              std::optional<std::uint64_t> seed_opt, int threads, const std::string& format,
              const std::string& out_path) {
  ScenarioHandle sh;
  if (int rc = load_scenario(config, sh)) return rc;
  size_t count = deconv_scenario_n_list(sh.sc, nullptr, 0);
  if (count < 3)
    return fail_config("rates needs an n_list with at least 3 entries in the config", "n_list");
  std::vector<std::uint64_t> n_list(count);
  deconv_scenario_n_list(sh.sc, n_list.data(), count);
  std::uint64_t seed = seed_opt.value_or(deconv_scenario_seed(sh.sc));
  std::uint32_t reps = deconv_scenario_reps(sh.sc);

  Sink sink;
  if (int src = sink.open(out_path)) return src;
  const bool json_all = format == "json";
  std::string points_json;
  if (!json_all) {
    sink.out() << "n,h,mean_ise,std_error,reps,seed\n";
    sink.out().flush();
  }

  std::vector<double> lnn, lnmise;
  for (size_t p = 0; p < n_list.size(); ++p) {
    ScenarioHandle point;
    int rc = deconv_scenario_derive(sh.sc, n_list[p], 0.0, &point.sc);
    if (rc != DECONV_OK) return fail_from_api(rc);
    double h = 0.0;
    if (int hrc = resolve_h(h_spec, point.sc, h)) return hrc;
    deconv_mise m;
    rc = deconv_mc_mise(point.sc, h, reps, seed, threads,
                        static_cast<std::uint64_t>(p) * reps, &m);
    if (rc != DECONV_OK) return fail_from_api(rc); // rows already flushed stay written
    if (json_all) {
      if (p > 0) points_json += ',';
      points_json += "{\"n\":" + std::to_string(n_list[p]) + ",\"h\":" + fmt17(m.h) +
                     ",\"mean_ise\":" + fmt17(m.mean_ise) +
                     ",\"std_error\":" + fmt17(m.std_error) + ",\"reps\":" +
                     std::to_string(m.reps) + ",\"seed\":" + std::to_string(m.seed) + "}";
    } else {
      sink.out() << mise_csv_row(n_list[p], m) << "\n";
      sink.out().flush();
    }
    lnn.push_back(std::log(static_cast<double>(n_list[p])));
    lnmise.push_back(std::log(m.mean_ise));
  }

  deconv_rate_fit fit;
  int rc = deconv_fit_rate(lnn.data(), lnmise.data(), lnn.size(), &fit);
  if (rc != DECONV_OK) return fail_from_api(rc);
  std::string fit_json = "{\"slope\":" + fmt17(fit.slope) +
                         ",\"intercept\":" + fmt17(fit.intercept) +
                         ",\"r_squared\":" + fmt17(fit.r_squared) + ",\"points\":[";
  for (size_t i = 0; i < lnn.size(); ++i)
    fit_json += (i ? "," : "") + std::string("[") + fmt17(lnn[i]) + ',' + fmt17(lnmise[i]) + "]";
  fit_json += "]}";

  if (json_all) {
    sink.out() << "{\"points\":[" << points_json << "],\"fit\":" << fit_json << "}\n";
    sink.out().flush();
  } else {
    // fit always lands on stdout so a CSV --out file stays pure CSV
    std::cout << fit_json << "\n";
  }
  return 0;
}

int cmd_laplace_check() {
  // Frozen cross-check of the peak approximation against adaptive quadrature:
  // for a Gaussian bump exp(-lambda z^2) on [-1,1] the exact integral is
  // sqrt(2*pi) times the interior approximation, for every lambda; for a
  // rising exponential exp(50 z) on [0,1] the boundary approximation matches
  // the exact value up to the e^{-50} endpoint correction.
  auto one = [](double, void*) -> double { return 1.0; };
  struct Bump {
    double lam;
  };
  auto q = [](double z, void* ctx) { return -static_cast<Bump*>(ctx)->lam * z * z; };
  auto dq = [](double z, void* ctx) { return -2.0 * static_cast<Bump*>(ctx)->lam * z; };
  auto ddq = [](double, void* ctx) { return -2.0 * static_cast<Bump*>(ctx)->lam; };

  bool all_ok = true;
  std::string rows;
  const double root_2pi = std::sqrt(2.0 * M_PI);
  for (double lam : {25.0, 50.0, 100.0, 200.0, 400.0}) {
    Bump ctx{lam};
    double value = 0.0;
    char branch[16];
    int rc = deconv_laplace_approx(one, nullptr, q, dq, ddq, &ctx, -1.0, 1.0, &value, branch,
                                   sizeof branch);
    if (rc != DECONV_OK) return fail_from_api(rc);
    // exact: sqrt(pi/lam) up to an erf correction below 1e-10 for lam >= 25
    double exact = std::sqrt(M_PI / lam);
    double ratio = exact / value;
    bool ok = std::fabs(ratio - root_2pi) <= 1e-6 * root_2pi && std::string(branch) == "interior";
    all_ok = all_ok && ok;
    if (!rows.empty()) rows += ',';
    rows += "{\"shape\":\"gaussian\",\"lambda\":" + fmt17(lam) + ",\"approx\":" + fmt17(value) +
            ",\"exact\":" + fmt17(exact) + ",\"ratio\":" + fmt17(ratio) + ",\"branch\":\"" +
            branch + "\",\"expected_ratio\":" + fmt17(root_2pi) +
            ",\"ok\":" + (ok ? "true" : "false") + "}";
  }
  {
    auto lq = [](double z, void*) { return 50.0 * z; };
    auto ldq = [](double, void*) { return 50.0; };
    auto lddq = [](double, void*) { return 0.0; };
    double value = 0.0;
    char branch[16];
    int rc = deconv_laplace_approx(one, nullptr, lq, ldq, lddq, nullptr, 0.0, 1.0, &value, branch,
                                   sizeof branch);
    if (rc != DECONV_OK) return fail_from_api(rc);
    double exact = (std::exp(50.0) - 1.0) / 50.0;
    double ratio = exact / value;
    bool ok = std::fabs(ratio - 1.0) <= 1e-6 && std::string(branch) == "boundary";
    all_ok = all_ok && ok;
    rows += ",{\"shape\":\"exponential\",\"lambda\":50,\"approx\":" + fmt17(value) +
            ",\"exact\":" + fmt17(exact) + ",\"ratio\":" + fmt17(ratio) + ",\"branch\":\"" +
            branch + "\",\"expected_ratio\":1,\"ok\":" + (ok ? "true" : "false") + "}";
  }
  std::cout << "{\"checks\":[" << rows << "],\"ok\":" << (all_ok ? "true" : "false") << "}\n";
  if (!all_ok) {
    emit_error_json(DECONV_ERR_NUMERIC, "peak approximation disagrees with quadrature",
                    "laplace-check");
    return DECONV_ERR_NUMERIC;
  }
  return 0;
}

int cmd_selftest() {
  char* report = nullptr;
  int failures = deconv_selftest_run(&report);
  if (failures < 0) {
    emit_error_json(DECONV_ERR_NUMERIC, deconv_last_error_message(),
                    deconv_last_error_context());
    return DECONV_ERR_NUMERIC;
  }
  size_t checks = 0;
  if (report != nullptr) {
    std::cout << report;
    for (const char* p = report; *p; ++p)
      if (*p == '\n') ++checks;
    deconv_string_free(report);
  }
  if (failures > 0) {
    std::cout << "selftest: FAIL (" << failures << " of " << checks << " checks)\n";
    return DECONV_ERR_NUMERIC;
  }
  std::cout << "selftest: PASS (" << checks << " checks)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"density deconvolution under small Berkson-type blur"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(deconv_version()));
  // --h is the bandwidth flag, so the short -h help alias has to go everywhere
  app.set_help_flag("--help", "print this help message and exit");

  std::string config, out_path, h_spec = "oracle", format = "csv";
  std::vector<std::string> h_specs;
  std::optional<std::uint64_t> seed_opt;
  int threads = 0;
  bool truth = false;

  auto add_sub = [&](const char* name, const char* desc) {
    auto* cmd = app.add_subcommand(name, desc);
    cmd->set_help_flag("--help", "print this help message and exit");
    return cmd;
  };
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "scenario config JSON")->required();
  };

  auto* c_classify = add_sub("classify", "print the smoothness-case label");
  add_config(c_classify);

  auto* c_bandwidth = add_sub("bandwidth", "case-optimal bandwidth and predicted risk");
  add_config(c_bandwidth);
  c_bandwidth->add_option("--out", out_path, "output path (default stdout)");

  auto* c_risk = add_sub("risk-bound", "evaluate the risk bound at given bandwidths");
  add_config(c_risk);
  c_risk->add_option("--h", h_specs, "bandwidth: nonnegative real, 'oracle' or 'zero' (repeatable)")
      ->required();
  c_risk->add_option("--out", out_path, "output path (default stdout)");

  auto* c_estimate = add_sub("estimate", "density estimate from simulated draws");
  add_config(c_estimate);
  c_estimate->add_option("--h", h_spec, "bandwidth: nonnegative real, 'oracle' or 'zero'");
  c_estimate->add_flag("--truth", truth, "emit the model density of W instead");
  c_estimate->add_option("--seed", seed_opt, "seed override");
  c_estimate->add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  c_estimate->add_option("--out", out_path, "output path (default stdout)");

  auto* c_mise = add_sub("mise", "Monte Carlo mean integrated squared error");
  add_config(c_mise);
  c_mise->add_option("--h", h_spec, "bandwidth: nonnegative real, 'oracle' or 'zero'");
  c_mise->add_option("--seed", seed_opt, "seed override");
  c_mise->add_option("--threads", threads, "worker threads (0 = machine parallelism)");
  c_mise->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  c_mise->add_option("--out", out_path, "output path (default stdout)");

  auto* c_rates = add_sub("rates", "MISE rate study over the config's n_list");
  add_config(c_rates);
  c_rates->add_option("--h", h_spec, "bandwidth rule: nonnegative real, 'oracle' or 'zero'");
  c_rates->add_option("--seed", seed_opt, "seed override");
  c_rates->add_option("--threads", threads, "worker threads (0 = machine parallelism)");
  c_rates->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  c_rates->add_option("--out", out_path, "CSV output path (default stdout; fit JSON -> stdout)");

  auto* c_laplace =
      add_sub("laplace-check", "cross-check the peak approximation against quadrature");
  auto* c_selftest = add_sub("selftest", "run the built-in example checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error_json(DECONV_ERR_CONFIG, e.what(), "command line");
    return DECONV_ERR_CONFIG;
  }

  if (c_classify->parsed()) return cmd_classify(config);
  if (c_bandwidth->parsed()) return cmd_bandwidth(config, out_path);
  if (c_risk->parsed()) return cmd_risk_bound(config, h_specs, out_path);
  if (c_estimate->parsed()) return cmd_estimate(config, h_spec, truth, seed_opt, format, out_path);
  if (c_mise->parsed()) return cmd_mise(config, h_spec, seed_opt, threads, format, out_path);
  if (c_rates->parsed()) return cmd_rates(config, h_spec, seed_opt, threads, format, out_path);
  if (c_laplace->parsed()) return cmd_laplace_check();
  if (c_selftest->parsed()) return cmd_selftest();
  return DECONV_ERR_CONFIG;
}
