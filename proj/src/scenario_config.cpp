#include "scenario_config.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace deconv {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw config_error(what, path);
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double require_real(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) fail(path.empty() ? key : path + "." + key, "missing required key");
  if (!v->is_number()) fail(path.empty() ? key : path + "." + key, "expected a number");
  return v->get<double>();
}

std::uint64_t require_uint(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) fail(path.empty() ? key : path + "." + key, "missing required key");
  if (!v->is_number_unsigned())
    fail(path.empty() ? key : path + "." + key, "expected a non-negative integer");
  return v->get<std::uint64_t>();
}

double param_real(const json& params, const std::string& path, const char* key) {
  return require_real(params, path, key);
}

CharacteristicModel parse_model(const json& node, const std::string& path) {
  if (!node.is_object()) fail(path, "expected an object {family, params}");
  reject_unknown(node, path, {"family", "params"});
  const json* fam = find(node, "family");
  if (!fam || !fam->is_string()) fail(path + ".family", "missing or non-string family name");
  const std::string name = fam->get<std::string>();
  const json empty = json::object();
  const json* params = find(node, "params");
  if (params && !params->is_object()) fail(path + ".params", "expected an object");
  const json& p = params ? *params : empty;
  const std::string ppath = path + ".params";

  if (name == "gaussian") {
    reject_unknown(p, ppath, {"scale"});
    return CharacteristicModel::gaussian(param_real(p, ppath, "scale"));
  }
  if (name == "laplace") {
    reject_unknown(p, ppath, {"scale"});
    return CharacteristicModel::laplace(param_real(p, ppath, "scale"));
  }
  if (name == "symmetric_gamma") {
    reject_unknown(p, ppath, {"scale", "order"});
    return CharacteristicModel::symmetric_gamma(param_real(p, ppath, "scale"),
                                                param_real(p, ppath, "order"));
  }
  if (name == "exp_power") {
    reject_unknown(p, ppath, {"scale", "exponent"});
    return CharacteristicModel::exp_power(param_real(p, ppath, "scale"),
                                          param_real(p, ppath, "exponent"));
  }
  if (name == "identity") {
    reject_unknown(p, ppath, {});
    return CharacteristicModel::identity();
  }
  fail(path + ".family",
       "unknown family '" + name +
           "' (expected gaussian, laplace, symmetric_gamma, exp_power or identity)");
}

std::uint64_t seed_from_env_or_default() {
  if (const char* env = std::getenv("DECONV_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || (end && *end != '\0'))
      fail("DECONV_SEED", "environment override is not an unsigned integer");
    return static_cast<std::uint64_t>(v);
  }
  return DEFAULT_SEED;
}

} // namespace

ScenarioConfig load_config_text(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what(), "config");
  }
  if (!doc.is_object()) throw config_error("config root must be a JSON object", "config");
  reject_unknown(doc, "",
                 {"n", "sigma", "x_model", "xi_model", "g_model", "sobolev", "grid", "seed",
                  "reps", "n_list", "sigma_rule"});

  const std::uint64_t n = require_uint(doc, "", "n");

  // models
  const json* xm = find(doc, "x_model");
  const json* em = find(doc, "xi_model");
  const json* gm = find(doc, "g_model");
  if (!xm) fail("x_model", "missing required key");
  if (!em) fail("xi_model", "missing required key");
  if (!gm) fail("g_model", "missing required key");
  CharacteristicModel x = parse_model(*xm, "x_model");
  CharacteristicModel xi = parse_model(*em, "xi_model");
  CharacteristicModel g = parse_model(*gm, "g_model");

  // sobolev ball
  const json* sb = find(doc, "sobolev");
  if (!sb) fail("sobolev", "missing required key");
  if (!sb->is_object()) fail("sobolev", "expected an object {k, B}");
  reject_unknown(*sb, "sobolev", {"k", "B"});
  SobolevSpec sobolev;
  sobolev.k = require_real(*sb, "sobolev", "k");
  sobolev.B = require_real(*sb, "sobolev", "B");

  // sigma rule (extension): mode "fixed" needs an explicit sigma; mode
  // "power" derives sigma(n) = coef * n^(-1/(2k+2a+1)) and forbids a sigma key
  SigmaRule rule;
  if (const json* sr = find(doc, "sigma_rule")) {
    if (!sr->is_object()) fail("sigma_rule", "expected an object {mode, coef}");
    reject_unknown(*sr, "sigma_rule", {"mode", "coef"});
    const json* mode = find(*sr, "mode");
    if (!mode || !mode->is_string()) fail("sigma_rule.mode", "missing or non-string mode");
    const std::string m = mode->get<std::string>();
    if (m == "power") {
      rule.mode = SigmaRule::Mode::Power;
      rule.coef = require_real(*sr, "sigma_rule", "coef");
    } else if (m == "fixed") {
      rule.mode = SigmaRule::Mode::Fixed;
      if (find(*sr, "coef")) fail("sigma_rule.coef", "fixed mode takes no coefficient");
    } else {
      fail("sigma_rule.mode", "unknown mode '" + m + "' (expected fixed or power)");
    }
  }

  double sigma = 0.0;
  if (rule.mode == SigmaRule::Mode::Power) {
    if (find(doc, "sigma"))
      fail("sigma", "a power sigma_rule derives sigma from n; remove the sigma key");
    const double a = xi.envelope().poly_exp;
    sigma = rule.coef *
            std::pow(static_cast<double>(n), -1.0 / (2.0 * sobolev.k + 2.0 * a + 1.0));
  } else {
    sigma = require_real(doc, "", "sigma");
  }

  // grid (all-or-nothing defaults per key)
  GridSpec grid;
  if (const json* gr = find(doc, "grid")) {
    if (!gr->is_object()) fail("grid", "expected an object");
    reject_unknown(*gr, "grid", {"x_min", "x_max", "x_points", "s_points", "s_max"});
    if (find(*gr, "x_min")) grid.x_min = require_real(*gr, "grid", "x_min");
    if (find(*gr, "x_max")) grid.x_max = require_real(*gr, "grid", "x_max");
    if (find(*gr, "x_points"))
      grid.x_points = static_cast<std::uint32_t>(require_uint(*gr, "grid", "x_points"));
    if (find(*gr, "s_points"))
      grid.s_points = static_cast<std::uint32_t>(require_uint(*gr, "grid", "s_points"));
    if (find(*gr, "s_max")) grid.s_max = require_real(*gr, "grid", "s_max");
  }
  grid.validate();

  std::uint64_t seed = seed_from_env_or_default();
  if (find(doc, "seed")) seed = require_uint(doc, "", "seed");

  std::uint32_t reps = DEFAULT_REPS;
  if (find(doc, "reps")) {
    const std::uint64_t r = require_uint(doc, "", "reps");
    if (r < 1 || r > 0xffffffffull) fail("reps", "expected an integer in [1, 2^32)");
    reps = static_cast<std::uint32_t>(r);
  }

  std::vector<std::uint64_t> n_list;
  if (const json* nl = find(doc, "n_list")) {
    if (!nl->is_array() || nl->empty()) fail("n_list", "expected a non-empty array of integers");
    for (std::size_t i = 0; i < nl->size(); ++i) {
      const json& v = (*nl)[i];
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 1)
        fail("n_list[" + std::to_string(i) + "]", "expected a positive integer");
      n_list.push_back(v.get<std::uint64_t>());
    }
  }

  Scenario sc = Scenario::create(n, sigma, std::move(x), std::move(xi), std::move(g), sobolev, rule);
  return ScenarioConfig{std::move(sc), grid, seed, reps, std::move(n_list)};
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file '" + path + "'", "config");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str());
}

} // namespace deconv
