#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "estimator.hpp"
#include "spectral.hpp"

namespace deconv {

// Parsed scenario config document. Strict schema: unknown keys are rejected
// and every diagnostic names the offending field path.
struct ScenarioConfig {
  Scenario scenario;
  GridSpec grid;
  std::uint64_t seed = 0;
  std::uint32_t reps = 0;
  std::vector<std::uint64_t> n_list; // empty unless the config drives a rate study
};

ScenarioConfig load_config_text(const std::string& json_text);
ScenarioConfig load_config_file(const std::string& path);

// Default seed when neither the config nor DECONV_SEED provides one.
inline constexpr std::uint64_t DEFAULT_SEED = 1;
inline constexpr std::uint32_t DEFAULT_REPS = 100;

} // namespace deconv
