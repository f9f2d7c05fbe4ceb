#pragma once

#include <string>

namespace deconv {

// Result of the built-in example suite: closed-form and hand-checkable
// values exercised across every module.  `report` holds one line per
// check ("ok <name>" or "FAIL <name>: ...").
struct SelftestResult {
  int failures = 0;
  std::string report;
};

SelftestResult selftest_run();

}  // namespace deconv
