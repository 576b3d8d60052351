#pragma once

#include <string>

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// The numbered acceptance criteria. Each prints nothing; the driver prints
// one PASS/FAIL line per criterion from the returned outcome.
Outcome criterion1_selection_tables();
Outcome criterion2_redundant_statistics();
Outcome criterion3_ari_p_sweep();
Outcome criterion4_consistency();
Outcome criterion5_property_suites();
Outcome criterion6_cli_determinism();

}  // namespace acceptance
