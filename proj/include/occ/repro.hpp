#pragma once

// Reproduction checks for the built-in seven-agent experiment. Each check
// times itself; its runtime limit is part of the pass condition.

#include <string>
#include <vector>

#include "occ/scenario.hpp"

namespace occ {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

CriterionResult check_regulator_values();
CriterionResult check_observer_riccati();
CriterionResult check_printed_gains();
CriterionResult check_random_topologies(int count = 200, unsigned long long seed = 2024);
CriterionResult check_observer_convergence();
CriterionResult check_containment();
CriterionResult check_learning(const std::vector<unsigned long long>& noise_seeds = {7, 1007, 2007});
CriterionResult check_negative_control();
CriterionResult check_regulation();

/// All nine checks in order.
std::vector<CriterionResult> run_acceptance();

/// "[PASS] 3 title (0.12 s): detail"
std::string format_result(const CriterionResult& r);

}  // namespace occ
