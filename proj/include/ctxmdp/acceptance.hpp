#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ctxmdp {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double time_limit = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240611;
  /// Worker threads for the regret experiments.
  int workers = 1;
};

inline constexpr int kCriterionCount = 9;

/// Runs one acceptance check (1..9). The runtime limit is part of the
/// verdict.
CriterionResult run_criterion(int id, const AcceptanceOptions& options = {});

/// "criterion N [PASS|FAIL] name: detail (seconds)".
std::string format_result(const CriterionResult& result);

}  // namespace ctxmdp
