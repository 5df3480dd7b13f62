#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "msdrec/evaluation.hpp"

namespace msdrec::cli {

/// Exit codes: 0 success, 1 runtime or pipeline failure, 2 usage or configuration error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `5`, `2..8`, `2,3,5` or a comma list mixing both forms. Throws ConfigError.
std::vector<std::size_t> parse_k_list(std::string_view spec);

/// `FRACTION:grid:KLIST`, `FRACTION:grid`, `FRACTION:random:LO..HI:BUDGET`
/// or `FRACTION:random::BUDGET`. Throws PlanError.
SearchStage parse_stage(std::string_view spec);

/// `{"seed": …, "stages": [{"fraction", "strategy", "k_candidates", "k_range", "budget", "seed"}]}`.
SearchPlan parse_plan_json(std::string_view text);

}  // namespace msdrec::cli
