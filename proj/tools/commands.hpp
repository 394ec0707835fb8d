#pragma once

// Subcommands of the `cqa` tool. Exit codes: 0 success, 1 runtime failure,
// 2 usage or configuration error.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "cqa/encoder.hpp"
#include "cqa/params.hpp"

namespace cqa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr double kGradcheckTolerance = 1e-4;
inline constexpr double kGradcheckEpsilon = 1e-4;

struct GradcheckRun {
  Topology topology;
  GradCheckReport report;
};

/// Central-difference check of every topology at embed 4, 8 cells, MLP 8,
/// on sequences of length 1 to 5. `fault` corrupts one backward pass.
std::vector<GradcheckRun> gradcheck_all(std::uint64_t seed = 1, bool fault = false);

int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cqa::cli
