#pragma once

#include <iosfwd>

namespace fairauction {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRejected = 1;
inline constexpr int kExitTrainingAborted = 2;

// fairauction train|evaluate|sweep|heatmap|baseline --config <path> --out <dir> [--seed N] [--checkpoint <path>]
// Results go to stdout, progress and errors to stderr.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fairauction
