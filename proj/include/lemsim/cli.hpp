#pragma once

namespace lemsim {

// Experiment driver entry point. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace lemsim
