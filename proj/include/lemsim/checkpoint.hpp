#pragma once

#include <string>

#include "lemsim/marl.hpp"

namespace lemsim {

// Binary checkpoint: a magic/version tag, the shape header (agent count,
// observation dims, hidden widths, critic mode), then every network,
// target copy, and optimizer accumulator as raw little-endian doubles.
// Save followed by load reproduces the policy set exactly.
void save_policy_set(const std::string& path, const PolicySet& policies);
PolicySet load_policy_set(const std::string& path);

}  // namespace lemsim
