#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace linf {

struct SelftestItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Runs a reduced version of the invariant suite (projector algebra,
/// decoupling, the infinity-Laplacian special case, jet consistency, the
/// affine space homogeneity, quotient clustering and the known-solution checks).
std::vector<SelftestItem> run_selftest(std::uint64_t seed);

}  // namespace linf
