#pragma once

#include "linf/fields.hpp"
#include "linf/hamiltonian.hpp"
#include "linf/run_config.hpp"

#include <iosfwd>
#include <stdexcept>

namespace linf {

enum ExitStatus : int { kExitPass = 0, kExitFail = 1, kExitInconclusive = 2, kExitUsage = 3 };

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Problem {
  SampledMap map;
  HamiltonianModel model;
};

/// Builds the map and the Hamiltonian named by the configuration.
Problem build_problem(const RunConfig& cfg);

/// Executes the configured command. Reports go to `cfg.out` (or `out` when
/// empty); errors are described on `err`. Returns the exit status.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace linf
