#pragma once

// Run configuration for the command-line front end. The file format is flat
// `key = value` text with dotted section prefixes; every key has a matching
// command-line flag.

#include "linf/checker.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace linf {

/// Malformed configuration or flags (exit status 3).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string command = "check";

  std::string map = "linear";
  int n = 2;
  int N = 1;
  std::string map_csv;           // when set, the map is read from this file
  std::vector<double> map_B;     // "linear" gradient, row-major N x n
  std::vector<double> map_c;     // "linear" offset

  std::string hamiltonian = "sq_norm";
  std::vector<double> shift;     // "shifted_sq_norm" P0: one value or N x n row-major
  bool fd_only = false;          // drop analytic jets of both the map and H

  std::vector<double> box;       // lo,hi for every axis or lo1,hi1,...,lon,hin
  double spacing = 0.0;          // 0 keeps the registry default

  std::vector<double> epsilon = {0.2, 0.1, 0.05};
  std::vector<double> scales;
  int scale_levels = 5;
  std::string hessian = "automatic";
  double tol_residual = 1e-6;
  double tol_energy = 1e-8;
  double tol_c2 = 1e-8;
  std::size_t points = 16;
  std::size_t subdomains = 4;
  std::size_t null_samples = 2;
  double lambda0 = 1e-2;
  int lambda_levels = 8;
  bool exclude_rank_ambiguous = true;

  std::uint64_t seed = 0;

  std::string out;               // empty writes to standard output
  std::string format = "json";   // json, csv or table
  std::string csv;               // optional per-point CSV next to the main report

  CheckConfig check_config() const;
};

/// One configuration key with its flag spelling and accessors.
struct ConfigKey {
  std::string key;
  std::string flag;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// Applies `key = value` lines on top of `base`. '#' starts a comment.
RunConfig parse_config(std::istream& is, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});
std::string dump_config(const RunConfig& cfg);

/// Throws ConfigError when the configuration is inconsistent.
void validate(const RunConfig& cfg);

std::vector<std::string> command_names();

}  // namespace linf
