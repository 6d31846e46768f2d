#include "linf/run_config.hpp"

#include "linf/fields.hpp"
#include "linf/hamiltonian.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>

namespace linf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + s + "'");
}

long long parse_integer(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + s + "'");
}

std::size_t parse_count(const std::string& key, const std::string& s) {
  const long long v = parse_integer(key, s);
  if (v < 0) throw ConfigError(key + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t parse_seed(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    if (!s.empty() && s[0] != '-') {
      const unsigned long long v = std::stoull(s, &used);
      if (used == s.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an unsigned integer, got '" + s + "'");
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += format_double(v[i]);
  }
  return s;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> k;
  auto add = [&](std::string key, std::string flag, std::string help, auto set, auto get) {
    k.push_back({std::move(key), std::move(flag), std::move(help), set, get});
  };
  add("command", "--command", "residual, energy, variations, check or selftest",
      [](RunConfig& c, const std::string& v) { c.command = v; }, [](const RunConfig& c) { return c.command; });

  add("map.name", "--map", "registry map: linear, aronsson43, quadratic_bump",
      [](RunConfig& c, const std::string& v) { c.map = v; }, [](const RunConfig& c) { return c.map; });
  add("map.n", "--n", "domain dimension",
      [](RunConfig& c, const std::string& v) { c.n = static_cast<int>(parse_integer("map.n", v)); },
      [](const RunConfig& c) { return std::to_string(c.n); });
  add("map.N", "--N", "codomain dimension",
      [](RunConfig& c, const std::string& v) { c.N = static_cast<int>(parse_integer("map.N", v)); },
      [](const RunConfig& c) { return std::to_string(c.N); });
  add("map.csv", "--map-csv", "read the sampled map from a CSV file",
      [](RunConfig& c, const std::string& v) { c.map_csv = v; }, [](const RunConfig& c) { return c.map_csv; });
  add("map.B", "--map-B", "gradient of the linear map, row-major N x n",
      [](RunConfig& c, const std::string& v) { c.map_B = parse_list("map.B", v); },
      [](const RunConfig& c) { return join(c.map_B); });
  add("map.c", "--map-c", "offset of the linear map",
      [](RunConfig& c, const std::string& v) { c.map_c = parse_list("map.c", v); },
      [](const RunConfig& c) { return join(c.map_c); });

  add("hamiltonian.name", "--H", "sq_norm, sq_norm_plus_potential, shifted_sq_norm",
      [](RunConfig& c, const std::string& v) { c.hamiltonian = v; },
      [](const RunConfig& c) { return c.hamiltonian; });
  add("hamiltonian.shift", "--shift", "P0 of shifted_sq_norm: one value or N x n row-major",
      [](RunConfig& c, const std::string& v) { c.shift = parse_list("hamiltonian.shift", v); },
      [](const RunConfig& c) { return join(c.shift); });
  add("hamiltonian.fd_only", "--fd-only", "drop analytic derivatives of the map and H",
      [](RunConfig& c, const std::string& v) { c.fd_only = parse_bool("hamiltonian.fd_only", v); },
      [](const RunConfig& c) { return bool_text(c.fd_only); });

  add("domain.box", "--box", "lo,hi for all axes or lo1,hi1,...",
      [](RunConfig& c, const std::string& v) { c.box = parse_list("domain.box", v); },
      [](const RunConfig& c) { return join(c.box); });
  add("domain.spacing", "--spacing", "grid spacing (0 keeps the map default)",
      [](RunConfig& c, const std::string& v) { c.spacing = parse_double("domain.spacing", v); },
      [](const RunConfig& c) { return format_double(c.spacing); });

  add("check.epsilon", "--epsilon", "neighbourhood radii as fractions of the smallest box width",
      [](RunConfig& c, const std::string& v) { c.epsilon = parse_list("check.epsilon", v); },
      [](const RunConfig& c) { return join(c.epsilon); });
  add("check.scales", "--scales", "difference-quotient steps (empty: dyadic ladder)",
      [](RunConfig& c, const std::string& v) { c.scales = parse_list("check.scales", v); },
      [](const RunConfig& c) { return join(c.scales); });
  add("check.scale_levels", "--scale-levels", "rungs of the default dyadic ladder",
      [](RunConfig& c, const std::string& v) {
        c.scale_levels = static_cast<int>(parse_integer("check.scale_levels", v));
      },
      [](const RunConfig& c) { return std::to_string(c.scale_levels); });
  add("check.hessian", "--hessian", "automatic, analytic or diffuse",
      [](RunConfig& c, const std::string& v) { c.hessian = v; }, [](const RunConfig& c) { return c.hessian; });
  add("check.tol_residual", "--tol-residual", "residual tolerance",
      [](RunConfig& c, const std::string& v) { c.tol_residual = parse_double("check.tol_residual", v); },
      [](const RunConfig& c) { return format_double(c.tol_residual); });
  add("check.tol_energy", "--tol-energy", "energy tolerance",
      [](RunConfig& c, const std::string& v) { c.tol_energy = parse_double("check.tol_energy", v); },
      [](const RunConfig& c) { return format_double(c.tol_energy); });
  add("check.tol_c2", "--tol-c2", "tolerance of the C2 identities",
      [](RunConfig& c, const std::string& v) { c.tol_c2 = parse_double("check.tol_c2", v); },
      [](const RunConfig& c) { return format_double(c.tol_c2); });
  add("check.points", "--points", "sampled points per check",
      [](RunConfig& c, const std::string& v) { c.points = parse_count("check.points", v); },
      [](const RunConfig& c) { return std::to_string(c.points); });
  add("check.subdomains", "--subdomains", "sub-boxes in the converse check",
      [](RunConfig& c, const std::string& v) { c.subdomains = parse_count("check.subdomains", v); },
      [](const RunConfig& c) { return std::to_string(c.subdomains); });
  add("check.null_samples", "--null-samples", "null-space draws per normal direction",
      [](RunConfig& c, const std::string& v) { c.null_samples = parse_count("check.null_samples", v); },
      [](const RunConfig& c) { return std::to_string(c.null_samples); });
  add("check.lambda0", "--lambda0", "largest step of the lambda ladder",
      [](RunConfig& c, const std::string& v) { c.lambda0 = parse_double("check.lambda0", v); },
      [](const RunConfig& c) { return format_double(c.lambda0); });
  add("check.lambda_levels", "--lambda-levels", "halvings in the lambda ladder",
      [](RunConfig& c, const std::string& v) {
        c.lambda_levels = static_cast<int>(parse_integer("check.lambda_levels", v));
      },
      [](const RunConfig& c) { return std::to_string(c.lambda_levels); });
  add("check.exclude_rank_ambiguous", "--exclude-rank-ambiguous", "skip points where the rank of H_P is unclear",
      [](RunConfig& c, const std::string& v) {
        c.exclude_rank_ambiguous = parse_bool("check.exclude_rank_ambiguous", v);
      },
      [](const RunConfig& c) { return bool_text(c.exclude_rank_ambiguous); });

  add("run.seed", "--seed", "seed of the point and direction sampler",
      [](RunConfig& c, const std::string& v) { c.seed = parse_seed("run.seed", v); },
      [](const RunConfig& c) { return std::to_string(c.seed); });

  add("output.out", "--out", "report path (empty: standard output)",
      [](RunConfig& c, const std::string& v) { c.out = v; }, [](const RunConfig& c) { return c.out; });
  add("output.format", "--format", "json, csv or table",
      [](RunConfig& c, const std::string& v) { c.format = v; }, [](const RunConfig& c) { return c.format; });
  add("output.csv", "--csv", "also write per-point CSV here",
      [](RunConfig& c, const std::string& v) { c.csv = v; }, [](const RunConfig& c) { return c.csv; });
  return k;
}

const ConfigKey& find_key(const std::string& key) {
  for (const auto& k : config_keys())
    if (k.key == key) return k;
  throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_key(key).set(cfg, trim(value));
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return find_key(key).get(cfg); }

RunConfig parse_config(std::istream& is, RunConfig base) {
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    try {
      set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& k : config_keys()) {
    const auto dot = k.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : k.key.substr(0, dot);
    if (!out.empty() && sec != section) out += "\n";
    section = sec;
    out += k.key + " = " + k.get(cfg) + "\n";
  }
  return out;
}

std::vector<std::string> command_names() { return {"residual", "energy", "variations", "check", "selftest"}; }

void validate(const RunConfig& cfg) {
  auto one_of = [](const std::string& v, const std::vector<std::string>& options) {
    return std::find(options.begin(), options.end(), v) != options.end();
  };
  if (!one_of(cfg.command, command_names())) throw ConfigError("unknown command '" + cfg.command + "'");
  if (!one_of(cfg.format, {"json", "csv", "table"})) throw ConfigError("format must be json, csv or table");
  if (!one_of(cfg.hessian, {"automatic", "analytic", "diffuse"}))
    throw ConfigError("hessian must be automatic, analytic or diffuse");
  if (cfg.map_csv.empty()) {
    if (!one_of(cfg.map, test_map_names())) throw ConfigError("unknown map '" + cfg.map + "'");
    if (cfg.n < 1 || cfg.N < 1) throw ConfigError("map dimensions must be positive");
    if (!cfg.box.empty() && cfg.box.size() != 2 && cfg.box.size() != static_cast<std::size_t>(2 * cfg.n))
      throw ConfigError("domain.box needs 2 or 2n values");
    if (!cfg.map_B.empty() && cfg.map_B.size() != static_cast<std::size_t>(cfg.n * cfg.N))
      throw ConfigError("map.B needs N * n values");
    if (!cfg.map_c.empty() && cfg.map_c.size() != static_cast<std::size_t>(cfg.N))
      throw ConfigError("map.c needs N values");
  } else if (!std::filesystem::exists(cfg.map_csv)) {
    throw ConfigError("map file '" + cfg.map_csv + "' does not exist");
  }
  if (!one_of(cfg.hamiltonian, builtin_hamiltonian_names()))
    throw ConfigError("unknown Hamiltonian '" + cfg.hamiltonian + "'");
  if (cfg.spacing < 0.0) throw ConfigError("domain.spacing must be non-negative");
  try {
    cfg.check_config().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

CheckConfig RunConfig::check_config() const {
  CheckConfig c;
  c.seed = seed;
  c.points = points;
  c.epsilon_fractions = epsilon;
  c.hessian.scales = scales;
  c.hessian.scale_levels = scale_levels;
  c.hessian.source = hessian == "analytic"  ? HessianSource::analytic
                     : hessian == "diffuse" ? HessianSource::diffuse
                                            : HessianSource::automatic;
  c.residual_tol = tol_residual;
  c.energy_tol = tol_energy;
  c.c2_tol = tol_c2;
  c.subdomains = subdomains;
  c.null_samples = null_samples;
  c.lambda0 = lambda0;
  c.lambda_levels = lambda_levels;
  c.exclude_rank_ambiguous = exclude_rank_ambiguous;
  return c;
}

}  // namespace linf
