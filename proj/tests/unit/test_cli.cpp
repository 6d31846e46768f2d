#include "linf/report.hpp"
#include "linf/run.hpp"
#include "linf/run_config.hpp"

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace linf;

namespace {

std::string tmp_path(const std::string& name) { return std::string(LINF_TEST_TMPDIR) + "/" + name; }

RunConfig small(const std::string& command, const std::string& map = "linear") {
  RunConfig cfg;
  cfg.command = command;
  cfg.map = map;
  cfg.points = 4;
  cfg.subdomains = 2;
  return cfg;
}

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome invoke(const RunConfig& cfg) {
  std::ostringstream out, err;
  const int status = run(cfg, out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("every key round-trips through the file format") {
  RunConfig cfg;
  cfg.command = "residual";
  cfg.map = "aronsson43";
  cfg.map_B = {1.0, 2.0};
  cfg.map_c = {0.5};
  cfg.hamiltonian = "shifted_sq_norm";
  cfg.shift = {0.1};
  cfg.fd_only = true;
  cfg.box = {0.25, 1.25};
  cfg.spacing = 1.0 / 64.0;
  cfg.epsilon = {0.3, 0.15};
  cfg.scales = {0.1, 0.05};
  cfg.scale_levels = 3;
  cfg.hessian = "diffuse";
  cfg.tol_residual = 1.0 / 3.0;
  cfg.tol_energy = 2.5e-7;
  cfg.points = 7;
  cfg.seed = 18446744073709551615ULL;
  cfg.lambda0 = 0.02;
  cfg.exclude_rank_ambiguous = false;
  cfg.out = "report.json";
  cfg.format = "table";

  const std::string text = dump_config(cfg);
  std::istringstream in(text);
  const RunConfig back = parse_config(in);
  for (const auto& key : config_keys()) CHECK_MESSAGE(get_config_value(back, key.key) == get_config_value(cfg, key.key), key.key);
  CHECK(back.tol_residual == cfg.tol_residual);
  CHECK(dump_config(back) == text);
}

TEST_CASE("every key has a flag spelled like the key") {
  std::set<std::string> flags;
  for (const auto& key : config_keys()) {
    CHECK(key.flag.rfind("--", 0) == 0);
    CHECK(flags.insert(key.flag).second);
  }
  for (const char* f : {"--map", "--H", "--box", "--spacing", "--epsilon", "--scales", "--tol-residual",
                        "--tol-energy", "--seed", "--out", "--format"})
    CHECK(flags.count(f) == 1);
}

TEST_CASE("file values are applied on top of a base") {
  RunConfig base;
  base.points = 3;
  std::istringstream in("# comment\nmap.name = quadratic_bump   # trailing\n\ncheck.tol_residual=1e-4\n");
  const RunConfig cfg = parse_config(in, base);
  CHECK(cfg.map == "quadratic_bump");
  CHECK(cfg.tol_residual == 1e-4);
  CHECK(cfg.points == 3);
}

TEST_CASE("malformed configuration") {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return parse_config(in);
  };
  CHECK_THROWS_AS(parse("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse("map.unknown = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("check.points = many\n"), ConfigError);
  CHECK_THROWS_AS(validate(parse("check.tol_residual = -1\n")), ConfigError);
  CHECK_THROWS_AS(parse("hamiltonian.fd_only = maybe\n"), ConfigError);
  CHECK_THROWS_AS(load_config_file(tmp_path("does-not-exist.cfg")), std::exception);
  try {
    parse("map.name = linear\nbogus\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  RunConfig bad = small("frobnicate");
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = small("check");
  bad.format = "xml";
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("exit status reflects the verdict") {
  CHECK(invoke(small("check")).status == kExitPass);
  CHECK(invoke(small("residual")).status == kExitPass);
  CHECK(invoke(small("energy")).status == kExitPass);
  CHECK(invoke(small("variations")).status == kExitPass);

  const Outcome bump = invoke(small("check", "quadratic_bump"));
  CHECK(bump.status == kExitFail);
  const Json doc = Json::parse(bump.out);
  CHECK(doc["schema_version"] == kSchemaVersion);
  CHECK(doc["report"]["verdict"] == "fail");
  bool witness = false;
  for (const auto& part : doc["report"]["checks"])
    for (const auto& rec : part["records"])
      if (rec.contains("witness") && !rec["witness"].is_null()) witness = true;
  CHECK(witness);

  RunConfig wide_stencil = small("check", "aronsson43");
  wide_stencil.fd_only = true;
  wide_stencil.scale_levels = 5;
  // Stencil too wide for any point: nothing evaluable.
  CHECK(invoke(wide_stencil).status == kExitInconclusive);
}

TEST_CASE("usage and input errors exit with status 3") {
  RunConfig cfg = small("check");
  cfg.map = "nope";
  Outcome o = invoke(cfg);
  CHECK(o.status == kExitUsage);
  CHECK(o.err.find("error:") != std::string::npos);

  cfg = small("check");
  cfg.map_csv = tmp_path("missing.csv");
  CHECK(invoke(cfg).status == kExitUsage);

  cfg = small("check");
  cfg.out = tmp_path("no-such-dir/out.json");
  CHECK(invoke(cfg).status == kExitUsage);

  cfg = small("check");
  cfg.spacing = 0.3;
  CHECK(invoke(cfg).status == kExitUsage);
}

TEST_CASE("json reports are byte-identical for the same seed") {
  RunConfig cfg = small("check", "quadratic_bump");
  cfg.seed = 42;
  const Outcome a = invoke(cfg);
  const Outcome b = invoke(cfg);
  CHECK(a.out == b.out);
  cfg.seed = 43;
  CHECK(invoke(cfg).out != a.out);
}

TEST_CASE("reports written to files") {
  RunConfig cfg = small("check");
  cfg.out = tmp_path("cli-report.json");
  cfg.csv = tmp_path("cli-points.csv");
  const Outcome o = invoke(cfg);
  CHECK(o.status == kExitPass);
  CHECK(o.out.empty());
  const Json doc = Json::parse(slurp(cfg.out));
  CHECK(doc["meta"]["command"] == "check");
  CHECK(doc["meta"]["map"] == "linear");
  const std::string csv = slurp(cfg.csv);
  CHECK(csv.rfind("# schema_version=1\n", 0) == 0);

  cfg.out.clear();
  cfg.csv.clear();
  cfg.format = "csv";
  CHECK(invoke(cfg).out.rfind("# schema_version=1\n", 0) == 0);
  cfg.format = "table";
  CHECK(invoke(cfg).out.find("overall") != std::string::npos);
}

TEST_CASE("maps can be read from csv") {
  const std::string path = tmp_path("cli-map.csv");
  {
    std::ofstream f(path);
    write_csv(test_map("aronsson43", 2, 1), f);
  }
  RunConfig cfg = small("residual");
  cfg.map_csv = path;
  cfg.tol_residual = 0.1;  // sampled maps carry only finite-difference derivatives
  cfg.scale_levels = 2;
  const Outcome o = invoke(cfg);
  CHECK(o.status == kExitPass);
  const Json doc = Json::parse(o.out);
  CHECK(doc["meta"]["n"] == 2);
  CHECK(doc["meta"]["N"] == 1);
  CHECK(doc["report"]["evaluated"].get<int>() > 0);
}

TEST_CASE("box and spacing overrides") {
  RunConfig cfg = small("energy", "quadratic_bump");
  cfg.box = {-2.0, 2.0};
  cfg.spacing = 0.25;
  const Problem pb = build_problem(cfg);
  CHECK(pb.map.node_count() == 17 * 17);
  const Json doc = Json::parse(invoke(cfg).out);
  CHECK(doc["energy"]["energy"].get<double>() == doctest::Approx(32.0));
}

TEST_CASE("selftest command") {
  const Outcome o = invoke(small("selftest"));
  CHECK(o.status == kExitPass);
  const Json doc = Json::parse(o.out);
  CHECK(doc["selftest"]["verdict"] == "pass");
  CHECK(doc["selftest"]["items"].size() >= 9);
}

}  // TEST_SUITE
