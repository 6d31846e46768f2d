#include "linf/run.hpp"

#include "linf/checker.hpp"
#include "linf/energy.hpp"
#include "linf/report.hpp"
#include "linf/selftest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>

namespace linf {

namespace {

SampledMap build_map(const RunConfig& cfg) {
  if (!cfg.map_csv.empty()) {
    std::ifstream in(cfg.map_csv);
    if (!in) throw IoError("cannot read map file '" + cfg.map_csv + "'");
    return read_csv(in, cfg.map_csv);
  }
  TestMapParams params;
  if (!cfg.map_B.empty()) {
    Matrix B(cfg.N, cfg.n);
    for (int a = 0; a < cfg.N; ++a)
      for (int i = 0; i < cfg.n; ++i) B(a, i) = cfg.map_B[static_cast<std::size_t>(a * cfg.n + i)];
    params.B = B;
  }
  if (!cfg.map_c.empty()) params.c = Eigen::Map<const Vector>(cfg.map_c.data(), cfg.N);
  SampledMap u = test_map(cfg.map, cfg.n, cfg.N, params);
  if (cfg.box.empty() && cfg.spacing == 0.0) return u;

  Vector lower = u.domain().lower();
  Vector upper = u.domain().upper();
  if (!cfg.box.empty()) {
    for (int i = 0; i < cfg.n; ++i) {
      const std::size_t k = cfg.box.size() == 2 ? 0 : static_cast<std::size_t>(2 * i);
      lower(i) = cfg.box[k];
      upper(i) = cfg.box[k + 1];
    }
  }
  const double spacing = cfg.spacing > 0.0 ? cfg.spacing : u.domain().spacing();
  params.box = BoxDomain(lower, upper, spacing);
  return test_map(cfg.map, cfg.n, cfg.N, params);
}

std::optional<Matrix> build_shift(const RunConfig& cfg, int n, int N) {
  if (cfg.shift.empty()) return std::nullopt;
  if (cfg.shift.size() == 1) return Matrix::Constant(N, n, cfg.shift[0]);
  if (cfg.shift.size() != static_cast<std::size_t>(N * n)) throw ConfigError("hamiltonian.shift needs 1 or N * n values");
  Matrix P0(N, n);
  for (int a = 0; a < N; ++a)
    for (int i = 0; i < n; ++i) P0(a, i) = cfg.shift[static_cast<std::size_t>(a * n + i)];
  return P0;
}

int status_of(Verdict v) {
  switch (v) {
    case Verdict::pass: return kExitPass;
    case Verdict::fail: return kExitFail;
    case Verdict::inconclusive: return kExitInconclusive;
  }
  return kExitFail;
}

struct Renderers {
  std::function<void(std::ostream&)> table;
  std::function<void(std::ostream&)> csv;
};

void write_to(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(fallback);
    return;
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  body(f);
  if (!f) throw IoError("failed writing '" + path + "'");
}

void emit(const RunConfig& cfg, std::ostream& out, const Json& doc, const Renderers& r) {
  write_to(cfg.out, out, [&](std::ostream& os) {
    if (cfg.format == "json") {
      os << doc.dump(2) << "\n";
    } else if (cfg.format == "table") {
      r.table(os);
    } else {
      r.csv(os);
    }
  });
  if (!cfg.csv.empty()) write_to(cfg.csv, out, r.csv);
}

RunMeta meta_for(const RunConfig& cfg, const Problem* pb) {
  RunMeta m;
  m.command = cfg.command;
  m.seed = cfg.seed;
  if (pb) {
    m.map = pb->map.name();
    m.hamiltonian = pb->model.name();
    m.n = pb->map.n();
    m.N = pb->map.N();
    m.nodes = pb->map.node_count();
    m.spacing = pb->map.domain().spacing();
  }
  return m;
}

std::string coords(const Vector& x) {
  std::string s;
  char buf[32];
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", x(i));
    s += buf;
  }
  return s;
}

int run_selftest_command(const RunConfig& cfg, std::ostream& out) {
  const auto items = run_selftest(cfg.seed);
  bool all = true;
  Json list = Json::array();
  for (const auto& it : items) {
    all = all && it.pass;
    list.push_back({{"name", it.name}, {"pass", it.pass}, {"detail", it.detail}});
  }
  Json payload;
  payload["verdict"] = all ? "pass" : "fail";
  payload["items"] = std::move(list);
  Renderers r;
  r.table = [&](std::ostream& os) {
    for (const auto& it : items) os << (it.pass ? "PASS  " : "FAIL  ") << it.name << "  " << it.detail << "\n";
    os << "overall: " << (all ? "pass" : "fail") << "\n";
  };
  r.csv = [&](std::ostream& os) {
    os << "# schema_version=" << kSchemaVersion << "\nname,pass,detail\n";
    for (const auto& it : items) os << it.name << "," << (it.pass ? 1 : 0) << ",\"" << it.detail << "\"\n";
  };
  emit(cfg, out, make_document(meta_for(cfg, nullptr), "selftest", std::move(payload)), r);
  return all ? kExitPass : kExitFail;
}

int run_energy(const RunConfig& cfg, const Problem& pb, std::ostream& out) {
  const EnergyReport E = sup_energy(pb.model, pb.map, full_mask(pb.map));
  constexpr std::size_t kListed = 64;
  Json argmax = Json::array();
  for (std::size_t k = 0; k < std::min(kListed, E.argmax_nodes.size()); ++k) {
    const NodeIndex node = E.argmax_nodes[k];
    argmax.push_back({{"node", node}, {"x", to_json(pb.map.domain().point(node))}});
  }
  Json payload;
  payload["energy"] = E.energy;
  payload["tolerance_used"] = E.tolerance_used;
  payload["argmax_count"] = E.argmax_nodes.size();
  payload["argmax"] = std::move(argmax);
  Renderers r;
  r.table = [&](std::ostream& os) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "energy %.12g (argmax band %.3e, %zu nodes)\n", E.energy, E.tolerance_used,
                  E.argmax_nodes.size());
    os << buf;
  };
  r.csv = [&](std::ostream& os) {
    os << "# schema_version=" << kSchemaVersion << "\nnode";
    for (int i = 1; i <= pb.map.n(); ++i) os << ",x" << i;
    os << "\n";
    for (NodeIndex node : E.argmax_nodes) os << node << "," << coords(pb.map.domain().point(node)) << "\n";
  };
  emit(cfg, out, make_document(meta_for(cfg, &pb), "energy", std::move(payload)), r);
  return kExitPass;
}

int run_variations(const RunConfig& cfg, const Problem& pb, std::ostream& out) {
  const CheckConfig cc = cfg.check_config();
  const SampledMap& u = pb.map;
  const EnergyContext ctx(pb.model, u);
  const NodeMask mask = full_mask(u);
  const EnergyReport E = sup_energy(ctx, mask);

  const int stencil = stencil_steps(u, cc.hessian);
  const int margin = stencil == 0 ? 0 : stencil + 1;
  std::vector<NodeIndex> eligible;
  for (NodeIndex k : E.argmax_nodes)
    if (u.domain().steps_to_boundary(k) >= margin) eligible.push_back(k);
  std::vector<NodeIndex> anchors;
  if (eligible.size() <= cc.points) {
    anchors = eligible;
  } else {
    auto rng = point_rng(cc.seed, 0x7a11);
    std::sample(eligible.begin(), eligible.end(), std::back_inserter(anchors), cc.points, rng);
  }

  constexpr double kMembershipTol = 1e-9;
  struct Row {
    NodeIndex node;
    AffineVariation A;
    MembershipResult m;
  };
  std::vector<Row> rows;
  for (NodeIndex node : anchors) {
    auto rng = point_rng(cc.seed, node);
    std::vector<AffineVariation> vars;
    vars.push_back(AffineVariation::constant(u.domain().point(node), Vector::Ones(u.N())));
    for (const auto& X : hessian_atoms(u, node, cc.hessian).atoms) {
      auto v = class_variations(pb.model, u, node, X, cc, rng);
      std::move(v.begin(), v.end(), std::back_inserter(vars));
    }
    for (auto& A : vars) {
      MembershipResult m = variation_membership(ctx, A, mask, kMembershipTol, cc.hessian);
      rows.push_back({node, std::move(A), std::move(m)});
    }
  }

  bool all = true;
  Json list = Json::array();
  for (const auto& row : rows) {
    all = all && row.m.member;
    list.push_back({{"anchor", row.node},
                    {"variation", to_json(row.A)},
                    {"member", row.m.member},
                    {"diagnostics", row.m.diagnostics},
                    {"offset_residual", row.m.offset_residual},
                    {"matrix_residual", row.m.matrix_residual},
                    {"atom_distance", row.m.atom_distance}});
  }
  Verdict verdict = rows.empty() ? Verdict::inconclusive : all ? Verdict::pass : Verdict::fail;
  Json payload;
  payload["verdict"] = to_string(verdict);
  payload["energy"] = E.energy;
  payload["membership_relative_to"] = "computed reduced-support atoms";
  payload["variations"] = std::move(list);
  Renderers r;
  r.table = [&](std::ostream& os) {
    char buf[160];
    for (const auto& row : rows) {
      std::snprintf(buf, sizeof buf, "node %-8zu %-13s |a| %.3e |M| %.3e member %s\n", row.node,
                    to_string(row.A.class_tag), row.A.offset.norm(), row.A.matrix.norm(), row.m.member ? "yes" : "no");
      os << buf;
    }
    os << "overall: " << to_string(verdict) << "\n";
  };
  r.csv = [&](std::ostream& os) {
    os << "# schema_version=" << kSchemaVersion << "\nanchor,class,offset_norm,matrix_norm,member\n";
    char buf[160];
    for (const auto& row : rows) {
      std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%d\n", row.node, to_string(row.A.class_tag),
                    row.A.offset.norm(), row.A.matrix.norm(), row.m.member ? 1 : 0);
      os << buf;
    }
  };
  emit(cfg, out, make_document(meta_for(cfg, &pb), "variations", std::move(payload)), r);
  return status_of(verdict);
}

int run_residual(const RunConfig& cfg, const Problem& pb, std::ostream& out) {
  const CheckReport rep = dsolution_residual(pb.model, pb.map, cfg.check_config());
  Renderers r;
  r.table = [&](std::ostream& os) { write_table(rep, os); };
  r.csv = [&](std::ostream& os) { write_points_csv({&rep}, pb.map.n(), os); };
  emit(cfg, out, make_document(meta_for(cfg, &pb), "report", to_json(rep)), r);
  return status_of(rep.verdict);
}

int run_check(const RunConfig& cfg, const Problem& pb, std::ostream& out) {
  const CombinedReport rep = run_all_checks(pb.model, pb.map, cfg.check_config());
  std::vector<const CheckReport*> parts;
  for (const auto& p : rep.parts) parts.push_back(&p);
  Renderers r;
  r.table = [&](std::ostream& os) { write_table(rep, os); };
  r.csv = [&](std::ostream& os) { write_points_csv(parts, pb.map.n(), os); };
  emit(cfg, out, make_document(meta_for(cfg, &pb), "report", to_json(rep)), r);
  return status_of(rep.verdict);
}

}  // namespace

Problem build_problem(const RunConfig& cfg) {
  SampledMap u = build_map(cfg);
  HamiltonianModel model = builtin_hamiltonian(cfg.hamiltonian, u.n(), u.N(), build_shift(cfg, u.n(), u.N()));
  if (cfg.fd_only) return Problem{u.without_analytic(), model.fd_only()};
  return Problem{std::move(u), std::move(model)};
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    validate(cfg);
    if (cfg.command == "selftest") return run_selftest_command(cfg, out);
    const Problem pb = build_problem(cfg);
    if (cfg.command == "energy") return run_energy(cfg, pb, out);
    if (cfg.command == "variations") return run_variations(cfg, pb, out);
    if (cfg.command == "residual") return run_residual(cfg, pb, out);
    return run_check(cfg, pb, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFail;
  }
}

}  // namespace linf
