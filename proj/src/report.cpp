#include "linf/report.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace linf {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string point_string(const Vector& x) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) s += ",";
    s += fmt("%.4g", x(i));
  }
  return s + ")";
}

}  // namespace

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::move(data);
  return j;
}

Json to_json(const AffineVariation& A) {
  Json j;
  j["base_point"] = to_json(A.base_point);
  j["offset"] = to_json(A.offset);
  j["matrix"] = to_json(A.matrix);
  j["class_tag"] = to_string(A.class_tag);
  Json p;
  p["point"] = to_json(A.provenance.point);
  p["direction"] = to_json(A.provenance.direction);
  if (A.provenance.atom) {
    p["atom"] = {{"N", A.provenance.atom->N()}, {"n", A.provenance.atom->n()}, {"data", A.provenance.atom->raw()}};
  } else {
    p["atom"] = nullptr;
  }
  p["null_coeffs"] = to_json(A.provenance.null_coeffs);
  p["normal_index"] = A.provenance.normal_index;
  j["provenance"] = std::move(p);
  return j;
}

Json to_json(const PointRecord& r) {
  Json j;
  j["node"] = r.node;
  j["x"] = to_json(r.x);
  j["status"] = r.status;
  if (!r.exclusion.empty()) j["exclusion"] = r.exclusion;
  j["atoms"] = r.atoms;
  j["escaped_fraction"] = r.escaped_fraction;
  j["residual"] = r.residual;
  j["tangential"] = r.tangential;
  j["normal"] = r.normal;
  j["energy_gap"] = r.energy_gap;
  j["identity_residual"] = r.identity_residual;
  j["variations_tested"] = r.variations_tested;
  j["rank_ambiguous"] = r.rank_ambiguous;
  j["trivially_satisfied"] = r.trivially_satisfied;
  j["violates"] = r.violates;
  if (!r.epsilons.empty()) {
    j["epsilons"] = r.epsilons;
    j["bound_trend"] = r.bound_trend;
    j["trend_nonincreasing"] = r.trend_nonincreasing;
  }
  if (r.witness) {
    const Witness& w = *r.witness;
    j["witness"] = {{"epsilon", w.epsilon}, {"t", w.t},          {"energy_before", w.energy_before},
                    {"energy_after", w.energy_after}, {"drop", w.drop}, {"variation", to_json(w.variation)}};
  }
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

Json to_json(const CheckReport& r) {
  Json j;
  j["direction"] = to_string(r.direction);
  j["verdict"] = to_string(r.verdict);
  if (!r.reason.empty()) j["reason"] = r.reason;
  j["residual_tol"] = r.residual_tol;
  j["energy_tol"] = r.energy_tol;
  j["sampled"] = r.sampled;
  j["evaluated"] = r.evaluated;
  j["excluded"] = r.excluded;
  j["excluded_rank_ambiguous"] = r.excluded_rank_ambiguous;
  j["excluded_empty_neighborhood"] = r.excluded_empty_neighborhood;
  j["witnesses"] = r.witnesses;
  j["violations"] = r.violations;
  j["max_residual"] = r.max_residual;
  Json recs = Json::array();
  for (const auto& p : r.records) recs.push_back(to_json(p));
  j["records"] = std::move(recs);
  return j;
}

Json to_json(const CombinedReport& r) {
  Json j;
  j["verdict"] = to_string(r.verdict);
  j["contradiction"] = r.contradiction;
  j["diagnostics"] = r.diagnostics;
  Json parts = Json::array();
  for (const auto& p : r.parts) parts.push_back(to_json(p));
  j["checks"] = std::move(parts);
  return j;
}

Json to_json(const RunMeta& m) {
  Json j;
  j["command"] = m.command;
  j["map"] = m.map;
  j["hamiltonian"] = m.hamiltonian;
  j["n"] = m.n;
  j["N"] = m.N;
  j["seed"] = m.seed;
  j["nodes"] = m.nodes;
  j["spacing"] = m.spacing;
  return j;
}

Json make_document(const RunMeta& meta, const std::string& key, Json payload) {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["meta"] = to_json(meta);
  doc[key] = std::move(payload);
  return doc;
}

void write_table(const CheckReport& r, std::ostream& os) {
  os << to_string(r.direction) << ": " << to_string(r.verdict);
  if (!r.reason.empty()) os << " (" << r.reason << ")";
  os << "\n  sampled " << r.sampled << ", evaluated " << r.evaluated << ", excluded " << r.excluded
     << " (rank-ambiguous " << r.excluded_rank_ambiguous << ", assm-screen " << r.excluded_empty_neighborhood
     << "), witnesses " << r.witnesses << ", violations " << r.violations << ", max residual "
     << fmt("%.3e", r.max_residual) << "\n";
  if (r.records.empty()) return;
  char line[256];
  std::snprintf(line, sizeof line, "  %-8s %-26s %-22s %6s %11s %11s\n", "node", "x", "status", "atoms",
                "residual", "gap");
  os << line;
  for (const auto& p : r.records) {
    std::snprintf(line, sizeof line, "  %-8zu %-26s %-22s %6zu %11.3e %11.3e\n", p.node, point_string(p.x).c_str(),
                  p.status.c_str(), p.atoms, p.residual, p.energy_gap);
    os << line;
  }
}

void write_table(const CombinedReport& r, std::ostream& os) {
  for (const auto& p : r.parts) {
    write_table(p, os);
    os << "\n";
  }
  for (const auto& d : r.diagnostics) os << "diagnostic: " << d << "\n";
  os << "overall: " << to_string(r.verdict) << "\n";
}

void write_points_csv(const std::vector<const CheckReport*>& reports, int n, std::ostream& os) {
  os << "# schema_version=" << kSchemaVersion << "\n";
  os << "direction,node";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  os << ",status,exclusion,atoms,residual,tangential,normal,energy_gap,identity_residual,witness_drop,witness_t,"
        "witness_eps\n";
  for (const CheckReport* rep : reports)
    for (const auto& p : rep->records) {
      os << to_string(rep->direction) << "," << p.node;
      for (Eigen::Index i = 0; i < p.x.size(); ++i) os << "," << fmt("%.17g", p.x(i));
      os << "," << p.status << "," << p.exclusion << "," << p.atoms << "," << fmt("%.17g", p.residual) << ","
         << fmt("%.17g", p.tangential) << "," << fmt("%.17g", p.normal) << "," << fmt("%.17g", p.energy_gap) << ","
         << fmt("%.17g", p.identity_residual);
      if (p.witness)
        os << "," << fmt("%.17g", p.witness->drop) << "," << fmt("%.17g", p.witness->t) << ","
           << fmt("%.17g", p.witness->epsilon);
      else
        os << ",,,";
      os << "\n";
    }
}

}  // namespace linf
