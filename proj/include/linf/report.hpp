#pragma once

// JSON, CSV and plain-table renderings of check results. Every machine-readable
// output carries schema_version.

#include "linf/checker.hpp"
#include "linf/energy.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>

namespace linf {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

/// Run-level metadata echoed at the top of every report.
struct RunMeta {
  std::string command;
  std::string map;
  std::string hamiltonian;
  int n = 0;
  int N = 0;
  std::uint64_t seed = 0;
  std::size_t nodes = 0;
  double spacing = 0.0;
};

Json to_json(const Vector& v);
Json to_json(const Matrix& m);  // {"rows", "cols", "data" row-major}
Json to_json(const AffineVariation& A);
Json to_json(const PointRecord& r);
Json to_json(const CheckReport& r);
Json to_json(const CombinedReport& r);
Json to_json(const RunMeta& m);

/// Document with schema_version, meta and a payload under `key`.
Json make_document(const RunMeta& meta, const std::string& key, Json payload);

void write_table(const CheckReport& r, std::ostream& os);
void write_table(const CombinedReport& r, std::ostream& os);

/// One row per point record; the first line is "# schema_version=<v>".
void write_points_csv(const std::vector<const CheckReport*>& reports, int n, std::ostream& os);

}  // namespace linf
