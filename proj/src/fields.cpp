#include "linf/fields.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace linf {

// ---------------------------------------------------------------------------
// BoxDomain

BoxDomain::BoxDomain(Vector lower, Vector upper, double spacing)
    : lower_(std::move(lower)), upper_(std::move(upper)), spacing_(spacing) {
  require(lower_.size() >= 1 && lower_.size() == upper_.size(), "BoxDomain: corner dimensions differ");
  require(lower_.allFinite() && upper_.allFinite(), "BoxDomain: non-finite corner");
  require(spacing > 0.0 && std::isfinite(spacing), "BoxDomain: spacing must be positive");
  node_count_ = 1;
  for (Eigen::Index a = 0; a < lower_.size(); ++a) {
    require(lower_(a) < upper_(a), "BoxDomain: lower must be below upper on every axis");
    const double steps = (upper_(a) - lower_(a)) / spacing;
    const double rounded = std::round(steps);
    require(std::abs(steps - rounded) <= 1e-6, "BoxDomain: spacing must divide every box width");
    const int count = static_cast<int>(rounded) + 1;
    require(count >= 3, "BoxDomain: at least 3 grid points per axis are required");
    counts_.push_back(count);
    node_count_ *= static_cast<std::size_t>(count);
  }
}

double BoxDomain::min_width() const { return (upper_ - lower_).minCoeff(); }

std::vector<int> BoxDomain::multi_index(NodeIndex node) const {
  if (node >= node_count_) throw std::out_of_range("BoxDomain: node index out of range");
  std::vector<int> idx(counts_.size());
  for (int a = dim() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(node % counts_[a]);
    node /= counts_[a];
  }
  return idx;
}

NodeIndex BoxDomain::flat_index(const std::vector<int>& idx) const {
  require(static_cast<int>(idx.size()) == dim(), "BoxDomain: multi-index dimension mismatch");
  NodeIndex flat = 0;
  for (int a = 0; a < dim(); ++a) {
    if (idx[a] < 0 || idx[a] >= counts_[a]) throw std::out_of_range("BoxDomain: multi-index out of range");
    flat = flat * counts_[a] + static_cast<NodeIndex>(idx[a]);
  }
  return flat;
}

Vector BoxDomain::point(NodeIndex node) const {
  const auto idx = multi_index(node);
  Vector x(dim());
  for (int a = 0; a < dim(); ++a) x(a) = lower_(a) + idx[a] * spacing_;
  return x;
}

std::optional<NodeIndex> BoxDomain::offset(NodeIndex node, int axis, int step) const {
  auto idx = multi_index(node);
  const int k = idx[axis] + step;
  if (k < 0 || k >= counts_[axis]) return std::nullopt;
  idx[axis] = k;
  return flat_index(idx);
}

std::optional<NodeIndex> BoxDomain::node_at(const Vector& x) const {
  if (x.size() != dim()) return std::nullopt;
  std::vector<int> idx(dim());
  for (int a = 0; a < dim(); ++a) {
    const double s = (x(a) - lower_(a)) / spacing_;
    const double r = std::round(s);
    if (std::abs(s - r) > 1e-6 || r < 0 || r >= counts_[a]) return std::nullopt;
    idx[a] = static_cast<int>(r);
  }
  return flat_index(idx);
}

int BoxDomain::steps_to_boundary(NodeIndex node) const {
  const auto idx = multi_index(node);
  int best = counts_[0];
  for (int a = 0; a < dim(); ++a) best = std::min({best, idx[a], counts_[a] - 1 - idx[a]});
  return best;
}

bool BoxDomain::contains(const Vector& x, double slack) const {
  if (x.size() != dim()) return false;
  for (int a = 0; a < dim(); ++a)
    if (x(a) < lower_(a) - slack || x(a) > upper_(a) + slack) return false;
  return true;
}

bool BoxDomain::operator==(const BoxDomain& o) const {
  return lower_ == o.lower_ && upper_ == o.upper_ && spacing_ == o.spacing_;
}

// ---------------------------------------------------------------------------
// SampledMap

SampledMap::SampledMap(BoxDomain domain, int N, std::vector<double> values, Analytic analytic, std::string name)
    : domain_(std::move(domain)), N_(N), values_(std::move(values)), analytic_(std::move(analytic)),
      name_(std::move(name)) {
  require(N >= 1, "SampledMap: N must be positive");
  require(values_.size() == domain_.node_count() * static_cast<std::size_t>(N),
          "SampledMap: value count does not match the grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw std::domain_error("SampledMap: non-finite sample value");
}

SampledMap SampledMap::from_function(BoxDomain domain, int N, Analytic analytic, std::string name) {
  require(static_cast<bool>(analytic.u), "SampledMap::from_function: u is required");
  std::vector<double> values(domain.node_count() * static_cast<std::size_t>(N));
  for (NodeIndex k = 0; k < domain.node_count(); ++k) {
    const Vector v = analytic.u(domain.point(k));
    require(v.size() == N, "SampledMap::from_function: u has wrong codomain dimension");
    for (int a = 0; a < N; ++a) values[k * N + a] = v(a);
  }
  return SampledMap(std::move(domain), N, std::move(values), std::move(analytic), std::move(name));
}

Vector SampledMap::value(NodeIndex node) const {
  if (node >= node_count()) throw std::out_of_range("SampledMap: node index out of range");
  return Eigen::Map<const Vector>(values_.data() + node * N_, N_);
}

Matrix SampledMap::gradient(NodeIndex node) const {
  if (analytic_.Du) return analytic_.Du(domain_.point(node));
  return fd_gradient(*this, node);
}

SampledMap SampledMap::without_analytic() const {
  return SampledMap(domain_, N_, values_, {}, name_ + "/sampled");
}

// ---------------------------------------------------------------------------
// Difference quotients

Matrix fd_gradient(const SampledMap& u, NodeIndex node) {
  const BoxDomain& d = u.domain();
  if (node >= d.node_count()) throw std::out_of_range("fd_gradient: node index out of range");
  const double h = d.spacing();
  Matrix g(u.N(), u.n());
  for (int i = 0; i < u.n(); ++i) {
    const auto fwd = d.offset(node, i, 1);
    const auto bwd = d.offset(node, i, -1);
    Vector col;
    if (fwd && bwd) {
      col = (u.value(*fwd) - u.value(*bwd)) / (2.0 * h);
    } else if (fwd) {
      col = (-3.0 * u.value(node) + 4.0 * u.value(*fwd) - u.value(*d.offset(node, i, 2))) / (2.0 * h);
    } else {
      col = (3.0 * u.value(node) - 4.0 * u.value(*bwd) + u.value(*d.offset(node, i, -2))) / (2.0 * h);
    }
    g.col(i) = col;
  }
  return g;
}

HessianTensor dq_hessian(const SampledMap& u, NodeIndex node, double h) {
  const BoxDomain& d = u.domain();
  if (node >= d.node_count()) throw std::out_of_range("dq_hessian: node index out of range");
  const double ratio = h / d.spacing();
  const double steps = std::round(ratio);
  require(steps != 0.0 && std::abs(ratio - steps) <= 1e-6, "dq_hessian: h must be a nonzero multiple of the spacing");
  const int k = static_cast<int>(steps);

  const int n = u.n();
  const int N = u.N();
  const Matrix g0 = u.gradient(node);
  HessianTensor X(N, n);
  for (int i = 0; i < n; ++i) {
    const auto shifted = d.offset(node, i, k);
    if (!shifted) throw std::out_of_range("dq_hessian: stencil out of range");
    const Matrix g1 = u.gradient(*shifted);
    const double hh = k * d.spacing();
    for (int b = 0; b < N; ++b)
      for (int j = 0; j < n; ++j) X(b, i, j) = (g1(b, j) - g0(b, j)) / hh;
  }
  return X.symmetrized();
}

std::vector<double> default_scale_ladder(double spacing, int levels) {
  require(levels >= 1, "default_scale_ladder: levels must be positive");
  std::vector<double> s;
  for (int k = levels - 1; k >= 0; --k) s.push_back(spacing * std::ldexp(1.0, k));
  return s;
}

namespace {

struct Dsu {
  std::vector<std::size_t> parent;
  explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

}  // namespace

DiffuseHessianApprox diffuse_hessian_support(const SampledMap& u, NodeIndex node, std::vector<double> scales,
                                             double cluster_radius, double blowup_cutoff) {
  require(!scales.empty(), "diffuse_hessian_support: empty scale list");
  for (double s : scales) require(s > 0.0 && std::isfinite(s), "diffuse_hessian_support: scales must be positive");
  std::sort(scales.begin(), scales.end(), std::greater<>());

  DiffuseHessianApprox out;
  out.node = node;
  out.point = u.domain().point(node);
  out.scales = scales;
  out.samples = scales.size();

  std::vector<HessianTensor> kept;
  std::size_t escaped = 0;
  for (double h : scales) {
    HessianTensor X = dq_hessian(u, node, h);
    if (!X.all_finite() || X.norm() > blowup_cutoff)
      ++escaped;
    else
      kept.push_back(std::move(X));
  }
  out.escaped_fraction = static_cast<double>(escaped) / static_cast<double>(scales.size());

  if (cluster_radius <= 0.0) {
    double m = 0.0;
    for (const auto& X : kept) m = std::max(m, X.norm());
    cluster_radius = 1e-3 * (1.0 + m);
  }
  out.cluster_radius = cluster_radius;
  if (kept.empty()) return out;

  Dsu dsu(kept.size());
  for (std::size_t a = 0; a < kept.size(); ++a)
    for (std::size_t b = a + 1; b < kept.size(); ++b)
      if ((kept[a] - kept[b]).norm() <= cluster_radius) dsu.unite(a, b);

  struct Cluster {
    HessianTensor sum;
    std::size_t count = 0;
    HessianTensor mean() const {
      HessianTensor m = sum;
      m *= 1.0 / static_cast<double>(count);
      return m;
    }
  };
  std::vector<Cluster> clusters;
  std::vector<std::size_t> slot(kept.size(), static_cast<std::size_t>(-1));
  for (std::size_t a = 0; a < kept.size(); ++a) {
    const std::size_t r = dsu.find(a);
    if (slot[r] == static_cast<std::size_t>(-1)) {
      slot[r] = clusters.size();
      clusters.push_back({HessianTensor(u.N(), u.n()), 0});
    }
    clusters[slot[r]].sum += kept[a];
    clusters[slot[r]].count += 1;
  }

  // Means of distinct components can still land within the radius; fold them.
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t a = 0; a < clusters.size() && !merged; ++a)
      for (std::size_t b = a + 1; b < clusters.size() && !merged; ++b)
        if ((clusters[a].mean() - clusters[b].mean()).norm() <= cluster_radius) {
          clusters[a].sum += clusters[b].sum;
          clusters[a].count += clusters[b].count;
          clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(b));
          merged = true;
        }
  }

  for (const auto& c : clusters) {
    out.support_atoms.push_back(c.mean().symmetrized());
    out.atom_weights.push_back(static_cast<double>(c.count) / static_cast<double>(scales.size()));
  }
  return out;
}

DiffuseHessianApprox diffuse_hessian_support(const SampledMap& u, const Vector& x, std::vector<double> scales,
                                             double cluster_radius, double blowup_cutoff) {
  const auto node = u.domain().node_at(x);
  if (!node) throw std::invalid_argument("diffuse_hessian_support: point is not a grid node");
  return diffuse_hessian_support(u, *node, std::move(scales), cluster_radius, blowup_cutoff);
}

std::vector<double> resolved_scales(const SampledMap& u, const HessianOptions& opts) {
  if (!opts.scales.empty()) return opts.scales;
  return default_scale_ladder(u.domain().spacing(), opts.scale_levels);
}

namespace {
bool use_analytic(const SampledMap& u, const HessianOptions& opts) {
  if (opts.source == HessianSource::analytic) {
    require(u.has_analytic_hessian(), "hessian_atoms: analytic hessian requested but not available");
    return true;
  }
  return opts.source == HessianSource::automatic && u.has_analytic_hessian();
}
}  // namespace

int stencil_steps(const SampledMap& u, const HessianOptions& opts) {
  if (use_analytic(u, opts)) return 0;
  double m = 0.0;
  for (double s : resolved_scales(u, opts)) m = std::max(m, s);
  return static_cast<int>(std::ceil(m / u.domain().spacing() - 1e-9));
}

AtomSet hessian_atoms(const SampledMap& u, NodeIndex node, const HessianOptions& opts) {
  AtomSet out;
  if (use_analytic(u, opts)) {
    out.atoms.push_back(u.analytic().D2u(u.domain().point(node)).symmetrized());
    out.analytic = true;
    return out;
  }
  const auto d = diffuse_hessian_support(u, node, resolved_scales(u, opts), opts.cluster_radius, opts.blowup_cutoff);
  out.atoms = d.support_atoms;
  out.escaped_fraction = d.escaped_fraction;
  out.cluster_radius = d.cluster_radius;
  return out;
}

// ---------------------------------------------------------------------------
// Test map registry

std::vector<std::string> test_map_names() { return {"linear", "aronsson43", "quadratic_bump"}; }

namespace {

Matrix default_linear_gradient(int n, int N) {
  Matrix B(N, n);
  for (int a = 0; a < N; ++a)
    for (int i = 0; i < n; ++i) B(a, i) = 1.0 + 0.5 * a - 0.75 * i + 0.25 * a * i;
  return B;
}

BoxDomain unit_box(int n, double lo, double hi, double spacing) {
  return BoxDomain(Vector::Constant(n, lo), Vector::Constant(n, hi), spacing);
}

}  // namespace

SampledMap test_map(const std::string& name, int n, int N, const TestMapParams& params) {
  require(n >= 1 && N >= 1, "test_map: dimensions must be positive");
  SampledMap::Analytic an;

  if (name == "linear") {
    const Matrix B = params.B.value_or(default_linear_gradient(n, N));
    Vector c = params.c.value_or(Vector::Zero(N));
    require(B.rows() == N && B.cols() == n, "test_map: linear B has wrong shape");
    require(c.size() == N, "test_map: linear c has wrong length");
    an.u = [B, c](const Vector& x) -> Vector { return B * x + c; };
    an.Du = [B](const Vector&) -> Matrix { return B; };
    an.D2u = [n, N](const Vector&) { return HessianTensor(N, n); };
    return SampledMap::from_function(params.box.value_or(unit_box(n, 0.0, 1.0, 1.0 / 32.0)), N, an, name);
  }
  if (name == "aronsson43") {
    require(n == 2 && N == 1, "test_map: aronsson43 requires n = 2, N = 1");
    BoxDomain box = params.box.value_or(unit_box(2, 0.25, 1.25, 1.0 / 32.0));
    require(box.lower().minCoeff() > 0.0, "test_map: aronsson43 box must stay off the axes");
    an.u = [](const Vector& x) -> Vector {
      return Vector::Constant(1, std::cbrt(x(0)) * x(0) - std::cbrt(x(1)) * x(1));
    };
    an.Du = [](const Vector& x) -> Matrix {
      Matrix P(1, 2);
      P(0, 0) = 4.0 / 3.0 * std::cbrt(x(0));
      P(0, 1) = -4.0 / 3.0 * std::cbrt(x(1));
      return P;
    };
    an.D2u = [](const Vector& x) {
      HessianTensor X(1, 2);
      X(0, 0, 0) = 4.0 / 9.0 / (std::cbrt(x(0)) * std::cbrt(x(0)));
      X(0, 1, 1) = -4.0 / 9.0 / (std::cbrt(x(1)) * std::cbrt(x(1)));
      return X;
    };
    return SampledMap::from_function(std::move(box), 1, an, name);
  }
  if (name == "quadratic_bump") {
    an.u = [N](const Vector& x) -> Vector { return Vector::Constant(N, x.squaredNorm()); };
    an.Du = [N](const Vector& x) -> Matrix { return 2.0 * Vector::Ones(N) * x.transpose(); };
    an.D2u = [n, N](const Vector&) {
      HessianTensor X(N, n);
      for (int b = 0; b < N; ++b)
        for (int i = 0; i < n; ++i) X(b, i, i) = 2.0;
      return X;
    };
    return SampledMap::from_function(params.box.value_or(unit_box(n, -1.0, 1.0, 1.0 / 16.0)), N, an, name);
  }
  throw std::invalid_argument("test_map: unknown map '" + name + "'");
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("read_csv: bad number '" + s + "'");
  return v;
}

}  // namespace

void write_csv(const SampledMap& u, std::ostream& os) {
  const int n = u.n();
  const int N = u.N();
  for (int i = 0; i < n; ++i) os << (i ? "," : "") << 'x' << (i + 1);
  for (int a = 0; a < N; ++a) os << ",u" << (a + 1);
  os << '\n';
  for (NodeIndex k = 0; k < u.node_count(); ++k) {
    const Vector x = u.domain().point(k);
    const Vector v = u.value(k);
    for (int i = 0; i < n; ++i) os << (i ? "," : "") << fmt17(x(i));
    for (int a = 0; a < N; ++a) os << ',' << fmt17(v(a));
    os << '\n';
  }
}

SampledMap read_csv(std::istream& is, const std::string& name) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("read_csv: missing header");
  const auto header = split(trim(line), ',');
  int n = 0;
  int N = 0;
  for (const auto& raw : header) {
    const std::string h = trim(raw);
    const std::string expect_x = "x" + std::to_string(n + 1);
    const std::string expect_u = "u" + std::to_string(N + 1);
    if (N == 0 && h == expect_x)
      ++n;
    else if (h == expect_u)
      ++N;
    else
      throw std::invalid_argument("read_csv: unexpected header column '" + h + "'");
  }
  require(n >= 1 && N >= 1, "read_csv: header needs x1..xn and u1..uN columns");

  std::vector<std::vector<double>> coords;
  std::vector<double> values;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    require(static_cast<int>(cells.size()) == n + N, "read_csv: row has wrong number of columns");
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = parse_double(trim(cells[i]));
    for (int a = 0; a < N; ++a) values.push_back(parse_double(trim(cells[n + a])));
    coords.push_back(std::move(x));
  }
  require(!coords.empty(), "read_csv: no data rows");

  Vector lo(n), hi(n);
  std::vector<int> counts(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> axis;
    for (const auto& c : coords) axis.push_back(c[i]);
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
    lo(i) = axis.front();
    hi(i) = axis.back();
    counts[i] = static_cast<int>(axis.size());
    require(counts[i] >= 3, "read_csv: at least 3 grid points per axis are required");
  }
  const double spacing = (hi(0) - lo(0)) / (counts[0] - 1);
  BoxDomain box(lo, hi, spacing);
  require(box.counts() == counts, "read_csv: grid is not uniform with a common spacing");
  require(coords.size() == box.node_count(), "read_csv: row count does not match the grid");
  for (NodeIndex k = 0; k < box.node_count(); ++k) {
    const Vector p = box.point(k);
    for (int i = 0; i < n; ++i)
      require(std::abs(p(i) - coords[k][i]) <= 1e-9 * (1.0 + std::abs(p(i))),
              "read_csv: rows are not in row-major grid order");
  }
  return SampledMap(std::move(box), N, std::move(values), {}, name);
}

}  // namespace linf
