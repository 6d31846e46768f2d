#include "linf/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace linf {

namespace {

// Packed argument z = [x; eta; vec(P)] with vec(P)[alpha * n + i] = P(alpha, i).
struct Packing {
  int n;
  int N;
  int x_off() const { return 0; }
  int eta_off() const { return n; }
  int p_off() const { return n + N; }
  int size() const { return n + N + N * n; }

  Vector pack(const Vector& x, const Vector& eta, const Matrix& P) const {
    Vector z(size());
    z.segment(x_off(), n) = x;
    z.segment(eta_off(), N) = eta;
    for (int a = 0; a < N; ++a)
      for (int i = 0; i < n; ++i) z(p_off() + pair_index(a, i, n)) = P(a, i);
    return z;
  }
  Vector x(const Vector& z) const { return z.segment(x_off(), n); }
  Vector eta(const Vector& z) const { return z.segment(eta_off(), N); }
  Matrix P(const Vector& z) const {
    Matrix m(N, n);
    for (int a = 0; a < N; ++a)
      for (int i = 0; i < n; ++i) m(a, i) = z(p_off() + pair_index(a, i, n));
    return m;
  }
};

Vector flatten_pairs(const Matrix& m) {
  const int N = static_cast<int>(m.rows());
  const int n = static_cast<int>(m.cols());
  Vector v(N * n);
  for (int a = 0; a < N; ++a)
    for (int i = 0; i < n; ++i) v(pair_index(a, i, n)) = m(a, i);
  return v;
}

double step_for(double base, double arg) { return base * std::max(1.0, std::abs(arg)); }

void check_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw std::domain_error(std::string("eval_jet: non-finite ") + what + " (H not evaluable at jet point)");
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite())
    throw std::domain_error(std::string("eval_jet: non-finite ") + what + " (H not evaluable at jet point)");
}

class JetBuilder {
 public:
  JetBuilder(const HamiltonianModel& model, const Vector& x, const Vector& eta, const Matrix& P)
      : m_(model), pk_{model.n(), model.N()}, z0_(pk_.pack(x, eta, P)), x_(x), eta_(eta), P_(P) {}

  double value_at(const Vector& z) const { return m_.closures().value(pk_.x(z), pk_.eta(z), pk_.P(z)); }

  Vector hp_at(const Vector& z) const {
    return flatten_pairs(m_.closures().h_P(pk_.x(z), pk_.eta(z), pk_.P(z)));
  }

  // Central first differences of the value over [off, off + len).
  Vector first(int off, int len) const {
    Vector g(len);
    for (int k = 0; k < len; ++k) {
      const double s = step_for(m_.fd_step(), z0_(off + k));
      Vector zp = z0_, zm = z0_;
      zp(off + k) += s;
      zm(off + k) -= s;
      g(k) = (value_at(zp) - value_at(zm)) / (zp(off + k) - zm(off + k));
    }
    return g;
  }

  // Mixed block d^2 H / dP d(group) as an Nn x len matrix.
  Matrix mixed_with_p(int off, int len) const {
    const int np = pk_.N * pk_.n;
    Matrix out(np, len);
    if (m_.closures().h_P) {
      // Central differences of the analytic gradient.
      for (int k = 0; k < len; ++k) {
        const double s = step_for(m_.fd_step(), z0_(off + k));
        Vector zp = z0_, zm = z0_;
        zp(off + k) += s;
        zm(off + k) -= s;
        out.col(k) = (hp_at(zp) - hp_at(zm)) / (zp(off + k) - zm(off + k));
      }
      return out;
    }
    // Nested central differences of the value. The step is widened to the
    // second-derivative optimum when fd_step is smaller.
    const double base = std::max(m_.fd_step(), std::pow(std::numeric_limits<double>::epsilon(), 0.25));
    const int poff = pk_.p_off();
    for (int a = 0; a < np; ++a) {
      for (int k = 0; k < len; ++k) {
        const int ia = poff + a;
        const int ib = off + k;
        const double sa = step_for(base, z0_(ia));
        const double sb = step_for(base, z0_(ib));
        auto eval = [&](double da, double db) {
          Vector z = z0_;
          z(ia) += da;
          z(ib) += db;
          return value_at(z);
        };
        out(a, k) = (eval(sa, sb) - eval(sa, -sb) - eval(-sa, sb) + eval(-sa, -sb)) / (4.0 * sa * sb);
      }
    }
    return out;
  }

  FirstOrderJet build_first_order() const {
    const auto& c = m_.closures();
    const int n = pk_.n;
    const int N = pk_.N;
    FirstOrderJet j;
    j.h = c.value(x_, eta_, P_);
    check_finite(j.h, "value");
    j.h_eta = c.h_eta ? c.h_eta(x_, eta_, P_) : first(pk_.eta_off(), N);
    if (c.h_P) {
      j.h_P = c.h_P(x_, eta_, P_);
    } else {
      const Vector g = first(pk_.p_off(), N * n);
      j.h_P.resize(N, n);
      for (int a = 0; a < N; ++a)
        for (int i = 0; i < n; ++i) j.h_P(a, i) = g(pair_index(a, i, n));
    }
    require(j.h_eta.size() == N, "eval_jet: h_eta has wrong length");
    require(j.h_P.rows() == N && j.h_P.cols() == n, "eval_jet: h_P has wrong shape");
    check_finite(j.h_eta, "h_eta");
    check_finite(j.h_P, "h_P");
    return j;
  }

  HamiltonianJet build() const {
    const auto& c = m_.closures();
    const int n = pk_.n;
    const int N = pk_.N;
    HamiltonianJet j;
    j.h = c.value(x_, eta_, P_);
    check_finite(j.h, "value");

    j.h_x = c.h_x ? c.h_x(x_, eta_, P_) : first(pk_.x_off(), n);
    j.h_eta = c.h_eta ? c.h_eta(x_, eta_, P_) : first(pk_.eta_off(), N);
    if (c.h_P) {
      j.h_P = c.h_P(x_, eta_, P_);
    } else {
      const Vector g = first(pk_.p_off(), N * n);
      j.h_P.resize(N, n);
      for (int a = 0; a < N; ++a)
        for (int i = 0; i < n; ++i) j.h_P(a, i) = g(pair_index(a, i, n));
    }
    j.h_PP = c.h_PP ? c.h_PP(x_, eta_, P_) : mixed_with_p(pk_.p_off(), N * n);
    j.h_Peta = c.h_Peta ? c.h_Peta(x_, eta_, P_) : mixed_with_p(pk_.eta_off(), N);
    j.h_Px = c.h_Px ? c.h_Px(x_, eta_, P_) : mixed_with_p(pk_.x_off(), n);

    require(j.h_x.size() == n, "eval_jet: h_x has wrong length");
    require(j.h_eta.size() == N, "eval_jet: h_eta has wrong length");
    require(j.h_P.rows() == N && j.h_P.cols() == n, "eval_jet: h_P has wrong shape");
    require(j.h_PP.rows() == N * n && j.h_PP.cols() == N * n, "eval_jet: h_PP has wrong shape");
    require(j.h_Peta.rows() == N * n && j.h_Peta.cols() == N, "eval_jet: h_Peta has wrong shape");
    require(j.h_Px.rows() == N * n && j.h_Px.cols() == n, "eval_jet: h_Px has wrong shape");

    const Matrix hpp = j.h_PP;
    j.h_PP = 0.5 * (hpp + hpp.transpose());

    check_finite(j.h_x, "h_x");
    check_finite(j.h_eta, "h_eta");
    check_finite(j.h_P, "h_P");
    check_finite(j.h_PP, "h_PP");
    check_finite(j.h_Peta, "h_Peta");
    check_finite(j.h_Px, "h_Px");
    return j;
  }

 private:
  const HamiltonianModel& m_;
  Packing pk_;
  Vector z0_;
  const Vector& x_;
  const Vector& eta_;
  const Matrix& P_;
};

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

HamiltonianModel::HamiltonianModel(int n, int N, Closures closures, double fd_step, bool convex,
                                   std::string name)
    : n_(n), N_(N), closures_(std::move(closures)), fd_step_(fd_step), convex_(convex), name_(std::move(name)) {
  require(n >= 1 && N >= 1, "HamiltonianModel: dimensions must be positive");
  require(static_cast<bool>(closures_.value), "HamiltonianModel: value closure is required");
  require(fd_step > 0.0 && std::isfinite(fd_step), "HamiltonianModel: fd_step must be positive");
}

bool HamiltonianModel::has_any_analytic_block() const {
  const auto& c = closures_;
  return c.h_x || c.h_eta || c.h_P || c.h_PP || c.h_Peta || c.h_Px;
}

double HamiltonianModel::value(const Vector& x, const Vector& eta, const Matrix& P) const {
  return closures_.value(x, eta, P);
}

HamiltonianModel HamiltonianModel::fd_only() const {
  Closures c;
  c.value = closures_.value;
  return HamiltonianModel(n_, N_, std::move(c), fd_step_, convex_, name_ + "/fd");
}

HamiltonianModel HamiltonianModel::with_fd_step(double step) const {
  return HamiltonianModel(n_, N_, closures_, step, convex_, name_);
}

HamiltonianJet eval_jet(const HamiltonianModel& model, const Vector& x, const Vector& eta,
                        const Matrix& P) {
  require(x.size() == model.n(), "eval_jet: x has wrong dimension");
  require(eta.size() == model.N(), "eval_jet: eta has wrong dimension");
  require(P.rows() == model.N() && P.cols() == model.n(), "eval_jet: P has wrong shape");
  return JetBuilder(model, x, eta, P).build();
}

FirstOrderJet eval_first_order(const HamiltonianModel& model, const Vector& x, const Vector& eta,
                               const Matrix& P) {
  require(x.size() == model.n(), "eval_jet: x has wrong dimension");
  require(eta.size() == model.N(), "eval_jet: eta has wrong dimension");
  require(P.rows() == model.N() && P.cols() == model.n(), "eval_jet: P has wrong shape");
  return JetBuilder(model, x, eta, P).build_first_order();
}

JetConsistencyReport check_jet_consistency(const HamiltonianModel& model,
                                           const std::vector<JetSample>& samples, double tol) {
  require(model.has_any_analytic_block(), "check_jet_consistency: model has no analytic block");
  const auto& c = model.closures();
  const HamiltonianModel fd = model.fd_only();

  JetConsistencyReport rep;
  rep.tol = tol;
  rep.samples = samples.size();
  if (c.h_x) rep.max_deviation["h_x"] = 0.0;
  if (c.h_eta) rep.max_deviation["h_eta"] = 0.0;
  if (c.h_P) rep.max_deviation["h_P"] = 0.0;
  if (c.h_PP) rep.max_deviation["h_PP"] = 0.0;
  if (c.h_Peta) rep.max_deviation["h_Peta"] = 0.0;
  if (c.h_Px) rep.max_deviation["h_Px"] = 0.0;

  for (const auto& s : samples) {
    const HamiltonianJet a = eval_jet(model, s.x, s.eta, s.P);
    const HamiltonianJet f = eval_jet(fd, s.x, s.eta, s.P);
    auto upd = [&](const char* key, const Matrix& am, const Matrix& fm) {
      auto it = rep.max_deviation.find(key);
      if (it != rep.max_deviation.end()) it->second = std::max(it->second, max_abs_diff(am, fm));
    };
    upd("h_x", a.h_x, f.h_x);
    upd("h_eta", a.h_eta, f.h_eta);
    upd("h_P", a.h_P, f.h_P);
    upd("h_PP", a.h_PP, f.h_PP);
    upd("h_Peta", a.h_Peta, f.h_Peta);
    upd("h_Px", a.h_Px, f.h_Px);
  }
  for (const auto& [k, v] : rep.max_deviation)
    if (!(v < tol)) rep.pass = false;
  return rep;
}

AssumptionReport check_assumption_H(const HamiltonianModel& model,
                                    const std::vector<JetSample>& samples, double tol) {
  AssumptionReport rep;
  rep.tol = tol;
  rep.samples = samples.size();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const HamiltonianJet j = eval_jet(model, s.x, s.eta, s.P);
    const double hp = j.h_P.norm();
    if (hp >= tol) continue;
    ++rep.tested;
    const double scale = 1.0 + s.x.norm() + s.eta.norm() + s.P.norm();
    if (!(std::abs(j.h) < tol * scale)) rep.violations.push_back({k, j.h, hp});
  }
  rep.pass = rep.violations.empty();
  return rep;
}

std::vector<std::string> builtin_hamiltonian_names() {
  return {"sq_norm", "sq_norm_plus_potential", "shifted_sq_norm"};
}

HamiltonianModel builtin_hamiltonian(const std::string& name, int n, int N, std::optional<Matrix> shift) {
  require(n >= 1 && N >= 1, "builtin_hamiltonian: dimensions must be positive");
  const int np = N * n;

  HamiltonianModel::Closures c;
  c.h_x = [n](const Vector&, const Vector&, const Matrix&) -> Vector { return Vector::Zero(n); };
  c.h_PP = [np](const Vector&, const Vector&, const Matrix&) -> Matrix {
    return 2.0 * Matrix::Identity(np, np);
  };
  c.h_Peta = [np, N](const Vector&, const Vector&, const Matrix&) -> Matrix { return Matrix::Zero(np, N); };
  c.h_Px = [np, n](const Vector&, const Vector&, const Matrix&) -> Matrix { return Matrix::Zero(np, n); };

  if (name == "sq_norm") {
    c.value = [](const Vector&, const Vector&, const Matrix& P) { return P.squaredNorm(); };
    c.h_eta = [N](const Vector&, const Vector&, const Matrix&) -> Vector { return Vector::Zero(N); };
    c.h_P = [](const Vector&, const Vector&, const Matrix& P) -> Matrix { return 2.0 * P; };
  } else if (name == "sq_norm_plus_potential") {
    c.value = [](const Vector&, const Vector& eta, const Matrix& P) {
      return P.squaredNorm() + eta.squaredNorm();
    };
    c.h_eta = [](const Vector&, const Vector& eta, const Matrix&) -> Vector { return 2.0 * eta; };
    c.h_P = [](const Vector&, const Vector&, const Matrix& P) -> Matrix { return 2.0 * P; };
  } else if (name == "shifted_sq_norm") {
    Matrix p0 = shift.value_or(Matrix::Constant(N, n, 0.25));
    require(p0.rows() == N && p0.cols() == n, "builtin_hamiltonian: shift has wrong shape");
    c.value = [p0](const Vector&, const Vector&, const Matrix& P) { return (P - p0).squaredNorm(); };
    c.h_eta = [N](const Vector&, const Vector&, const Matrix&) -> Vector { return Vector::Zero(N); };
    c.h_P = [p0](const Vector&, const Vector&, const Matrix& P) -> Matrix { return 2.0 * (P - p0); };
  } else {
    throw std::invalid_argument("builtin_hamiltonian: unknown name '" + name + "'");
  }
  return HamiltonianModel(n, N, std::move(c), HamiltonianModel::default_fd_step(), true, name);
}

}  // namespace linf
