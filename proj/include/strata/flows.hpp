#pragma once

// Vector fields tangent to a set: tangency certificates (symbolic multiplier
// X(F) = mu*F when the data is polynomial, sampled defect otherwise), RK4
// flows with per-step Newton re-projection, discovery of polynomial tangent
// fields by nullspace solves, orbit dimension via iterated brackets, and the
// union-find reachability partition of a sample cloud under random flow
// words.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "strata/poly.hpp"
#include "strata/rng.hpp"
#include "strata/set.hpp"
#include "strata/stratkit.hpp"

namespace strata {

struct VectorField {
  std::string name;
  std::vector<ScalarField> components;  // one per ambient coordinate

  enum class Certificate { None, Symbolic, Sampled };
  Certificate certificate = Certificate::None;
  std::vector<std::string> multipliers;  // per-equation mu with X(F) = mu*F
  double sampled_defect = std::numeric_limits<double>::infinity();

  int ambient_dim() const { return static_cast<int>(components.size()); }

  Eigen::VectorXd eval(const Eigen::VectorXd& p) const {
    Eigen::VectorXd v(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) v(static_cast<int>(i)) = components[i].eval(p);
    return v;
  }

  // directional derivative X(f) as a symbolic expression
  ExprPtr apply_to(const ScalarField& f) const {
    ExprPtr acc = make_const(0.0);
    for (std::size_t j = 0; j < components.size(); ++j)
      acc = make_add(acc, make_mul(components[j].root(), f.derivative_root(static_cast<int>(j))));
    return acc;
  }
};

struct TangencyReport {
  double max_defect = 0.0;           // max |<grad F_i, X>| over samples
  bool symbolic = false;             // exact polynomial identity found
  std::vector<std::string> multipliers;
};

namespace detail {

// try to write target = mu * base as an exact polynomial identity, with mu of
// bounded degree; returns the multiplier on success
inline std::optional<PolyMap> poly_multiplier(const PolyMap& target, const PolyMap& base,
                                              int nvars, int deg_mu) {
  auto mus = poly::monomials_up_to(nvars, deg_mu);
  // collect the monomial support of all candidate products
  std::map<Monomial, int> rows;
  auto touch = [&](const PolyMap& p) {
    for (const auto& [m, c] : p)
      if (rows.find(m) == rows.end()) rows.emplace(m, static_cast<int>(rows.size()));
  };
  touch(target);
  for (const auto& mu : mus) {
    PolyMap prod = poly::mul(poly::from_monomial(mu), base);
    touch(prod);
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows.size(), mus.size());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows.size());
  for (const auto& [m, c] : target) b(rows.at(m)) = c;
  for (std::size_t k = 0; k < mus.size(); ++k) {
    PolyMap prod = poly::mul(poly::from_monomial(mus[k]), base);
    for (const auto& [m, c] : prod) A(rows.at(m), static_cast<int>(k)) += c;
  }
  Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
  double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if ((A * sol - b).cwiseAbs().maxCoeff() > 1e-9 * scale) return std::nullopt;
  PolyMap mu;
  for (std::size_t k = 0; k < mus.size(); ++k)
    if (std::abs(sol(static_cast<int>(k))) > 1e-12) mu[mus[k]] = sol(static_cast<int>(k));
  return mu;
}

}  // namespace detail

inline TangencyReport check_tangency(const VectorField& x, const SemialgebraicSet& set,
                                     int samples, std::uint64_t seed,
                                     double tol_mem = kDefaultMembershipTol) {
  if (x.ambient_dim() != set.ambient_dim)
    throw std::invalid_argument("check_tangency: dimension mismatch");
  TangencyReport rep;
  // symbolic certificate first: X(F_i) = mu_i * F_i as polynomials
  bool all_symbolic = !set.equations.empty();
  std::vector<std::string> mus;
  for (const auto& f : set.equations) {
    ScalarField xf(set.ambient_dim, x.apply_to(f), f.var_names());
    auto pxf = poly::expand(xf.root(), set.ambient_dim);
    auto pf = poly::expand(f.root(), set.ambient_dim);
    if (!pxf || !pf) {
      all_symbolic = false;
      break;
    }
    int deg_gap = std::max(0, poly::degree(*pxf) - poly::degree(*pf));
    auto mu = detail::poly_multiplier(*pxf, *pf, set.ambient_dim, deg_gap);
    if (!mu) {
      all_symbolic = false;
      break;
    }
    mus.push_back(ScalarField(set.ambient_dim, poly::to_expr(*mu), f.var_names()).to_string());
  }
  if (all_symbolic) {
    rep.symbolic = true;
    rep.multipliers = mus;
  }
  // sampled defect either way (it is the reported quantity)
  auto pts = set.parametrization && set.equations.empty()
                 ? sample_on_set(set, samples, seed)
                 : sample_on_set(set, samples, seed, {1.5, tol_mem});
  if (pts.empty()) throw std::runtime_error("check_tangency: sampling failure");
  for (const auto& p : pts) {
    Eigen::VectorXd v = x.eval(p);
    for (const auto& f : set.equations)
      rep.max_defect = std::max(rep.max_defect, std::abs(f.gradient(p).dot(v)));
  }
  return rep;
}

class flow_escape_error : public std::runtime_error {
 public:
  flow_escape_error(const std::string& what, double t_star)
      : std::runtime_error(what), t_star(t_star) {}
  double t_star;
};

struct FlowOptions {
  double step = 0.01;
  const SemialgebraicSet* set = nullptr;  // re-projection target (optional)
  double tol_mem = kDefaultMembershipTol;
  double escape_tol = 1e-6;
};

inline Eigen::VectorXd flow(const VectorField& x, const Eigen::VectorXd& p0, double t,
                            const FlowOptions& opt = {}) {
  Eigen::VectorXd p = p0;
  if (t == 0.0) return p;
  int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) / opt.step)));
  double h = t / steps;
  std::vector<const ScalarField*> eqs;
  if (opt.set) eqs = field_ptrs(opt.set->equations);
  for (int i = 0; i < steps; ++i) {
    Eigen::VectorXd k1 = x.eval(p);
    Eigen::VectorXd k2 = x.eval(p + 0.5 * h * k1);
    Eigen::VectorXd k3 = x.eval(p + 0.5 * h * k2);
    Eigen::VectorXd k4 = x.eval(p + h * k3);
    p += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!eqs.empty()) {
      auto proj = newton_project(eqs, p, {opt.tol_mem, 30});
      double drift = 0.0;
      if (proj) {
        drift = (*proj - p).norm();
        p = *proj;
      } else {
        drift = std::numeric_limits<double>::infinity();
      }
      if (drift > opt.escape_tol)
        throw flow_escape_error("flow escape at time " + std::to_string((i + 1) * h),
                                (i + 1) * h);
    }
  }
  return p;
}

// --- polynomial tangent-field discovery ---

struct FieldBasisOptions {
  int deg_mu = 0;
  // collocation controls (used when equations are not polynomial, or when a
  // local field basis around an anchor is requested)
  int collocation_samples = 400;
  std::uint64_t seed = 7;
  std::optional<Eigen::VectorXd> anchor;  // restrict to a ball around here
  double radius = 0.3;
  double tol_mem = kDefaultMembershipTol;
  double nullspace_tol = 1e-8;
};

inline std::vector<VectorField> tangent_field_basis(const SemialgebraicSet& set, int deg_x,
                                                    const FieldBasisOptions& opt = {}) {
  if (deg_x < 1) throw std::invalid_argument("tangent_field_basis: deg_x must be >= 1");
  const int n = set.ambient_dim;
  auto xmons = poly::monomials_up_to(n, deg_x);
  const int nx = static_cast<int>(xmons.size()) * n;  // unknown X coefficients

  std::vector<std::optional<PolyMap>> peqs;
  bool polynomial = !opt.anchor.has_value();
  for (const auto& f : set.equations) {
    peqs.push_back(poly::expand(f.root(), n));
    if (!peqs.back()) polynomial = false;
  }

  Eigen::MatrixXd A;
  int nmu = 0;
  std::vector<Monomial> mumons;
  if (polynomial) {
    // exact identity sum_j X_j dF/dx_j - mu F = 0 per equation, row per
    // monomial of the product space
    mumons = poly::monomials_up_to(n, opt.deg_mu);
    nmu = static_cast<int>(mumons.size());
    std::vector<Eigen::MatrixXd> blocks;
    int total_rows = 0;
    std::vector<std::map<Monomial, int>> rowmaps(set.equations.size());
    std::vector<std::vector<PolyMap>> dfs(set.equations.size());
    for (std::size_t e = 0; e < set.equations.size(); ++e) {
      for (int j = 0; j < n; ++j) dfs[e].push_back(poly::diff(*peqs[e], j));
      auto touch = [&](const PolyMap& p) {
        for (const auto& [m, c] : p)
          if (!rowmaps[e].count(m)) rowmaps[e].emplace(m, static_cast<int>(rowmaps[e].size()));
      };
      for (std::size_t k = 0; k < xmons.size(); ++k)
        for (int j = 0; j < n; ++j) touch(poly::mul(poly::from_monomial(xmons[k]), dfs[e][j]));
      for (const auto& mu : mumons) touch(poly::mul(poly::from_monomial(mu), *peqs[e]));
      total_rows += static_cast<int>(rowmaps[e].size());
    }
    A = Eigen::MatrixXd::Zero(total_rows, nx + nmu * static_cast<int>(set.equations.size()));
    int row0 = 0;
    for (std::size_t e = 0; e < set.equations.size(); ++e) {
      for (std::size_t k = 0; k < xmons.size(); ++k)
        for (int j = 0; j < n; ++j) {
          PolyMap prod = poly::mul(poly::from_monomial(xmons[k]), dfs[e][j]);
          int col = j * static_cast<int>(xmons.size()) + static_cast<int>(k);
          for (const auto& [m, c] : prod) A(row0 + rowmaps[e].at(m), col) += c;
        }
      for (int k = 0; k < nmu; ++k) {
        PolyMap prod = poly::mul(poly::from_monomial(mumons[k]), *peqs[e]);
        int col = nx + static_cast<int>(e) * nmu + k;
        for (const auto& [m, c] : prod) A(row0 + rowmaps[e].at(m), col) -= c;
      }
      row0 += static_cast<int>(rowmaps[e].size());
    }
  } else {
    // collocation: <grad F_i(s), X(s)> = 0 on samples s (mu drops out on the
    // set); rows normalized by |grad F_i| so no sheet dominates
    std::vector<Eigen::VectorXd> pts;
    Rng rng = Rng::stream(opt.seed, {0xf1e1d});
    auto eq_ptrs = field_ptrs(set.equations);
    if (opt.anchor) {
      int budget = opt.collocation_samples * 30;
      while (static_cast<int>(pts.size()) < opt.collocation_samples && budget-- > 0) {
        // residual target relative to the start: an absolute tolerance admits
        // a wide off-set band where the equations are degenerate, and rows
        // collocated on such samples point nowhere
        auto delta = detail::project_offset(
            eq_ptrs, *opt.anchor,
            opt.radius * std::cbrt(rng.uniform()) * rng.unit_vector(n), opt.tol_mem);
        if (!delta || delta->norm() > opt.radius) continue;
        Eigen::VectorXd p = *opt.anchor + *delta;
        if (set_member(set, p, opt.tol_mem)) pts.push_back(p);
      }
    } else {
      pts = sample_on_set(set, opt.collocation_samples, opt.seed, {1.5, opt.tol_mem});
    }
    if (pts.size() < xmons.size())
      throw std::runtime_error("tangent_field_basis: not enough collocation samples");
    std::vector<Eigen::VectorXd> rows;
    for (const auto& p : pts) {
      for (const auto& f : set.equations) {
        Eigen::VectorXd g = f.gradient(p);
        double gn = g.norm();
        if (gn < 1e-8) continue;  // near-degenerate rows carry no direction
        Eigen::VectorXd row = Eigen::VectorXd::Zero(nx);
        for (std::size_t k = 0; k < xmons.size(); ++k) {
          double mval = poly::eval_monomial(xmons[k], p);
          for (int j = 0; j < n; ++j)
            row(j * static_cast<int>(xmons.size()) + static_cast<int>(k)) = g(j) / gn * mval;
        }
        rows.push_back(row);
      }
    }
    A = Eigen::MatrixXd::Zero(rows.size(), nx);
    for (std::size_t r = 0; r < rows.size(); ++r) A.row(static_cast<int>(r)) = rows[r];
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > opt.nullspace_tol * std::max(smax, 1.0)) ++rank;
  std::vector<VectorField> basis;
  auto names = default_var_names(n);
  for (int k = rank; k < A.cols(); ++k) {
    Eigen::VectorXd v = svd.matrixV().col(k);
    if (v.head(nx).cwiseAbs().maxCoeff() < 1e-10) continue;  // pure-mu direction
    VectorField x;
    x.name = "basis_" + std::to_string(static_cast<int>(basis.size()));
    for (int j = 0; j < n; ++j) {
      PolyMap comp;
      for (std::size_t m = 0; m < xmons.size(); ++m) {
        double c = v(j * static_cast<int>(xmons.size()) + static_cast<int>(m));
        if (std::abs(c) > 1e-12) comp[xmons[m]] = c;
      }
      x.components.emplace_back(n, poly::to_expr(comp), names);
    }
    x.certificate = polynomial ? VectorField::Certificate::Symbolic
                               : VectorField::Certificate::Sampled;
    basis.push_back(std::move(x));
  }
  return basis;
}

// Lie bracket [X, Y]_i = X(Y_i) - Y(X_i), symbolically
inline VectorField lie_bracket(const VectorField& x, const VectorField& y) {
  VectorField b;
  b.name = "[" + x.name + "," + y.name + "]";
  for (int i = 0; i < y.ambient_dim(); ++i) {
    ExprPtr e = make_sub(x.apply_to(y.components[i]), y.apply_to(x.components[i]));
    b.components.emplace_back(y.components[i].ambient_dim(), e, y.components[i].var_names());
  }
  return b;
}

inline int orbit_dimension(const std::vector<VectorField>& fields, const Eigen::VectorXd& p,
                           int bracket_depth = 2) {
  if (fields.empty()) return 0;
  std::vector<VectorField> family = fields;
  std::size_t prev_start = 0;
  for (int d = 0; d < bracket_depth; ++d) {
    std::size_t end = family.size();
    for (std::size_t i = 0; i < fields.size(); ++i)
      for (std::size_t j = std::max(prev_start, i + 1); j < end; ++j)
        family.push_back(lie_bracket(fields[i], family[j]));
    prev_start = end;
    if (family.size() > 200) break;  // bracket closure blow-up guard
  }
  Eigen::MatrixXd vals(p.size(), family.size());
  for (std::size_t k = 0; k < family.size(); ++k) vals.col(static_cast<int>(k)) = family[k].eval(p);
  // relative threshold with an absolute floor: a basis collocated against a
  // non-polynomial constraint carries truncation residues at evaluation
  // points, so values three decades under a unit direction do not count
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(vals);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-4 * std::max(svd.singularValues()(0), 1.0)) ++r;
  return r;
}

// --- reachability partition under random flow words ---

struct OrbitClass {
  std::vector<int> members;    // cloud indices
  int representative = 0;      // cloud index
  int dim = -1;
};

struct OrbitEstimate {
  std::vector<OrbitClass> classes;
  double link_radius = 0.0;
  int words_used = 0;
  int escapes = 0;
};

struct ReachOptions {
  int words = 400;
  double tmax = 1.0;           // bound on the total |t| of a word
  double link_radius = 0.0;    // 0: use the cloud's mean NN distance
  int max_letters = 4;
  FlowOptions flow;
  int bracket_depth = 2;
  bool estimate_dims = true;
};

inline OrbitEstimate reach_partition(const std::vector<VectorField>& fields,
                                     const std::vector<Eigen::VectorXd>& cloud,
                                     std::uint64_t seed, const ReachOptions& opt = {}) {
  OrbitEstimate est;
  if (cloud.empty()) return est;
  detail::UnionFind uf(static_cast<int>(cloud.size()));
  double link = opt.link_radius > 0 ? opt.link_radius : detail::mean_nn_distance(cloud);
  est.link_radius = link;
  est.words_used = opt.words;
  for (int w = 0; w < opt.words && !fields.empty(); ++w) {
    Rng rng = Rng::stream(seed, {0x0a0b, static_cast<std::uint64_t>(w)});
    int start = rng.uniform_int(static_cast<int>(cloud.size()));
    int letters = 1 + rng.uniform_int(opt.max_letters);
    std::vector<std::pair<int, double>> word;
    double total = 0.0;
    for (int l = 0; l < letters; ++l) {
      int f = rng.uniform_int(static_cast<int>(fields.size()));
      double t = rng.uniform(-1.0, 1.0);
      word.emplace_back(f, t);
      total += std::abs(t);
    }
    double scale = total > opt.tmax ? opt.tmax / total : 1.0;
    Eigen::VectorXd p = cloud[start];
    bool escaped = false;
    try {
      for (const auto& [f, t] : word) p = flow(fields[f], p, t * scale, opt.flow);
    } catch (const flow_escape_error&) {
      escaped = true;
      ++est.escapes;
    }
    if (escaped) continue;
    for (std::size_t j = 0; j < cloud.size(); ++j)
      if ((cloud[j] - p).norm() <= link) uf.merge(start, static_cast<int>(j));
  }
  std::map<int, OrbitClass> classes;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    int root = uf.find(static_cast<int>(i));
    auto& cls = classes[root];
    if (cls.members.empty()) cls.representative = static_cast<int>(i);
    cls.members.push_back(static_cast<int>(i));
  }
  for (auto& [root, cls] : classes) {
    if (opt.estimate_dims)
      cls.dim = orbit_dimension(fields, cloud[cls.representative], opt.bracket_depth);
    est.classes.push_back(std::move(cls));
  }
  std::sort(est.classes.begin(), est.classes.end(),
            [](const OrbitClass& a, const OrbitClass& b) {
              return a.members.size() != b.members.size() ? a.members.size() > b.members.size()
                                                          : a.representative < b.representative;
            });
  return est;
}

}  // namespace strata
