#pragma once

// Desk-scale proper group actions: finite orthogonal matrix groups and the
// circle acting by rotation weights. Isotropy/orbit-type partitions,
// invariant averaging of functions and fields, the Hilbert-map embedding of
// the orbit space, pushforward of invariant fields to quotient coordinates,
// and the comparison harness between orbit-type strata and pushed-field
// reachability classes.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "strata/flows.hpp"
#include "strata/poly.hpp"
#include "strata/rng.hpp"

namespace strata {

struct GroupAction {
  enum class Kind { Finite, Circle };
  Kind kind = Kind::Finite;
  int ambient_dim = 0;
  std::vector<Eigen::MatrixXd> matrices;  // finite: closed under product
  std::vector<int> weights;               // circle: per consecutive 2-dim block

  static GroupAction finite(std::vector<Eigen::MatrixXd> mats) {
    if (mats.empty()) throw std::invalid_argument("GroupAction: empty matrix list");
    GroupAction a;
    a.kind = Kind::Finite;
    a.ambient_dim = static_cast<int>(mats.front().rows());
    int n = a.ambient_dim;
    for (const auto& g : mats) {
      if (g.rows() != n || g.cols() != n)
        throw std::invalid_argument("GroupAction: mixed matrix sizes");
      if ((g.transpose() * g - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("GroupAction: matrix not orthogonal");
    }
    a.matrices = std::move(mats);
    auto find = [&](const Eigen::MatrixXd& m) {
      for (std::size_t i = 0; i < a.matrices.size(); ++i)
        if ((a.matrices[i] - m).cwiseAbs().maxCoeff() <= 1e-9) return static_cast<int>(i);
      return -1;
    };
    if (find(Eigen::MatrixXd::Identity(n, n)) < 0)
      throw std::invalid_argument("GroupAction: identity missing");
    for (const auto& g : a.matrices) {
      if (find(g.transpose()) < 0)
        throw std::invalid_argument("GroupAction: inverse missing");
      for (const auto& h : a.matrices)
        if (find(g * h) < 0) throw std::invalid_argument("GroupAction: not closed under product");
    }
    return a;
  }

  static GroupAction circle(std::vector<int> block_weights, int ambient_dim) {
    GroupAction a;
    a.kind = Kind::Circle;
    a.ambient_dim = ambient_dim;
    if (2 * static_cast<int>(block_weights.size()) > ambient_dim)
      throw std::invalid_argument("GroupAction: more weight blocks than coordinate pairs");
    for (int w : block_weights)
      if (w == 0) throw std::invalid_argument("GroupAction: zero weight (drop the block)");
    a.weights = std::move(block_weights);
    return a;
  }

  // rotation by theta for the circle action
  Eigen::MatrixXd circle_matrix(double theta) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(ambient_dim, ambient_dim);
    for (std::size_t b = 0; b < weights.size(); ++b) {
      double a = weights[b] * theta;
      int i = 2 * static_cast<int>(b);
      m(i, i) = std::cos(a);
      m(i, i + 1) = -std::sin(a);
      m(i + 1, i) = std::sin(a);
      m(i + 1, i + 1) = std::cos(a);
    }
    return m;
  }

  std::size_t order() const { return kind == Kind::Finite ? matrices.size() : 0; }
};

struct IsotropyType {
  // finite actions: indices of fixing elements
  std::vector<int> elements;
  // circle actions
  enum class Circle { NotApplicable, Full, Trivial, Cyclic } circle = Circle::NotApplicable;
  int cyclic_order = 1;

  std::string describe() const {
    switch (circle) {
      case Circle::Full: return "S1";
      case Circle::Trivial: return "trivial";
      case Circle::Cyclic: return "Z" + std::to_string(cyclic_order);
      default: return "order_" + std::to_string(elements.size());
    }
  }
};

inline IsotropyType isotropy(const GroupAction& act, const Eigen::VectorXd& p,
                             double tol = 1e-9) {
  IsotropyType iso;
  if (act.kind == GroupAction::Kind::Finite) {
    for (std::size_t i = 0; i < act.matrices.size(); ++i)
      if ((act.matrices[i] * p - p).norm() <= tol) iso.elements.push_back(static_cast<int>(i));
    return iso;
  }
  int g = 0;
  bool any_moving = false;
  for (std::size_t b = 0; b < act.weights.size(); ++b) {
    int i = 2 * static_cast<int>(b);
    if (p.segment(i, 2).norm() > tol) {
      any_moving = true;
      g = std::gcd(g, std::abs(act.weights[b]));
    }
  }
  if (!any_moving)
    iso.circle = IsotropyType::Circle::Full;
  else if (g == 1)
    iso.circle = IsotropyType::Circle::Trivial;
  else {
    iso.circle = IsotropyType::Circle::Cyclic;
    iso.cyclic_order = g;
  }
  return iso;
}

namespace detail {

// do g H g^{-1} = H' for some g in G? (brute force, desk-scale groups)
inline bool conjugate_subgroups(const GroupAction& act, const std::vector<int>& h1,
                                const std::vector<int>& h2) {
  if (h1.size() != h2.size()) return false;
  auto contains = [&](const std::vector<int>& hs, const Eigen::MatrixXd& m) {
    for (int i : hs)
      if ((act.matrices[i] - m).cwiseAbs().maxCoeff() <= 1e-9) return true;
    return false;
  };
  for (const auto& g : act.matrices) {
    bool all = true;
    for (int i : h1)
      if (!contains(h2, g * act.matrices[i] * g.transpose())) {
        all = false;
        break;
      }
    if (all) return true;
  }
  return false;
}

}  // namespace detail

// distance between the orbits of p and q
inline double orbit_distance(const GroupAction& act, const Eigen::VectorXd& p,
                             const Eigen::VectorXd& q) {
  if (act.kind == GroupAction::Kind::Finite) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : act.matrices) best = std::min(best, (g * p - q).norm());
    return best;
  }
  auto d = [&](double th) { return (act.circle_matrix(th) * p - q).norm(); };
  const int grid = 256;
  double best_th = 0.0, best = d(0.0);
  for (int k = 1; k < grid; ++k) {
    double th = 2.0 * M_PI * k / grid;
    double v = d(th);
    if (v < best) {
      best = v;
      best_th = th;
    }
  }
  // golden-section polish around the grid winner
  double a = best_th - 2.0 * M_PI / grid, b = best_th + 2.0 * M_PI / grid;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  for (int it = 0; it < 60; ++it) {
    if (d(x1) < d(x2)) {
      b = x2;
      x2 = x1;
      x1 = b - phi * (b - a);
    } else {
      a = x1;
      x1 = x2;
      x2 = a + phi * (b - a);
    }
  }
  return d(0.5 * (a + b));
}

struct OrbitTypePiece {
  std::string type_key;          // conjugacy class / circle isotropy label
  IsotropyType iso;
  std::vector<int> members;      // cloud indices
};

struct OrbitTypePartition {
  std::vector<OrbitTypePiece> pieces;
  int piece_of(int idx) const {
    for (std::size_t k = 0; k < pieces.size(); ++k)
      for (int m : pieces[k].members)
        if (m == idx) return static_cast<int>(k);
    return -1;
  }
};

inline OrbitTypePartition orbit_type_partition(const GroupAction& act,
                                               const std::vector<Eigen::VectorXd>& cloud,
                                               std::uint64_t /*seed*/ = 0) {
  if (cloud.empty()) throw std::invalid_argument("orbit_type_partition: empty cloud");
  std::vector<IsotropyType> isos;
  isos.reserve(cloud.size());
  for (const auto& p : cloud) isos.push_back(isotropy(act, p));

  // group by conjugacy class of isotropy
  std::vector<std::vector<int>> class_members;
  std::vector<IsotropyType> class_rep;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    int found = -1;
    for (std::size_t c = 0; c < class_rep.size(); ++c) {
      bool same;
      if (act.kind == GroupAction::Kind::Finite)
        same = detail::conjugate_subgroups(act, isos[i].elements, class_rep[c].elements);
      else
        same = isos[i].circle == class_rep[c].circle &&
               isos[i].cyclic_order == class_rep[c].cyclic_order;
      if (same) {
        found = static_cast<int>(c);
        break;
      }
    }
    if (found < 0) {
      class_rep.push_back(isos[i]);
      class_members.push_back({static_cast<int>(i)});
    } else {
      class_members[found].push_back(static_cast<int>(i));
    }
  }

  // split connected components within each class under orbit distance
  OrbitTypePartition part;
  for (std::size_t c = 0; c < class_rep.size(); ++c) {
    const auto& members = class_members[c];
    std::vector<Eigen::VectorXd> pts;
    for (int m : members) pts.push_back(cloud[m]);
    double nn = 0.0;
    {
      // mean NN under the orbit metric
      double total = 0.0;
      int cnt = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pts.size(); ++j) {
          if (i == j) continue;
          double d = orbit_distance(act, pts[i], pts[j]);
          if (d > 1e-9) best = std::min(best, d);  // orbit mates are distance 0
        }
        if (std::isfinite(best)) {
          total += best;
          ++cnt;
        }
      }
      nn = cnt ? total / cnt : 0.0;
    }
    detail::UnionFind uf(static_cast<int>(pts.size()));
    double radius = std::max(3.0 * nn, 1e-6);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        if (orbit_distance(act, pts[i], pts[j]) <= radius)
          uf.merge(static_cast<int>(i), static_cast<int>(j));
    std::map<int, std::vector<int>> comps;
    for (std::size_t i = 0; i < pts.size(); ++i)
      comps[uf.find(static_cast<int>(i))].push_back(members[i]);
    int sub = 0;
    for (auto& [root, idxs] : comps) {
      OrbitTypePiece piece;
      piece.iso = class_rep[c];
      piece.type_key = class_rep[c].describe() +
                       (comps.size() > 1 ? "#" + std::to_string(sub++) : "");
      piece.members = std::move(idxs);
      part.pieces.push_back(std::move(piece));
    }
  }
  std::sort(part.pieces.begin(), part.pieces.end(),
            [](const OrbitTypePiece& a, const OrbitTypePiece& b) {
              return a.members.size() != b.members.size()
                         ? a.members.size() > b.members.size()
                         : a.type_key < b.type_key;
            });
  return part;
}

// --- invariant averaging ---

namespace detail {

inline std::vector<ExprPtr> linear_substitution(const Eigen::MatrixXd& g) {
  std::vector<ExprPtr> repl;
  for (int i = 0; i < g.rows(); ++i) {
    ExprPtr acc = make_const(0.0);
    for (int j = 0; j < g.cols(); ++j)
      acc = make_add(acc, make_mul(make_const(g(i, j)), make_var(j)));
    repl.push_back(acc);
  }
  return repl;
}

inline std::vector<Eigen::MatrixXd> group_samples(const GroupAction& act, int order) {
  if (act.kind == GroupAction::Kind::Finite) return act.matrices;
  std::vector<Eigen::MatrixXd> out;
  for (int k = 0; k < order; ++k) out.push_back(act.circle_matrix(2.0 * M_PI * k / order));
  return out;
}

}  // namespace detail

// f_bar(p) = average of f(gp); the uniform-grid sum is the exact invariant
// for circle actions once the quadrature order exceeds the trigonometric
// degree of f along orbits
inline ScalarField average(const ScalarField& f, const GroupAction& act, int order = 64) {
  auto mats = detail::group_samples(act, order);
  ExprPtr acc = make_const(0.0);
  for (const auto& g : mats)
    acc = make_add(acc, substitute(f.root(), detail::linear_substitution(g)));
  acc = make_mul(make_const(1.0 / static_cast<double>(mats.size())), acc);
  return ScalarField(act.ambient_dim, acc, f.var_names());
}

// X_bar(p) = average of g^{-1} X(gp) (orthogonal g, so g^{-1} = g^T)
inline VectorField average_field(const VectorField& x, const GroupAction& act, int order = 64) {
  auto mats = detail::group_samples(act, order);
  VectorField out;
  out.name = x.name + "_avg";
  const auto& names = x.components.front().var_names();
  int n = act.ambient_dim;
  for (int i = 0; i < n; ++i) {
    ExprPtr acc = make_const(0.0);
    for (const auto& g : mats) {
      auto repl = detail::linear_substitution(g);
      for (int j = 0; j < n; ++j) {
        if (g(j, i) == 0.0) continue;  // (g^T)_{ij} = g_{ji}
        acc = make_add(acc, make_mul(make_const(g(j, i)), substitute(x.components[j].root(), repl)));
      }
    }
    acc = make_mul(make_const(1.0 / static_cast<double>(mats.size())), acc);
    out.components.emplace_back(n, acc, names);
  }
  return out;
}

inline double invariance_defect(const VectorField& x, const GroupAction& act, int samples,
                                std::uint64_t seed, int order = 32) {
  auto mats = detail::group_samples(act, order);
  Rng rng = Rng::stream(seed, {0x1f0});
  double defect = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd p = rng.in_box(Eigen::VectorXd::Constant(act.ambient_dim, -1.5),
                                   Eigen::VectorXd::Constant(act.ambient_dim, 1.5));
    Eigen::VectorXd xp = x.eval(p);
    for (const auto& g : mats)
      defect = std::max(defect, (g * xp - x.eval(g * p)).norm());
  }
  return defect;
}

// --- Hilbert map ---

struct HilbertMap {
  std::vector<ScalarField> generators;

  int quotient_dim() const { return static_cast<int>(generators.size()); }

  Eigen::VectorXd eval(const Eigen::VectorXd& p) const {
    Eigen::VectorXd v(generators.size());
    for (std::size_t i = 0; i < generators.size(); ++i) v(static_cast<int>(i)) = generators[i].eval(p);
    return v;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const {
    Eigen::MatrixXd j(generators.size(), p.size());
    for (std::size_t i = 0; i < generators.size(); ++i)
      j.row(static_cast<int>(i)) = generators[i].gradient(p).transpose();
    return j;
  }
};

inline double hilbert_invariance_defect(const HilbertMap& hmap, const GroupAction& act,
                                        int samples, std::uint64_t seed, int order = 64) {
  auto mats = detail::group_samples(act, order);
  Rng rng = Rng::stream(seed, {0x417});
  double defect = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd p = rng.in_box(Eigen::VectorXd::Constant(act.ambient_dim, -1.5),
                                   Eigen::VectorXd::Constant(act.ambient_dim, 1.5));
    Eigen::VectorXd v = hmap.eval(p);
    for (const auto& g : mats) defect = std::max(defect, (hmap.eval(g * p) - v).cwiseAbs().maxCoeff());
  }
  return defect;
}

struct HilbertPush {
  Eigen::MatrixXd images;                        // quotient_dim x cloud size
  OrbitTypePartition types;
  std::vector<std::pair<int, int>> separation_failures;  // index pairs
};

inline HilbertPush hilbert_push(const GroupAction& act, const HilbertMap& hmap,
                                const std::vector<Eigen::VectorXd>& cloud,
                                std::uint64_t seed = 0) {
  HilbertPush out;
  out.types = orbit_type_partition(act, cloud, seed);
  out.images.resize(hmap.quotient_dim(), static_cast<int>(cloud.size()));
  for (std::size_t i = 0; i < cloud.size(); ++i)
    out.images.col(static_cast<int>(i)) = hmap.eval(cloud[i]);
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (std::size_t j = i + 1; j < cloud.size(); ++j) {
      bool same_image = (out.images.col(static_cast<int>(i)) - out.images.col(static_cast<int>(j)))
                            .cwiseAbs()
                            .maxCoeff() <= 1e-9;
      if (!same_image) continue;
      if (orbit_distance(act, cloud[i], cloud[j]) > 1e-6)
        out.separation_failures.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  return out;
}

// --- pushing invariant fields to the quotient ---

class rewrite_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<std::string> quotient_var_names(int k) {
  std::vector<std::string> names;
  for (int i = 1; i <= k; ++i) names.push_back("u" + std::to_string(i));
  return names;
}

// express X(sigma_i) as a polynomial in the generators; throws rewrite_error
// if no exact representation exists (non-invariance or missing generators)
inline VectorField push_field(const VectorField& x, const HilbertMap& hmap,
                              double tol = 1e-9) {
  int n = x.ambient_dim();
  int k = hmap.quotient_dim();
  std::vector<PolyMap> gen_polys;
  int max_gen_deg = 1;
  for (const auto& s : hmap.generators) {
    auto p = poly::expand(s.root(), n);
    if (!p) throw rewrite_error("push_field: non-polynomial Hilbert generator");
    gen_polys.push_back(*p);
    max_gen_deg = std::max(max_gen_deg, poly::degree(*p));
  }
  auto names = quotient_var_names(k);
  VectorField out;
  out.name = x.name + "_pushed";
  for (int i = 0; i < k; ++i) {
    ScalarField xsigma(n, x.apply_to(hmap.generators[i]));
    auto target = poly::expand(xsigma.root(), n);
    if (!target) throw rewrite_error("push_field: X(sigma) not polynomial");
    int tdeg = poly::degree(*target);
    // candidate quotient monomials u^m whose x-degree does not exceed tdeg
    auto cand = poly::monomials_up_to(k, std::max(1, tdeg));
    std::vector<Monomial> kept;
    std::vector<PolyMap> kept_polys;
    for (const auto& m : cand) {
      int xdeg = 0;
      for (int j = 0; j < k; ++j) xdeg += m[j] * poly::degree(gen_polys[j]);
      if (xdeg > tdeg) continue;
      PolyMap prod;
      prod[Monomial(n, 0)] = 1.0;
      for (int j = 0; j < k; ++j)
        for (int rep = 0; rep < m[j]; ++rep) prod = poly::mul(prod, gen_polys[j]);
      kept.push_back(m);
      kept_polys.push_back(std::move(prod));
    }
    // least squares in x-monomial coefficient space
    std::map<Monomial, int> rows;
    auto touch = [&](const PolyMap& p) {
      for (const auto& [m, c] : p)
        if (!rows.count(m)) rows.emplace(m, static_cast<int>(rows.size()));
    };
    touch(*target);
    for (const auto& p : kept_polys) touch(p);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows.size(), kept.size());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rows.size());
    for (const auto& [m, c] : *target) b(rows.at(m)) = c;
    for (std::size_t cidx = 0; cidx < kept_polys.size(); ++cidx)
      for (const auto& [m, c] : kept_polys[cidx]) A(rows.at(m), static_cast<int>(cidx)) += c;
    Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
    double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    if ((A * sol - b).cwiseAbs().maxCoeff() > tol * scale)
      throw rewrite_error("push_field: X(sigma_" + std::to_string(i + 1) +
                          ") is not a polynomial in the generators");
    PolyMap comp;
    for (std::size_t cidx = 0; cidx < kept.size(); ++cidx)
      if (std::abs(sol(static_cast<int>(cidx))) > 1e-12) comp[kept[cidx]] = sol(static_cast<int>(cidx));
    out.components.emplace_back(k, poly::to_expr(comp), names);
  }
  out.certificate = VectorField::Certificate::Symbolic;
  return out;
}

// chain-rule certificate: d/dt sigma(flow(X, p, t)) at t = 0 equals the
// pushed field at sigma(p)
inline double push_certificate(const VectorField& x, const HilbertMap& hmap,
                               const VectorField& pushed, int samples, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, {0xce27});
  double defect = 0.0;
  int n = x.ambient_dim();
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd p = rng.in_box(Eigen::VectorXd::Constant(n, -1.5),
                                   Eigen::VectorXd::Constant(n, 1.5));
    Eigen::VectorXd lhs = hmap.jacobian(p) * x.eval(p);
    Eigen::VectorXd rhs = pushed.eval(hmap.eval(p));
    defect = std::max(defect, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return defect;
}

// --- Theorem-4-style comparison: orbit types vs pushed-field reachability ---

struct Theorem4Report {
  OrbitTypePartition types;          // on the ambient cloud
  OrbitEstimate reach;               // on the quotient images
  std::vector<VectorField> pushed;   // quotient fields used
  bool agree = false;
  std::vector<std::pair<int, int>> witnesses;  // disagreeing index pairs
  double field_invariance_defect = 0.0;
};

struct Theorem4Options {
  int words = 1500;
  double tmax = 1.0;
  int quadrature_order = 64;
  double flow_step = 0.01;
  // 0 = mean NN of distinct images. Near a fixed point the orbit closure
  // adheres to the fixed stratum, so a safe explicit radius below the
  // worst-case contraction gap is preferred.
  double link_radius = 0.0;
};

inline Theorem4Report theorem4_check(const GroupAction& act, const HilbertMap& hmap,
                                     int field_degree,
                                     const std::vector<Eigen::VectorXd>& cloud,
                                     std::uint64_t seed, const Theorem4Options& opt = {}) {
  Theorem4Report rep;
  rep.types = orbit_type_partition(act, cloud, seed);

  // invariant polynomial fields by averaging the monomial field basis
  int n = act.ambient_dim;
  auto mons = poly::monomials_up_to(n, field_degree);
  auto names = default_var_names(n);
  std::vector<VectorField> invariant;
  std::vector<Eigen::VectorXd> coeff_seen;  // dedup directions in coefficient space
  for (int j = 0; j < n; ++j) {
    for (const auto& m : mons) {
      VectorField base;
      base.name = "m" + std::to_string(j);
      for (int c = 0; c < n; ++c)
        base.components.emplace_back(
            n, c == j ? poly::to_expr(poly::from_monomial(m)) : make_const(0.0), names);
      VectorField avg = average_field(base, act, opt.quadrature_order);
      // expand components to detect zero averages and deduplicate
      Eigen::VectorXd coeff = Eigen::VectorXd::Zero(static_cast<int>(mons.size()) * n);
      bool poly_ok = true;
      for (int c = 0; c < n && poly_ok; ++c) {
        auto p = poly::expand(avg.components[c].root(), n);
        if (!p) {
          poly_ok = false;
          break;
        }
        for (const auto& [mm, cc] : *p) {
          auto it = std::find(mons.begin(), mons.end(), mm);
          if (it != mons.end())
            coeff(c * static_cast<int>(mons.size()) +
                  static_cast<int>(it - mons.begin())) = cc;
        }
      }
      if (!poly_ok) continue;
      // clean tiny quadrature dust so the symbolic pushes stay exact
      for (int idx = 0; idx < coeff.size(); ++idx)
        if (std::abs(coeff(idx)) < 1e-12) coeff(idx) = 0.0;
      if (coeff.cwiseAbs().maxCoeff() < 1e-10) continue;
      coeff /= coeff.norm();
      bool dup = false;
      for (const auto& seen : coeff_seen)
        if (std::min((seen - coeff).norm(), (seen + coeff).norm()) < 1e-8) dup = true;
      if (dup) continue;
      coeff_seen.push_back(coeff);
      // rebuild from the cleaned coefficients
      VectorField cleaned;
      cleaned.name = "inv_" + std::to_string(static_cast<int>(invariant.size()));
      for (int c = 0; c < n; ++c) {
        PolyMap comp;
        for (std::size_t k = 0; k < mons.size(); ++k) {
          double v = coeff(c * static_cast<int>(mons.size()) + static_cast<int>(k));
          if (v != 0.0) comp[mons[k]] = v;
        }
        cleaned.components.emplace_back(n, poly::to_expr(comp), names);
      }
      invariant.push_back(std::move(cleaned));
    }
  }

  for (const auto& x : invariant)
    rep.field_invariance_defect =
        std::max(rep.field_invariance_defect, invariance_defect(x, act, 40, seed));

  for (const auto& x : invariant) rep.pushed.push_back(push_field(x, hmap));

  // quotient cloud and reachability under the pushed fields
  std::vector<Eigen::VectorXd> qcloud;
  for (const auto& p : cloud) qcloud.push_back(hmap.eval(p));
  // link radius from the distinct images only (orbit mates map on top of
  // each other and would drive the mean NN distance to zero)
  std::vector<Eigen::VectorXd> distinct;
  for (const auto& q : qcloud) {
    bool seen = false;
    for (const auto& d : distinct)
      if ((d - q).norm() <= 1e-9) seen = true;
    if (!seen) distinct.push_back(q);
  }
  ReachOptions ro;
  ro.words = opt.words;
  ro.tmax = opt.tmax;
  ro.flow.step = opt.flow_step;
  ro.link_radius = opt.link_radius > 0 ? opt.link_radius
                                       : std::max(detail::mean_nn_distance(distinct), 1e-9);
  ro.estimate_dims = false;
  rep.reach = reach_partition(rep.pushed, qcloud, seed, ro);

  // identical images are the same quotient point: merge their reach classes
  std::vector<int> reach_class(cloud.size(), -1);
  for (std::size_t c = 0; c < rep.reach.classes.size(); ++c)
    for (int m : rep.reach.classes[c].members) reach_class[m] = static_cast<int>(c);
  for (std::size_t i = 0; i < qcloud.size(); ++i)
    for (std::size_t j = i + 1; j < qcloud.size(); ++j)
      if ((qcloud[i] - qcloud[j]).norm() <= 1e-9 && reach_class[i] != reach_class[j]) {
        int from = std::max(reach_class[i], reach_class[j]);
        int to = std::min(reach_class[i], reach_class[j]);
        for (auto& rc : reach_class)
          if (rc == from) rc = to;
      }

  std::vector<int> type_piece(cloud.size(), -1);
  for (std::size_t k = 0; k < rep.types.pieces.size(); ++k)
    for (int m : rep.types.pieces[k].members) type_piece[m] = static_cast<int>(k);

  rep.agree = true;
  for (std::size_t i = 0; i < cloud.size() && rep.witnesses.size() < 8; ++i)
    for (std::size_t j = i + 1; j < cloud.size(); ++j) {
      bool same_type = type_piece[i] == type_piece[j];
      bool same_reach = reach_class[i] == reach_class[j];
      if (same_type != same_reach) {
        rep.agree = false;
        rep.witnesses.emplace_back(static_cast<int>(i), static_cast<int>(j));
        if (rep.witnesses.size() >= 8) break;
      }
    }
  return rep;
}

}  // namespace strata
