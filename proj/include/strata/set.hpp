#pragma once

// Equation/inequality sets in R^N, with an optional parametrization for
// non-algebraic corpus members (the spiral). Membership is tolerance-based;
// sampling works by random shooting followed by Newton projection onto the
// active equations.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "strata/expr.hpp"
#include "strata/rng.hpp"

namespace strata {

inline constexpr double kDefaultMembershipTol = 1e-9;

enum class Rel { GT, GE, LT, LE };

inline const char* rel_name(Rel r) {
  switch (r) {
    case Rel::GT: return ">";
    case Rel::GE: return ">=";
    case Rel::LT: return "<";
    case Rel::LE: return "<=";
  }
  return "?";
}

struct Inequality {
  ScalarField field;
  Rel rel;

  bool satisfied(const Eigen::VectorXd& p, double tol) const {
    double v = field.eval(p);
    switch (rel) {
      case Rel::GT: return v > 0;
      case Rel::GE: return v >= -tol;
      case Rel::LT: return v < 0;
      case Rel::LE: return v <= tol;
    }
    return false;
  }
};

struct Parametrization {
  int param_dim = 1;
  std::vector<ScalarField> components;          // functions of the parameters
  std::vector<std::pair<double, double>> domain;
  double period = 0.0;      // translation period of the parameter, 0 = none
  // limit point reached as the (single) parameter goes to +infinity, if any
  std::optional<Eigen::VectorXd> limit_point;

  Eigen::VectorXd at(const Eigen::VectorXd& t) const {
    Eigen::VectorXd p(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) p(i) = components[i].eval(t);
    return p;
  }

  Eigen::VectorXd at(double t) const {
    Eigen::VectorXd v(1);
    v(0) = t;
    return at(v);
  }

  // columns of the Jacobian d(components)/d(params) at t
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& t) const {
    Eigen::MatrixXd j(components.size(), param_dim);
    for (std::size_t i = 0; i < components.size(); ++i)
      j.row(static_cast<int>(i)) = components[i].gradient(t).transpose();
    return j;
  }
};

struct SemialgebraicSet {
  int ambient_dim = 0;
  std::vector<ScalarField> equations;
  std::vector<Inequality> inequalities;
  std::optional<Parametrization> parametrization;

  bool has_equations() const { return !equations.empty(); }
};

// --- Newton projection onto a system of equations (least-norm steps) ---

struct ProjectOptions {
  double tol = kDefaultMembershipTol;
  int max_iters = 60;
};

inline std::optional<Eigen::VectorXd> newton_project(
    const std::vector<const ScalarField*>& eqs, Eigen::VectorXd x,
    const ProjectOptions& opt = {}) {
  if (eqs.empty()) return x;
  int m = static_cast<int>(eqs.size());
  int n = static_cast<int>(x.size());
  Eigen::VectorXd r(m);
  Eigen::MatrixXd j(m, n);
  auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& out) {
    for (int i = 0; i < m; ++i) out(i) = eqs[i]->eval(p);
  };
  residual(x, r);
  for (int it = 0; it < opt.max_iters; ++it) {
    double rn = r.cwiseAbs().maxCoeff();
    if (rn <= opt.tol) return x;
    for (int i = 0; i < m; ++i) j.row(i) = eqs[i]->gradient(x).transpose();
    // truncated least-squares solve: directions with tiny singular values
    // would otherwise produce huge non-local jumps along the locus
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-8);
    Eigen::VectorXd step = svd.solve(r);
    if (!step.allFinite()) return std::nullopt;
    // damped update: halve until the residual does not grow
    double alpha = 1.0;
    Eigen::VectorXd xn = x - alpha * step, rn2(m);
    residual(xn, rn2);
    int backtracks = 0;
    while (rn2.cwiseAbs().maxCoeff() > rn && backtracks < 20) {
      alpha *= 0.5;
      xn = x - alpha * step;
      residual(xn, rn2);
      ++backtracks;
    }
    if (backtracks == 20) return std::nullopt;
    x = xn;
    r = rn2;
  }
  return r.cwiseAbs().maxCoeff() <= opt.tol ? std::optional<Eigen::VectorXd>(x) : std::nullopt;
}

inline std::vector<const ScalarField*> field_ptrs(const std::vector<ScalarField>& fs) {
  std::vector<const ScalarField*> p;
  p.reserve(fs.size());
  for (const auto& f : fs) p.push_back(&f);
  return p;
}

// --- nearest-parameter search for parametrized sets (1-d solid, n-d coarse) ---

inline Eigen::VectorXd nearest_param(const Parametrization& par, const Eigen::VectorXd& p,
                                     int grid = 4096) {
  auto dist2 = [&](const Eigen::VectorXd& t) { return (par.at(t) - p).squaredNorm(); };
  Eigen::VectorXd best(par.param_dim);
  double bestd = std::numeric_limits<double>::infinity();
  if (par.param_dim == 1) {
    double lo = par.domain[0].first, hi = par.domain[0].second;
    for (int i = 0; i <= grid; ++i) {
      Eigen::VectorXd t(1);
      t(0) = lo + (hi - lo) * i / grid;
      double d = dist2(t);
      if (d < bestd) {
        bestd = d;
        best = t;
      }
    }
    // golden-section refinement around the best grid cell
    double h = (hi - lo) / grid;
    double a = std::max(lo, best(0) - h), b = std::min(hi, best(0) + h);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    for (int it = 0; it < 80; ++it) {
      Eigen::VectorXd tc(1), td(1);
      tc(0) = c;
      td(0) = d;
      if (dist2(tc) < dist2(td)) {
        b = d;
      } else {
        a = c;
      }
      c = b - phi * (b - a);
      d = a + phi * (b - a);
    }
    best(0) = 0.5 * (a + b);
    return best;
  }
  // coarse lattice + local Gauss-Newton for multi-parameter sets
  int per_axis = std::max(2, static_cast<int>(std::pow(grid, 1.0 / par.param_dim)));
  std::vector<int> idx(par.param_dim, 0);
  for (;;) {
    Eigen::VectorXd t(par.param_dim);
    for (int k = 0; k < par.param_dim; ++k)
      t(k) = par.domain[k].first +
             (par.domain[k].second - par.domain[k].first) * idx[k] / (per_axis - 1);
    double d = dist2(t);
    if (d < bestd) {
      bestd = d;
      best = t;
    }
    int k = 0;
    while (k < par.param_dim && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == par.param_dim) break;
  }
  for (int it = 0; it < 40; ++it) {
    Eigen::MatrixXd j = par.jacobian(best);
    Eigen::VectorXd r = par.at(best) - p;
    // truncated least-squares solve: directions with tiny singular values
    // would otherwise produce huge non-local jumps along the locus
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-8);
    Eigen::VectorXd step = svd.solve(r);
    best -= step;
    for (int k = 0; k < par.param_dim; ++k)
      best(k) = std::clamp(best(k), par.domain[k].first, par.domain[k].second);
    if (step.norm() < 1e-14) break;
  }
  return best;
}

inline double distance_to_parametrized(const Parametrization& par, const Eigen::VectorXd& p) {
  double d = (par.at(nearest_param(par, p)) - p).norm();
  if (par.limit_point) d = std::min(d, (*par.limit_point - p).norm());
  return d;
}

inline bool set_member(const SemialgebraicSet& set, const Eigen::VectorXd& p,
                       double tol = kDefaultMembershipTol) {
  if (p.size() != set.ambient_dim) return false;
  if (!p.allFinite()) return false;
  for (const auto& f : set.equations)
    if (std::abs(f.eval(p)) > tol) return false;
  for (const auto& q : set.inequalities)
    if (!q.satisfied(p, tol)) return false;
  if (set.parametrization && set.equations.empty() && set.inequalities.empty())
    return distance_to_parametrized(*set.parametrization, p) <= std::max(tol, 1e-7);
  return true;
}

// --- sampling points on the zero set of the equations ---

struct SetSampleOptions {
  double box_halfwidth = 1.5;
  double tol = kDefaultMembershipTol;
};

inline std::vector<Eigen::VectorXd> sample_on_set(const SemialgebraicSet& set, int count,
                                                  std::uint64_t seed,
                                                  const SetSampleOptions& opt = {},
                                                  int* rejections = nullptr) {
  std::vector<Eigen::VectorXd> out;
  Rng rng = Rng::stream(seed, {0x5e7 /* set sampling */});
  int rejected = 0;
  int budget = count * 20;
  auto eq_ptrs = field_ptrs(set.equations);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(set.ambient_dim, -opt.box_halfwidth);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(set.ambient_dim, opt.box_halfwidth);
  while (static_cast<int>(out.size()) < count && budget-- > 0) {
    if (set.parametrization && set.equations.empty()) {
      const auto& par = *set.parametrization;
      Eigen::VectorXd t(par.param_dim);
      for (int k = 0; k < par.param_dim; ++k)
        t(k) = rng.uniform(par.domain[k].first, par.domain[k].second);
      Eigen::VectorXd p = par.at(t);
      bool ok = true;
      for (const auto& q : set.inequalities) ok = ok && q.satisfied(p, opt.tol);
      if (ok)
        out.push_back(p);
      else
        ++rejected;
      continue;
    }
    Eigen::VectorXd x0 = rng.in_box(lo, hi);
    auto proj = newton_project(eq_ptrs, x0, {opt.tol, 60});
    if (!proj || proj->cwiseAbs().maxCoeff() > opt.box_halfwidth ||
        !set_member(set, *proj, opt.tol)) {
      ++rejected;
      continue;
    }
    out.push_back(*proj);
  }
  if (rejections) *rejections = rejected;
  return out;
}

}  // namespace strata
