#pragma once

// Multivariate polynomial expansion of expression trees, used for exact
// tangency certificates and for turning coefficient vectors back into
// expressions. Non-polynomial subtrees (transcendental functions, division
// by a non-constant) simply report as inexpandable.

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "strata/expr.hpp"

namespace strata {

using Monomial = std::vector<int>;               // exponent per variable
using PolyMap = std::map<Monomial, double>;      // monomial -> coefficient

namespace poly {

inline void add_term(PolyMap& p, const Monomial& m, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = p.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) p.erase(it);
  }
}

inline PolyMap add(const PolyMap& a, const PolyMap& b) {
  PolyMap r = a;
  for (const auto& [m, c] : b) add_term(r, m, c);
  return r;
}

inline PolyMap scale(const PolyMap& a, double s) {
  PolyMap r;
  for (const auto& [m, c] : a) add_term(r, m, c * s);
  return r;
}

inline PolyMap mul(const PolyMap& a, const PolyMap& b) {
  PolyMap r;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b) {
      Monomial m(ma.size());
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = ma[i] + mb[i];
      add_term(r, m, ca * cb);
    }
  return r;
}

inline std::optional<PolyMap> expand(const ExprPtr& e, int nvars) {
  switch (e->op) {
    case ExprOp::Constant: {
      PolyMap p;
      add_term(p, Monomial(nvars, 0), e->value);
      return p;
    }
    case ExprOp::Variable: {
      PolyMap p;
      Monomial m(nvars, 0);
      m[e->var] = 1;
      add_term(p, m, 1.0);
      return p;
    }
    case ExprOp::Add: {
      auto a = expand(e->a, nvars), b = expand(e->b, nvars);
      if (!a || !b) return std::nullopt;
      return add(*a, *b);
    }
    case ExprOp::Sub: {
      auto a = expand(e->a, nvars), b = expand(e->b, nvars);
      if (!a || !b) return std::nullopt;
      return add(*a, scale(*b, -1.0));
    }
    case ExprOp::Mul: {
      auto a = expand(e->a, nvars), b = expand(e->b, nvars);
      if (!a || !b) return std::nullopt;
      return mul(*a, *b);
    }
    case ExprOp::Div: {
      auto a = expand(e->a, nvars), b = expand(e->b, nvars);
      if (!a || !b) return std::nullopt;
      if (b->size() == 1 && b->begin()->first == Monomial(nvars, 0) &&
          b->begin()->second != 0.0)
        return scale(*a, 1.0 / b->begin()->second);
      return std::nullopt;
    }
    case ExprOp::Pow: {
      if (e->exponent < 0) return std::nullopt;
      auto a = expand(e->a, nvars);
      if (!a) return std::nullopt;
      PolyMap r;
      add_term(r, Monomial(nvars, 0), 1.0);
      for (int k = 0; k < e->exponent; ++k) r = mul(r, *a);
      return r;
    }
    case ExprOp::Neg: {
      auto a = expand(e->a, nvars);
      if (!a) return std::nullopt;
      return scale(*a, -1.0);
    }
    default:
      return std::nullopt;
  }
}

inline ExprPtr to_expr(const PolyMap& p) {
  if (p.empty()) return make_const(0);
  ExprPtr sum;
  for (const auto& [m, c] : p) {
    ExprPtr term = make_const(c);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i] > 0) term = make_mul(term, make_pow(make_var(static_cast<int>(i)), m[i]));
    sum = sum ? make_add(sum, term) : term;
  }
  return sum;
}

// All exponent tuples with total degree <= deg, in a fixed deterministic order.
inline std::vector<Monomial> monomials_up_to(int nvars, int deg) {
  std::vector<Monomial> out;
  Monomial m(nvars, 0);
  auto rec = [&](auto&& self, int var, int remaining) -> void {
    if (var == nvars) {
      out.push_back(m);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      m[var] = k;
      self(self, var + 1, remaining - k);
    }
    m[var] = 0;
  };
  rec(rec, 0, deg);
  std::sort(out.begin(), out.end(), [](const Monomial& a, const Monomial& b) {
    int da = 0, db = 0;
    for (int v : a) da += v;
    for (int v : b) db += v;
    if (da != db) return da < db;
    return a < b;
  });
  return out;
}

inline PolyMap from_monomial(const Monomial& m, double c = 1.0) {
  PolyMap p;
  p[m] = c;
  return p;
}

inline int degree(const PolyMap& p) {
  int d = 0;
  for (const auto& [m, c] : p) {
    int t = 0;
    for (int v : m) t += v;
    d = std::max(d, t);
  }
  return d;
}

inline PolyMap diff(const PolyMap& p, int var) {
  PolyMap out;
  for (const auto& [m, c] : p) {
    if (m[var] == 0) continue;
    Monomial d = m;
    d[var] -= 1;
    add_term(out, d, c * m[var]);
  }
  return out;
}

inline double eval_monomial(const Monomial& m, const Eigen::VectorXd& x) {
  double v = 1.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (int k = 0; k < m[i]; ++k) v *= x(static_cast<int>(i));
  return v;
}

}  // namespace poly
}  // namespace strata
