#pragma once

// Strata and decompositions. A stratum either carries its own defining
// equations/inequalities (declared), a parametrization, or a rank signature
// plus a representative sample cloud produced by rank_decompose.

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "strata/grassmann.hpp"
#include "strata/set.hpp"

namespace strata {

inline int numeric_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-6) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  if (smax == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > rel_tol * smax) ++r;
  return r;
}

enum class Provenance { RankSplit, UserDeclared, OrbitEstimated };

struct RankSignature {
  int jacobian_rank = -1;
  bool singular = false;            // on the all-partials-vanish locus
  std::vector<int> hessian_ranks;   // per equation, when refined

  bool operator==(const RankSignature&) const = default;
};

struct Stratum {
  std::string label;
  int dim = -1;
  std::shared_ptr<const SemialgebraicSet> parent;

  // declared strata: own membership set (equations pin signs to =, the
  // inequalities to > / < etc.)
  std::optional<SemialgebraicSet> membership_set;

  // parametrized strata (the spiral arm)
  std::optional<Parametrization> param;

  // rank-derived strata
  std::optional<RankSignature> signature;
  Eigen::MatrixXd cloud;  // ambient_dim x n_samples, representative points

  // 0-dimensional strata
  std::optional<Eigen::VectorXd> point;

  int ambient_dim() const { return parent ? parent->ambient_dim : membership_dim(); }

 private:
  int membership_dim() const {
    if (membership_set) return membership_set->ambient_dim;
    if (param) return static_cast<int>(param->components.size());
    if (point) return static_cast<int>(point->size());
    return 0;
  }
};

struct Decomposition {
  std::shared_ptr<const SemialgebraicSet> set;
  std::vector<Stratum> strata;
  Provenance provenance = Provenance::RankSplit;

  const Stratum* find(const std::string& label) const {
    for (const auto& s : strata)
      if (s.label == label) return &s;
    return nullptr;
  }
};

// The equations a sampler must satisfy for a stratum: declared equations,
// or the parent equations (augmented with every first partial for strata of
// the singular locus).
inline std::vector<const ScalarField*> active_equations(const Stratum& st,
                                                        std::vector<ScalarField>& storage) {
  std::vector<const ScalarField*> eqs;
  if (st.membership_set) {
    for (const auto& f : st.membership_set->equations) eqs.push_back(&f);
    return eqs;
  }
  if (!st.parent) return eqs;
  for (const auto& f : st.parent->equations) eqs.push_back(&f);
  if (st.signature && st.signature->singular) {
    for (const auto& f : st.parent->equations)
      for (int j = 0; j < st.parent->ambient_dim; ++j) storage.push_back(f.derivative(j));
    for (const auto& f : storage) eqs.push_back(&f);
  }
  return eqs;
}

}  // namespace strata
