#pragma once

// Rank-based decomposition of equation-defined sets into candidate strata,
// plus stratum sampling, tangent-plane estimation and converging point
// sequences. Regular strata are grouped by Jacobian rank; the locus where
// every first partial vanishes is refined by Hessian rank and split into
// connected components, and isolated deeper-degeneracy points (detected by
// minimizing the relevant Hessian singular value along the locus) become
// 0-dimensional strata.

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "strata/grassmann.hpp"
#include "strata/rng.hpp"
#include "strata/set.hpp"
#include "strata/stratum.hpp"

namespace strata {

struct DecomposeOptions {
  double box_halfwidth = 1.5;
  double tol_mem = kDefaultMembershipTol;
  double rank_tol = 1e-6;
  // component graph: edge radius multiplier on the mean NN distance, and the
  // tangent-agreement threshold that keeps crossing sheets apart
  double edge_factor = 3.0;
  double tangent_edge_tol = 0.45;
};

namespace detail {

inline Eigen::MatrixXd set_jacobian(const SemialgebraicSet& set, const Eigen::VectorXd& p) {
  Eigen::MatrixXd j(set.equations.size(), set.ambient_dim);
  for (std::size_t i = 0; i < set.equations.size(); ++i)
    j.row(static_cast<int>(i)) = set.equations[i].gradient(p).transpose();
  return j;
}

inline std::vector<ScalarField> singular_system(const SemialgebraicSet& set) {
  std::vector<ScalarField> sys = set.equations;
  for (const auto& f : set.equations)
    for (int j = 0; j < set.ambient_dim; ++j) sys.push_back(f.derivative(j));
  return sys;
}

inline double mean_nn_distance(const std::vector<Eigen::VectorXd>& pts) {
  if (pts.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) best = std::min(best, (pts[i] - pts[j]).norm());
    total += best;
  }
  return total / static_cast<double>(pts.size());
}

// largest nearest-neighbour distance: the radius needed to bridge the widest
// sampling gap of a connected piece
inline double max_nn_distance(const std::vector<Eigen::VectorXd>& pts) {
  if (pts.size() < 2) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) best = std::min(best, (pts[i] - pts[j]).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

// connected components of a proximity graph with an optional per-edge gate.
// The gate sees both endpoints and decides whether the chord is admissible
// (e.g. whether its midpoint lies back on the locus: two sheets that merely
// touch always have midpoints a distance d/2 off either sheet, so a midpoint
// gate separates them at every scale while bridging sampling gaps).
inline std::vector<std::vector<int>> components(
    const std::vector<Eigen::VectorXd>& pts, double edge_radius,
    const std::function<bool(int, int)>& gate = {}) {
  UnionFind uf(static_cast<int>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      // skip pairs already connected to keep the gate cost near-linear
      if (uf.find(static_cast<int>(i)) == uf.find(static_cast<int>(j))) continue;
      double d = (pts[i] - pts[j]).norm();
      if (d > edge_radius) continue;
      if (gate && !gate(static_cast<int>(i), static_cast<int>(j))) continue;
      uf.merge(static_cast<int>(i), static_cast<int>(j));
    }
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < pts.size(); ++i)
    groups[uf.find(static_cast<int>(i))].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

inline Eigen::MatrixXd cloud_matrix(const std::vector<Eigen::VectorXd>& pts,
                                    const std::vector<int>& idx) {
  Eigen::MatrixXd m(pts.empty() ? 0 : pts.front().size(), idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) m.col(static_cast<int>(k)) = pts[idx[k]];
  return m;
}

// r-th largest singular value (1-based) of the Hessian of eq at p
inline double hessian_sigma(const ScalarField& eq, const Eigen::VectorXd& p, int r) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(eq.hessian(p));
  if (r < 1 || r > svd.singularValues().size()) return 0.0;
  return svd.singularValues()(r - 1);
}

// Newton projection carried out in offset coordinates relative to a fixed
// base point, with a residual target relative to the starting residual.
// Keeping the offset exact (instead of subtracting two nearby points later)
// preserves directions at radii far below the cancellation floor, and the
// relative target keeps projected points on the set to a positional error
// proportional to the offset scale rather than a fixed absolute slack.
inline std::optional<Eigen::VectorXd> project_offset(
    const std::vector<const ScalarField*>& eqs, const Eigen::VectorXd& base,
    const Eigen::VectorXd& delta0, double tol_abs) {
  const int m = static_cast<int>(eqs.size());
  const int n = static_cast<int>(base.size());
  Eigen::VectorXd delta = delta0;
  auto residual = [&](const Eigen::VectorXd& d) {
    Eigen::VectorXd rr(m);
    Eigen::VectorXd p = base + d;
    for (int i = 0; i < m; ++i) rr(i) = eqs[i]->eval(p);
    return rr;
  };
  Eigen::VectorXd r = residual(delta);
  const double r0 = r.norm();
  if (r0 == 0.0) return delta;
  const double target = std::min(tol_abs, 1e-9 * r0);
  const double accept = std::min(tol_abs, 1e-7 * r0);
  for (int it = 0; it < 80 && r.norm() > target; ++it) {
    Eigen::MatrixXd j(m, n);
    Eigen::VectorXd p = base + delta;
    for (int i = 0; i < m; ++i) j.row(i) = eqs[i]->gradient(p).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-8);
    Eigen::VectorXd step = svd.solve(r);
    if (!step.allFinite() || step.norm() == 0.0) break;
    delta -= step;
    r = residual(delta);
  }
  if (r.norm() <= accept) return delta;
  return std::nullopt;
}

}  // namespace detail

struct DecomposeReport {
  int on_set_samples = 0;
  int rejections = 0;
  int singular_samples = 0;
};

inline Decomposition rank_decompose(std::shared_ptr<const SemialgebraicSet> set,
                                    bool use_hessian, int samples, std::uint64_t seed,
                                    const DecomposeOptions& opt = {},
                                    DecomposeReport* report = nullptr) {
  if (!set->has_equations())
    throw std::invalid_argument("rank_decompose: set has no equations");
  const int n = set->ambient_dim;
  Rng rng = Rng::stream(seed, {0xdec0});

  Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -opt.box_halfwidth);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, opt.box_halfwidth);
  auto eq_ptrs = field_ptrs(set->equations);
  std::vector<ScalarField> sing_sys = detail::singular_system(*set);
  auto sing_ptrs = field_ptrs(sing_sys);

  // 1. on-set sample cloud with Jacobian ranks
  std::vector<Eigen::VectorXd> regular;
  std::vector<int> jranks;
  int rejected = 0;
  for (int i = 0; i < samples; ++i) {
    auto p = newton_project(eq_ptrs, rng.in_box(lo, hi), {opt.tol_mem, 60});
    if (!p || p->cwiseAbs().maxCoeff() > opt.box_halfwidth || !set_member(*set, *p, opt.tol_mem)) {
      ++rejected;
      continue;
    }
    regular.push_back(*p);
    jranks.push_back(numeric_rank(detail::set_jacobian(*set, *p), opt.rank_tol));
  }
  if (regular.empty())
    throw std::runtime_error("rank_decompose: sampling failure, " + std::to_string(rejected) +
                             " rejections and no points on the set");

  // 2. samples on the locus where all first partials vanish
  std::vector<Eigen::VectorXd> singular;
  for (int i = 0; i < samples; ++i) {
    auto p = newton_project(sing_ptrs, rng.in_box(lo, hi), {opt.tol_mem, 80});
    if (!p || p->cwiseAbs().maxCoeff() > opt.box_halfwidth) continue;
    singular.push_back(*p);
  }
  // Newton projection from far starts clumps where the system is best
  // conditioned; spread the cloud along the locus with a tangent random walk
  if (!singular.empty()) {
    auto locus_tangent = [&](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
      Eigen::MatrixXd jac(sing_ptrs.size(), n);
      for (std::size_t k = 0; k < sing_ptrs.size(); ++k)
        jac.row(static_cast<int>(k)) = sing_ptrs[k]->gradient(x).transpose();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullV);
      int rank = numeric_rank(jac, opt.rank_tol);
      return svd.matrixV().rightCols(n - rank);
    };
    // chained walkers with direction persistence trace each curve end to end
    // instead of diffusing out of the initial clump
    const int walkers = 16;
    const int steps_per = std::max(10, 2 * samples / walkers);
    for (int wk = 0; wk < walkers; ++wk) {
      Eigen::VectorXd cur =
          singular[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(singular.size())))];
      Eigen::VectorXd prev = rng.unit_vector(n);
      for (int i = 0; i < steps_per; ++i) {
        Eigen::MatrixXd tan = locus_tangent(cur);
        if (tan.cols() == 0) break;
        Eigen::VectorXd dir = tan * (tan.transpose() * prev);
        if (dir.norm() < 1e-8) {
          Eigen::VectorXd w(tan.cols());
          for (int k = 0; k < w.size(); ++k) w(k) = rng.normal();
          dir = tan * w;
        }
        if (dir.norm() < 1e-12) break;
        dir.normalize();
        double step = opt.box_halfwidth * (0.01 + 0.04 * rng.uniform());
        auto cand = newton_project(sing_ptrs, cur + step * dir, {opt.tol_mem, 60});
        if (!cand || cand->cwiseAbs().maxCoeff() > opt.box_halfwidth ||
            (*cand - cur).norm() < 1e-12) {
          cur = singular[static_cast<std::size_t>(
              rng.uniform_int(static_cast<int>(singular.size())))];
          prev = rng.unit_vector(n);
          continue;
        }
        prev = (*cand - cur).normalized();
        cur = *cand;
        singular.push_back(cur);
      }
    }
  }
  // tight re-projection: near a deeper degeneracy a sliver of near-solutions
  // beside the true locus passes the default tolerance; polishing to 1e-12
  // snaps such samples onto the locus proper
  {
    std::vector<Eigen::VectorXd> polished;
    polished.reserve(singular.size());
    for (const auto& p : singular) {
      auto q = newton_project(sing_ptrs, p, {1e-12, 40});
      if (q && q->cwiseAbs().maxCoeff() <= opt.box_halfwidth) polished.push_back(*q);
    }
    singular.swap(polished);
  }
  if (report) {
    report->on_set_samples = static_cast<int>(regular.size());
    report->rejections = rejected;
    report->singular_samples = static_cast<int>(singular.size());
  }

  auto singular_residual = [&](const Eigen::VectorXd& p) {
    double r = 0.0;
    for (const auto* f : sing_ptrs) r = std::max(r, std::abs(f->eval(p)));
    return r;
  };

  // drop regular samples that actually sit on the singular locus
  {
    std::vector<Eigen::VectorXd> keep;
    std::vector<int> keep_ranks;
    for (std::size_t i = 0; i < regular.size(); ++i) {
      if (singular_residual(regular[i]) <= 1e-7) continue;
      // a numerically degenerate Jacobian means the sample is indistinguishable
      // from the singular locus at working precision
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(detail::set_jacobian(*set, regular[i]));
      if (svd.singularValues().size() == 0 || svd.singularValues()(0) < 1e-4) continue;
      keep.push_back(regular[i]);
      keep_ranks.push_back(jranks[i]);
    }
    regular.swap(keep);
    jranks.swap(keep_ranks);
  }

  // 3. Hessian-rank signature on the singular cloud
  std::map<std::vector<int>, std::vector<int>> hess_classes;
  for (std::size_t i = 0; i < singular.size(); ++i) {
    std::vector<int> sig;
    if (use_hessian)
      for (const auto& f : set->equations)
        sig.push_back(numeric_rank(f.hessian(singular[i]), opt.rank_tol));
    hess_classes[sig].push_back(static_cast<int>(i));
  }

  // 4. isolated deeper degeneracies: minimize the smallest active Hessian
  //    singular value along the singular locus
  std::vector<Eigen::VectorXd> point_strata;
  std::vector<double> point_strata_f;
  if (use_hessian && !singular.empty()) {
    for (const auto& [sig, members] : hess_classes) {
      for (std::size_t ei = 0; ei < set->equations.size(); ++ei) {
        int r = sig.empty() ? 0 : sig[ei];
        if (r < 1) continue;
        const ScalarField& eq = set->equations[ei];
        int starts = std::min<int>(10, static_cast<int>(members.size()));
        for (int s = 0; s < starts; ++s) {
          auto start = newton_project(sing_ptrs, singular[members[s * members.size() / starts]],
                                      {1e-12, 40});
          if (!start) continue;
          Eigen::VectorXd x = *start;
          double h = 0.25;
          double fx = detail::hessian_sigma(eq, x, r);
          for (int it = 0; it < 200 && h > 1e-10; ++it) {
            // walk along the locus tangent (null space of the singular system)
            Eigen::MatrixXd jac(sing_ptrs.size(), n);
            for (std::size_t k = 0; k < sing_ptrs.size(); ++k)
              jac.row(static_cast<int>(k)) = sing_ptrs[k]->gradient(x).transpose();
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullV);
            int rank = numeric_rank(jac, opt.rank_tol);
            int nullity = n - rank;
            if (nullity == 0) break;
            bool improved = false;
            for (int d = 0; d < nullity && !improved; ++d) {
              Eigen::VectorXd dir = svd.matrixV().col(rank + d);
              for (double sgn : {1.0, -1.0}) {
                // offset-space projection with a residual target relative to
                // the trial residual: at the default (absolute) tolerance a
                // sliver of near-solutions beside the true locus passes as
                // on-locus and derails the minimization, and near the deeper
                // degeneracy an absolute target leaves positional slack that
                // floors the descent
                auto delta = detail::project_offset(sing_ptrs, x, sgn * h * dir, 1e-12);
                if (!delta) continue;
                Eigen::VectorXd cand = x + *delta;
                double fc = detail::hessian_sigma(eq, cand, r);
                if (fc < fx) {
                  x = cand;
                  fx = fc;
                  improved = true;
                  break;
                }
              }
            }
            if (!improved) h *= 0.5;
          }
          // accept only a genuine rank drop on the locus
          if (numeric_rank(eq.hessian(x), opt.rank_tol) < r &&
              singular_residual(x) <= 1e-11 &&
              x.cwiseAbs().maxCoeff() <= opt.box_halfwidth) {
            bool duplicate = false;
            for (std::size_t q = 0; q < point_strata.size(); ++q)
              if ((point_strata[q] - x).norm() < 0.05 * opt.box_halfwidth) {
                duplicate = true;
                // several descents find the same degeneracy; keep the deepest
                if (fx < point_strata_f[q]) {
                  point_strata[q] = x;
                  point_strata_f[q] = fx;
                }
              }
            if (!duplicate) {
              point_strata.push_back(x);
              point_strata_f.push_back(fx);
            }
          }
        }
      }
    }
  }

  // 5. assemble strata
  Decomposition dec;
  dec.set = set;
  dec.provenance = Provenance::RankSplit;

  std::vector<Stratum> zero_dim;
  for (const auto& q : point_strata) {
    Stratum st;
    st.parent = set;
    st.dim = 0;
    st.point = q;
    st.signature = RankSignature{0, true, {}};
    if (use_hessian)
      for (const auto& f : set->equations)
        st.signature->hessian_ranks.push_back(numeric_rank(f.hessian(q), opt.rank_tol));
    st.cloud = Eigen::MatrixXd(n, 1);
    st.cloud.col(0) = q;
    zero_dim.push_back(std::move(st));
  }

  auto near_point_stratum = [&](const Eigen::VectorXd& p, double radius) {
    for (const auto& q : point_strata)
      if ((q - p).norm() < radius) return true;
    return false;
  };

  std::vector<Stratum> positive_dim;

  // singular-locus strata, split into connected components
  for (const auto& [sig, members] : hess_classes) {
    std::vector<Eigen::VectorXd> pts;
    for (int idx : members) pts.push_back(singular[idx]);
    double nn = detail::mean_nn_distance(pts);
    double edge = std::max({opt.edge_factor * nn, 0.1 * opt.box_halfwidth, 1e-6});
    double excl = std::max(4.0 * nn, 1e-3);
    std::vector<Eigen::VectorXd> kept;
    for (const auto& p : pts)
      if (!near_point_stratum(p, excl)) kept.push_back(p);
    if (kept.empty()) continue;
    // edge gate: the chord midpoint must sit back on the locus (separates
    // sheets that merely touch) and the segment must stay clear of the
    // exclusion balls around point strata (separates the halves of a locus
    // pinched at a deeper degeneracy)
    auto gate = [&](int i, int j) {
      const Eigen::VectorXd& a = kept[i];
      const Eigen::VectorXd& b = kept[j];
      double d = (a - b).norm();
      Eigen::VectorXd mid = 0.5 * (a + b);
      auto proj = newton_project(sing_ptrs, mid, {opt.tol_mem, 40});
      if (!proj || (*proj - mid).norm() > 0.25 * d) return false;
      for (const auto& q : point_strata) {
        // exact point-to-segment distance
        Eigen::VectorXd ab = b - a;
        double t = ab.squaredNorm() > 0 ? (q - a).dot(ab) / ab.squaredNorm() : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        if ((a + t * ab - q).norm() < excl) return false;
      }
      return true;
    };
    auto comps = detail::components(kept, edge, gate);
    for (auto& comp : comps) {
      if (comp.size() < 3 && kept.size() > 10) continue;  // stray samples
      Stratum st;
      st.parent = set;
      st.signature = RankSignature{0, true, sig};
      st.cloud = detail::cloud_matrix(kept, comp);
      // locus dimension from the singular-system Jacobian at a representative
      Eigen::VectorXd rep = st.cloud.col(static_cast<int>(comp.size() / 2));
      Eigen::MatrixXd jac(sing_ptrs.size(), n);
      for (std::size_t k = 0; k < sing_ptrs.size(); ++k)
        jac.row(static_cast<int>(k)) = sing_ptrs[k]->gradient(rep).transpose();
      st.dim = n - numeric_rank(jac, opt.rank_tol);
      positive_dim.push_back(std::move(st));
    }
  }

  // regular strata by Jacobian rank, tangent-aware component split
  std::map<int, std::vector<int>> rank_classes;
  for (std::size_t i = 0; i < regular.size(); ++i)
    rank_classes[jranks[i]].push_back(static_cast<int>(i));

  auto near_singular_cloud = [&](const Eigen::VectorXd& p, double radius) {
    for (const auto& q : singular)
      if ((q - p).norm() < radius) return true;
    return near_point_stratum(p, radius);
  };

  for (const auto& [rank, members] : rank_classes) {
    std::vector<Eigen::VectorXd> pts;
    for (int idx : members) pts.push_back(regular[idx]);
    double nn = detail::mean_nn_distance(pts);
    std::vector<Eigen::VectorXd> kept;
    for (const auto& p : pts)
      if (!near_singular_cloud(p, 2.0 * nn)) kept.push_back(p);
    if (kept.empty()) kept = pts;
    nn = detail::mean_nn_distance(kept);
    std::vector<Plane> tangents;
    tangents.reserve(kept.size());
    for (const auto& p : kept) {
      Eigen::MatrixXd jac = detail::set_jacobian(*set, p);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullV);
      tangents.push_back(Plane(n, svd.matrixV().rightCols(n - rank)));
    }
    // edge gate: neighbouring tangent planes must be close and the chord must
    // lie nearly inside both endpoint tangent planes (rejects short jumps
    // across the normal gap between distinct sheets)
    auto gate = [&](int i, int j) {
      if (plane_distance(tangents[i], tangents[j]) > opt.tangent_edge_tol) return false;
      double d = (kept[i] - kept[j]).norm();
      if (d <= 1e-12) return true;
      Eigen::VectorXd chord = (kept[i] - kept[j]) / d;
      auto normal_part = [&](const Plane& pl) {
        const Eigen::MatrixXd& b = pl.basis();
        return (chord - b * (b.transpose() * chord)).norm();
      };
      if (normal_part(tangents[i]) > 0.6 || normal_part(tangents[j]) > 0.6) return false;
      // recursive midpoint gate: between two sheets the midpoint of some
      // subdivided segment is ~half its length off either sheet, while within
      // one sheet every midpoint has only an O(len^2 * curvature) sagitta.
      // Subdivision catches bridges that run nearly parallel to both sheets,
      // where a single midpoint test is fooled by the long tangential run.
      std::function<bool(const Eigen::VectorXd&, const Eigen::VectorXd&, int)> path_ok =
          [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b, int depth) -> bool {
        double len = (a - b).norm();
        if (len < 1e-9) return true;
        Eigen::VectorXd mid = 0.5 * (a + b);
        auto proj = newton_project(eq_ptrs, mid, {opt.tol_mem, 40});
        if (!proj || (*proj - mid).norm() > 0.25 * len) return false;
        if (depth == 0) return true;
        return path_ok(a, *proj, depth - 1) && path_ok(*proj, b, depth - 1);
      };
      return path_ok(kept[i], kept[j], 4);
    };
    auto comps = detail::components(kept, std::max(opt.edge_factor * nn, 1e-6), gate);
    for (auto& comp : comps) {
      if (static_cast<int>(comp.size()) < std::max<int>(5, static_cast<int>(kept.size()) / 40) &&
          kept.size() > 20)
        continue;  // stray samples and undersampled slivers
      Stratum st;
      st.parent = set;
      st.signature = RankSignature{rank, false, {}};
      st.cloud = detail::cloud_matrix(kept, comp);
      st.dim = n - rank;
      positive_dim.push_back(std::move(st));
    }
  }

  // deterministic labels: sort by (dim desc, centroid lexicographic)
  auto centroid = [](const Stratum& st) -> Eigen::VectorXd { return st.cloud.rowwise().mean(); };
  std::sort(positive_dim.begin(), positive_dim.end(), [&](const Stratum& a, const Stratum& b) {
    if (a.dim != b.dim) return a.dim > b.dim;
    Eigen::VectorXd ca = centroid(a), cb = centroid(b);
    for (int i = 0; i < ca.size(); ++i)
      if (std::abs(ca(i) - cb(i)) > 1e-9) return ca(i) < cb(i);
    return false;
  });
  std::map<int, int> dim_counter;
  for (auto& st : positive_dim) {
    st.label = "d" + std::to_string(st.dim) + "_" + std::to_string(dim_counter[st.dim]++);
    dec.strata.push_back(std::move(st));
  }
  std::sort(zero_dim.begin(), zero_dim.end(), [](const Stratum& a, const Stratum& b) {
    for (int i = 0; i < a.point->size(); ++i)
      if (std::abs((*a.point)(i) - (*b.point)(i)) > 1e-9) return (*a.point)(i) < (*b.point)(i);
    return false;
  });
  for (auto& st : zero_dim) {
    st.label = "d0_" + std::to_string(dim_counter[0]++);
    dec.strata.push_back(std::move(st));
  }
  return dec;
}

// --- membership with decomposition context (nearest-cloud disambiguation) ---

inline RankSignature classify_point(const SemialgebraicSet& set, const Eigen::VectorXd& p,
                                    bool use_hessian, double rank_tol = 1e-6) {
  RankSignature sig;
  std::vector<ScalarField> sys = detail::singular_system(set);
  double sres = 0.0;
  for (const auto& f : sys) sres = std::max(sres, std::abs(f.eval(p)));
  sig.singular = sres <= 1e-7;
  sig.jacobian_rank = sig.singular ? 0 : numeric_rank(detail::set_jacobian(set, p), rank_tol);
  if (sig.singular && use_hessian)
    for (const auto& f : set.equations)
      sig.hessian_ranks.push_back(numeric_rank(f.hessian(p), rank_tol));
  return sig;
}

// index of the stratum containing p, or -1
inline int assign_stratum(const Decomposition& dec, const Eigen::VectorXd& p,
                          double tol = kDefaultMembershipTol) {
  if (!set_member(*dec.set, p, tol)) return -1;
  bool use_hessian = false;
  for (const auto& st : dec.strata)
    if (st.signature && !st.signature->hessian_ranks.empty()) use_hessian = true;
  RankSignature sig = classify_point(*dec.set, p, use_hessian);
  // exact 0-dimensional match first
  for (std::size_t i = 0; i < dec.strata.size(); ++i)
    if (dec.strata[i].point && (*dec.strata[i].point - p).norm() <= 1e-6)
      return static_cast<int>(i);
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dec.strata.size(); ++i) {
    const Stratum& st = dec.strata[i];
    if (st.point || !st.signature) continue;
    if (st.signature->singular != sig.singular) continue;
    if (!st.signature->singular && st.signature->jacobian_rank != sig.jacobian_rank) continue;
    if (st.signature->singular && st.signature->hessian_ranks != sig.hessian_ranks) continue;
    for (int c = 0; c < st.cloud.cols(); ++c) {
      double d = (st.cloud.col(c) - p).norm();
      if (d < best_dist) {
        best_dist = d;
        best = static_cast<int>(i);
      }
    }
  }
  return best;
}

// --- standalone stratum membership (declared / parametrized strata) ---

inline bool stratum_member(const Stratum& st, const Eigen::VectorXd& p,
                           double tol = kDefaultMembershipTol) {
  if (st.point) return (*st.point - p).norm() <= std::max(tol, 1e-9);
  if (st.param) {
    Parametrization no_limit = *st.param;
    no_limit.limit_point.reset();
    if (distance_to_parametrized(no_limit, p) > std::max(tol, 1e-7)) return false;
    if (st.membership_set)
      for (const auto& q : st.membership_set->inequalities)
        if (!q.satisfied(p, tol)) return false;
    return true;
  }
  if (st.membership_set) return set_member(*st.membership_set, p, tol);
  if (st.parent && st.signature) {
    if (!set_member(*st.parent, p, tol)) return false;
    std::vector<ScalarField> storage;
    auto eqs = active_equations(st, storage);
    for (const auto* f : eqs)
      if (std::abs(f->eval(p)) > std::max(tol, 1e-7)) return false;
    return true;
  }
  return false;
}

// --- stratum sampling ---

inline std::vector<Eigen::VectorXd> sample_stratum(const Stratum& st,
                                                   const Eigen::VectorXd& anchor, int count,
                                                   double radius, std::uint64_t seed,
                                                   double tol = kDefaultMembershipTol,
                                                   bool* complete = nullptr) {
  if (!stratum_member(st, anchor, std::max(tol, 1e-7)))
    throw std::invalid_argument("sample_stratum: anchor fails stratum membership");
  std::vector<Eigen::VectorXd> out;
  Rng rng = Rng::stream(seed, {0x5a11});
  if (st.point || st.dim == 0) {
    for (int i = 0; i < count; ++i) out.push_back(st.point ? *st.point : anchor);
    if (complete) *complete = true;
    return out;
  }
  if (st.param) {
    const auto& par = *st.param;
    Eigen::VectorXd t0 = nearest_param(par, anchor);
    // largest parameter offset keeping points inside the radius
    double h = 1.0;
    while (h > 1e-12) {
      Eigen::VectorXd tp = t0;
      tp(0) = std::clamp(t0(0) + h, par.domain[0].first, par.domain[0].second);
      Eigen::VectorXd tm = t0;
      tm(0) = std::clamp(t0(0) - h, par.domain[0].first, par.domain[0].second);
      if ((par.at(tp) - anchor).norm() <= radius && (par.at(tm) - anchor).norm() <= radius)
        break;
      h *= 0.5;
    }
    int budget = count * 50;
    while (static_cast<int>(out.size()) < count && budget-- > 0) {
      Eigen::VectorXd t = t0;
      for (int k = 0; k < par.param_dim; ++k)
        t(k) = std::clamp(t0(k) + rng.uniform(-h, h), par.domain[k].first, par.domain[k].second);
      Eigen::VectorXd p = par.at(t);
      if ((p - anchor).norm() <= radius && stratum_member(st, p, tol)) out.push_back(p);
    }
    if (complete) *complete = static_cast<int>(out.size()) == count;
    return out;
  }
  std::vector<ScalarField> storage;
  auto eqs = active_equations(st, storage);
  int n = static_cast<int>(anchor.size());
  int budget = count * 50;
  while (static_cast<int>(out.size()) < count && budget-- > 0) {
    double r = radius * std::pow(rng.uniform(), 1.0 / std::max(1, st.dim));
    Eigen::VectorXd p0 = anchor + r * rng.unit_vector(n);
    auto p = newton_project(eqs, p0, {tol, 60});
    if (!p || (*p - anchor).norm() > radius) continue;
    if (!stratum_member(st, *p, tol)) continue;
    out.push_back(*p);
  }
  if (complete) *complete = static_cast<int>(out.size()) == count;
  return out;
}

// --- tangent planes ---

class tangent_estimation_error : public std::runtime_error {
 public:
  tangent_estimation_error(const std::string& what, Eigen::VectorXd spectrum)
      : std::runtime_error(what), spectrum(std::move(spectrum)) {}
  Eigen::VectorXd spectrum;
};

inline Plane tangent_plane(const Stratum& st, const Eigen::VectorXd& p,
                           double tol = kDefaultMembershipTol) {
  if (!stratum_member(st, p, std::max(tol, 1e-7)))
    throw std::invalid_argument("tangent_plane: point fails stratum membership");
  int n = static_cast<int>(p.size());
  if (st.point || st.dim == 0) return Plane::zero(n);
  if (st.param) {
    Eigen::VectorXd t = nearest_param(*st.param, p);
    return span_of(st.param->jacobian(t));
  }
  // null space of the active-equation Jacobian at regular points
  std::vector<ScalarField> storage;
  auto eqs = active_equations(st, storage);
  if (!eqs.empty()) {
    Eigen::MatrixXd jac(eqs.size(), n);
    for (std::size_t i = 0; i < eqs.size(); ++i)
      jac.row(static_cast<int>(i)) = eqs[i]->gradient(p).transpose();
    int rank = numeric_rank(jac);
    if (n - rank == st.dim || st.dim < 0) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullV);
      return Plane(n, svd.matrixV().rightCols(n - rank));
    }
  }
  // sample-PCA fallback at rank-degenerate points
  auto pts = sample_stratum(st, p, 60, 1e-3, 0x9cA, tol);
  if (static_cast<int>(pts.size()) < 2 * st.dim + 2)
    throw tangent_estimation_error("tangent_plane: not enough local samples",
                                   Eigen::VectorXd());
  Eigen::MatrixXd centered(n, pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) centered.col(static_cast<int>(i)) = pts[i] - p;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  Eigen::VectorXd sv = svd.singularValues();
  if (st.dim < sv.size() && sv(st.dim) > 0.2 * sv(st.dim - 1))
    throw tangent_estimation_error("tangent_plane: no PCA spectral gap at stratum dimension",
                                   sv);
  return Plane(n, svd.matrixU().leftCols(st.dim));
}

// --- converging point sequences with attached tangent planes ---

struct PointSequence {
  Eigen::VectorXd base;
  std::vector<Eigen::VectorXd> points;
  std::vector<Eigen::VectorXd> offsets;  // points[i] - base, kept exactly
  PlaneSequence planes;
};

struct SequenceOptions {
  int count = 24;
  double rate = 0.5;
  double initial_radius = 0.5;
  double tol = kDefaultMembershipTol;
};

class sequence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline PointSequence make_sequence(const Stratum& st, const Eigen::VectorXd& x,
                                   std::uint64_t seed, const SequenceOptions& opt = {}) {
  PointSequence seq;
  seq.base = x;
  Rng rng = Rng::stream(seed, {0x5e9});
  int n = static_cast<int>(x.size());

  if (st.point || st.dim == 0) {
    Eigen::VectorXd p = st.point ? *st.point : x;
    if ((p - x).norm() > 1e-7) throw sequence_error("x not in closure of stratum");
    for (int i = 0; i < opt.count; ++i) {
      seq.points.push_back(p);
      // the representative sits within membership tolerance of x; treat the
      // constant sequence as exactly at x so deep secants are not polluted
      seq.offsets.push_back(Eigen::VectorXd::Zero(n));
      seq.planes.push_back(Plane::zero(n));
    }
    return seq;
  }

  if (st.param && st.param->period > 0 && st.param->limit_point) {
    // periodic parameter schedule toward the limit point (the spiral rule
    // theta_n = theta_0 + n * period)
    const auto& par = *st.param;
    if ((*par.limit_point - x).norm() > 1e-7)
      throw sequence_error("x not in closure of stratum");
    double t0 = par.domain[0].first + rng.uniform() * par.period;
    for (int i = 0; i < opt.count; ++i) {
      double t = t0 + i * par.period;
      if (t > par.domain[0].second) throw sequence_error("parameter domain exhausted");
      Eigen::VectorXd tv(1);
      tv(0) = t;
      seq.points.push_back(par.at(tv));
      seq.offsets.push_back(seq.points.back() - x);
      seq.planes.push_back(span_of(par.jacobian(tv)));
    }
    return seq;
  }

  std::vector<ScalarField> storage;
  auto eqs = active_equations(st, storage);
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::VectorXd dir = rng.unit_vector(n);
    std::vector<Eigen::VectorXd> pts;
    std::vector<Eigen::VectorXd> offs;
    PlaneSequence planes;
    bool ok = true;
    for (int i = 0; i < opt.count && ok; ++i) {
      double r = opt.initial_radius * std::pow(opt.rate, i);
      auto delta = detail::project_offset(eqs, x, r * dir, opt.tol);
      double d = delta ? delta->norm() : 0.0;
      Eigen::VectorXd p = delta ? Eigen::VectorXd(x + *delta) : x;
      if (!delta || d > 10 * r || d < 0.05 * r || !stratum_member(st, p, opt.tol)) {
        ok = false;
        break;
      }
      pts.push_back(p);
      offs.push_back(*delta);
      try {
        planes.push_back(tangent_plane(st, p, opt.tol));
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (ok) {
      seq.points = std::move(pts);
      seq.offsets = std::move(offs);
      seq.planes = std::move(planes);
      return seq;
    }
  }
  throw sequence_error("x not in closure of stratum (no converging sample sequence found)");
}

}  // namespace strata
