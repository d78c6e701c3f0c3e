#pragma once

// Orchestration shared by the CLI and the test suite: run full analyses on a
// scene (stratify / whitney / cone / orbit / quotient), plus the corpus
// drivers that additionally assert each example's expected-result fixtures.

#include <algorithm>
#include <cstdlib>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "strata/checks.hpp"
#include "strata/corpus.hpp"
#include "strata/flows.hpp"
#include "strata/quotient.hpp"
#include "strata/scene.hpp"

namespace strata {

struct DriverConfig {
  std::uint64_t seed = 7;
  double tol_mem = 1e-9;
  double tol_limit = 1e-6;
  double tol_verdict = 1e-3;
  int samples = 1200;
  int sequences = 8;
  int words = 1500;
  int degree = 2;
  std::string csv_path;

  json to_json() const {
    json j;
    j["seed"] = seed;
    j["tol_mem"] = tol_mem;
    j["tol_limit"] = tol_limit;
    j["tol_verdict"] = tol_verdict;
    j["samples"] = samples;
    j["sequences"] = sequences;
    j["words"] = words;
    j["degree"] = degree;
    return j;
  }

  WhitneyOptions whitney_options(int seq_count = 44) const {
    WhitneyOptions w;
    w.sequences = std::max(8, sequences);
    w.tol_verdict = tol_verdict;
    w.tol_limit = tol_limit;
    w.seq.count = seq_count;
    w.seq.tol = tol_mem;
    return w;
  }
};

inline int worker_count() {
  if (const char* env = std::getenv("STRATA_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

// run jobs in parallel (bounded by STRATA_THREADS), results kept in order
template <typename Job>
inline std::vector<CheckReport> run_jobs(const std::vector<Job>& jobs) {
  std::vector<CheckReport> out(jobs.size());
  int workers = std::min<int>(worker_count(), static_cast<int>(jobs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = jobs[i]();
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> pool;
  for (int w = 0; w < workers; ++w)
    pool.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1))
        out[i] = jobs[i]();
    }));
  for (auto& f : pool) f.get();
  return out;
}

// --- stratify ---

inline json strata_summary_json(const Decomposition& dec) {
  json arr = json::array();
  for (const auto& st : dec.strata) {
    json s;
    s["label"] = st.label;
    s["dim"] = st.dim;
    s["samples"] = st.cloud.cols();
    if (st.signature) {
      s["singular"] = st.signature->singular;
      s["jacobian_rank"] = st.signature->jacobian_rank;
      s["hessian_ranks"] = st.signature->hessian_ranks;
    }
    if (st.point) s["point"] = vector_to_json(*st.point);
    arr.push_back(std::move(s));
  }
  return arr;
}

inline Decomposition run_stratify(const Scene& scene, const DriverConfig& cfg,
                                  ReportBuilder& rb, bool use_hessian = true) {
  DecomposeOptions opt;
  opt.tol_mem = cfg.tol_mem;
  DecomposeReport dr;
  Decomposition dec = rank_decompose(scene.set, use_hessian, cfg.samples, cfg.seed, opt, &dr);
  json rec;
  rec["check"] = "stratify";
  rec["pair"] = scene.name;
  rec["strata"] = strata_summary_json(dec);
  rec["on_set_samples"] = dr.on_set_samples;
  rec["rejections"] = dr.rejections;
  rb.add(std::move(rec));

  FrontierOptions fo;
  fo.tol_mem = cfg.tol_mem;
  for (auto& rep : check_frontier(dec, mix_seed(cfg.seed, 0xf0), fo)) rb.add(rep);
  for (const auto& st : dec.strata)
    rb.add(check_local_closedness(st, dec, mix_seed(cfg.seed, 0x1c), fo));
  return dec;
}

// --- whitney ---

inline void run_whitney_pair(const Stratum& m, const Stratum& mp, const Eigen::VectorXd& x,
                             const DriverConfig& cfg, ReportBuilder& rb, int seq_count = 44) {
  auto opt = cfg.whitney_options(seq_count);
  CheckReport a = whitney_A(m, mp, x, mix_seed(cfg.seed, 0xa), opt);
  CheckReport b = whitney_B(m, mp, x, mix_seed(cfg.seed, 0xb), opt);
  rb.add(a, opt.sequences);
  rb.add(b, opt.sequences);
  if (!cfg.csv_path.empty()) {
    // plane dump of one tangent sequence for external plotting
    try {
      PointSequence seq = make_sequence(m, x, mix_seed(cfg.seed, 0xc5a), opt.seq);
      save_planes_csv(seq.planes, cfg.csv_path);
    } catch (const std::exception&) {
    }
  }
}

// --- cone ---

inline json run_cone(const Scene& scene, const Eigen::VectorXd& x,
                     const std::vector<int>& project_out, int expected_clusters,
                     const DriverConfig& cfg, ReportBuilder& rb) {
  ConeOptions opt;
  opt.project_out = project_out;
  opt.tol_mem = cfg.tol_mem;
  ConeReport cone = tangent_cone_lines(*scene.set, x, mix_seed(cfg.seed, 0xce), opt);
  json rec;
  rec["check"] = "cone";
  rec["pair"] = scene.name;
  rec["point"] = vector_to_json(x);
  json lines = json::array();
  for (const auto& l : cone.lines) lines.push_back(vector_to_json(l.basis().col(0)));
  rec["lines"] = lines;
  rec["cluster_sizes"] = cone.cluster_sizes;
  rec["directions"] = cone.directions;
  rec["stable"] = cone.stable;
  if (expected_clusters > 0) {
    rec["expected_clusters"] = expected_clusters;
    rec["verdict"] = static_cast<int>(cone.lines.size()) == expected_clusters && cone.stable
                         ? "holds"
                         : "fails";
  }
  if (static_cast<int>(cone.lines.size()) == 4) {
    try {
      auto sorted = sort_lines_by_angle(cone.lines, Eigen::VectorXd::Unit(x.size(), 0),
                                        Eigen::VectorXd::Unit(x.size(), 1));
      rec["cross_ratio"] = cross_ratio(sorted);
    } catch (const std::exception& e) {
      rec["cross_ratio_error"] = e.what();
    }
  }
  rb.add(rec);
  return rec;
}

// --- orbit ---

struct OrbitRun {
  std::vector<VectorField> basis;
  OrbitEstimate estimate;
};

inline json orbit_estimate_json(const OrbitEstimate& est) {
  json classes = json::array();
  for (const auto& cls : est.classes) {
    json c;
    c["size"] = cls.members.size();
    c["representative"] = cls.representative;
    c["dim"] = cls.dim;
    classes.push_back(std::move(c));
  }
  json j;
  j["classes"] = classes;
  j["link_radius"] = est.link_radius;
  j["words"] = est.words_used;
  j["escapes"] = est.escapes;
  return j;
}

inline OrbitRun run_orbit(const Scene& scene, const std::vector<Eigen::VectorXd>& cloud,
                          const DriverConfig& cfg, ReportBuilder& rb) {
  OrbitRun run;
  FieldBasisOptions fb;
  fb.seed = cfg.seed;
  fb.tol_mem = cfg.tol_mem;
  run.basis = tangent_field_basis(*scene.set, cfg.degree, fb);
  json rec;
  rec["check"] = "orbit";
  rec["pair"] = scene.name;
  rec["basis_size"] = run.basis.size();
  rec["degree"] = cfg.degree;
  json defects = json::array();
  for (const auto& x : run.basis) {
    auto t = check_tangency(x, *scene.set, 200, mix_seed(cfg.seed, 0x7a), cfg.tol_mem);
    json d;
    d["symbolic"] = t.symbolic;
    d["max_defect"] = t.max_defect;
    defects.push_back(std::move(d));
  }
  rec["tangency"] = defects;
  ReachOptions ro;
  ro.words = cfg.words;
  ro.flow.set = scene.set.get();
  ro.flow.tol_mem = cfg.tol_mem;
  run.estimate = reach_partition(run.basis, cloud, mix_seed(cfg.seed, 0x0e), ro);
  rec["reach"] = orbit_estimate_json(run.estimate);
  rb.add(std::move(rec));
  if (!cfg.csv_path.empty()) {
    std::ofstream out(cfg.csv_path);
    out << "index,class\n";
    for (std::size_t c = 0; c < run.estimate.classes.size(); ++c)
      for (int m : run.estimate.classes[c].members) out << m << "," << c << "\n";
  }
  return run;
}

// --- quotient ---

inline json run_quotient(const Scene& scene, const DriverConfig& cfg, ReportBuilder& rb,
                         int n_seeds = 4, double link_radius = 0.05) {
  if (!scene.action || !scene.hmap)
    throw scene_error("quotient analysis needs group_action and hilbert_generators");
  if (scene.cloud.empty()) throw scene_error("quotient analysis needs a scene cloud");
  double hdef = hilbert_invariance_defect(*scene.hmap, *scene.action, 100, cfg.seed);
  json all;
  for (int k = 0; k < n_seeds; ++k) {
    Theorem4Options opt;
    opt.words = cfg.words;
    opt.link_radius = link_radius;
    Theorem4Report rep =
        theorem4_check(*scene.action, *scene.hmap, cfg.degree, scene.cloud,
                       mix_seed(cfg.seed, 0x74 + k), opt);
    json rec;
    rec["check"] = "theorem4";
    rec["pair"] = scene.name + "/seed" + std::to_string(k);
    rec["verdict"] = rep.agree ? "holds" : "fails";
    rec["type_pieces"] = rep.types.pieces.size();
    rec["reach_classes"] = rep.reach.classes.size();
    rec["pushed_fields"] = rep.pushed.size();
    rec["field_invariance_defect"] = rep.field_invariance_defect;
    rec["hilbert_invariance_defect"] = hdef;
    json w = json::array();
    for (const auto& [i, j] : rep.witnesses) w.push_back(json::array({i, j}));
    rec["witnesses"] = w;
    rb.add(std::move(rec));
  }
  return all;
}

// ====================== corpus drivers with fixtures ======================

namespace detail {

inline void add_fixture(ReportBuilder& rb, const std::string& name, bool ok,
                        const std::string& detail_note) {
  json rec;
  rec["check"] = "fixture";
  rec["pair"] = name;
  rec["verdict"] = ok ? "holds" : "fails";
  rec["witnesses"] = json::array({detail_note});
  rb.add(std::move(rec));
}

// the two half-axis strata carry an explicit membership set so sequence
// generation can project straight onto {x = 0, y = 0, +-z > 0}
inline void refine_cusp_axes(Decomposition& dec) {
  for (auto& st : dec.strata) {
    if (st.dim != 1 || !st.signature || !st.signature->singular) continue;
    double zsign = st.cloud.row(2).mean() >= 0 ? 1.0 : -1.0;
    SemialgebraicSet mem;
    mem.ambient_dim = 3;
    mem.equations.push_back(parse_expr("x", 3));
    mem.equations.push_back(parse_expr("y", 3));
    mem.inequalities.push_back(
        Inequality{parse_expr(zsign > 0 ? "z" : "0 - z", 3), Rel::GT});
    st.membership_set = std::move(mem);
  }
}

inline bool closure_reaches(const Stratum& m, const Eigen::VectorXd& x, std::uint64_t seed) {
  FrontierOptions fo;
  Rng rng = Rng::stream(seed, {0xc10});
  return approach_distance(m, x, rng, fo) <= fo.tol_attain;
}

}  // namespace detail

inline void run_corpus_cusp(const DriverConfig& cfg, ReportBuilder& rb) {
  Scene scene = load_example("cusp").load();
  Decomposition dec = run_stratify(scene, cfg, rb);
  detail::refine_cusp_axes(dec);

  // fixture: dims {2 x k, 1, 1, 0}; half-axes on +-z; origin point stratum
  int d2 = 0, d1 = 0, d0 = 0;
  bool axes_ok = true, origin_ok = false;
  for (const auto& st : dec.strata) {
    if (st.dim == 2) ++d2;
    if (st.dim == 1) {
      ++d1;
      double zmin = st.cloud.row(2).minCoeff(), zmax = st.cloud.row(2).maxCoeff();
      if (zmin * zmax < 0) axes_ok = false;  // must not straddle the origin
      if (st.cloud.row(0).cwiseAbs().maxCoeff() > 1e-4 ||
          st.cloud.row(1).cwiseAbs().maxCoeff() > 1e-4)
        axes_ok = false;
      if (!st.signature || st.signature->hessian_ranks != std::vector<int>{2}) axes_ok = false;
    }
    if (st.dim == 0 && st.point) {
      ++d0;
      if (st.point->norm() <= 1e-4 && st.signature &&
          st.signature->hessian_ranks == std::vector<int>{1})
        origin_ok = true;
    }
  }
  detail::add_fixture(rb, "cusp/strata", d2 >= 1 && d1 == 2 && d0 == 1 && axes_ok && origin_ok,
                      "dims 2x" + std::to_string(d2) + ",1x" + std::to_string(d1) + ",0x" +
                          std::to_string(d0) + (axes_ok ? "" : ", axis gates failed") +
                          (origin_ok ? "" : ", origin gates failed"));

  // Whitney pairs incident at (0,0,+-1) and at the origin
  std::vector<Eigen::VectorXd> points;
  Eigen::VectorXd p(3);
  p << 0, 0, 1;
  points.push_back(p);
  p << 0, 0, -1;
  points.push_back(p);
  p << 0, 0, 0;
  points.push_back(p);
  for (const auto& x : points) {
    for (const auto& mp : dec.strata) {
      if (!stratum_member(mp, x, 1e-7)) continue;
      for (const auto& m : dec.strata) {
        if (m.label == mp.label || m.dim <= mp.dim) continue;
        if (!detail::closure_reaches(m, x, mix_seed(cfg.seed, 0xcc))) continue;
        // sequences toward the origin converge at a square-root rate along the
        // cusp branches, so the trailing half needs roughly twice the depth
        run_whitney_pair(m, mp, x, cfg, rb, mp.dim == 0 ? 90 : 44);
      }
    }
  }

  // orbit fixtures: Euler field in the deg-1 basis; exact flow; reach classes
  DriverConfig ocfg = cfg;
  ocfg.degree = 1;
  // cloud: axis points plus surface points kept clear of the axis
  std::vector<Eigen::VectorXd> cloud;
  std::vector<std::string> cloud_label;
  for (double z : {0.3, 0.5, 0.7, 0.9, 1.1, -0.3, -0.5, -0.7, -0.9, -1.1}) {
    Eigen::VectorXd q(3);
    q << 0, 0, z;
    cloud.push_back(q);
    cloud_label.push_back(z > 0 ? "axis+" : "axis-");
  }
  {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(3);
    cloud.push_back(q);
    cloud_label.push_back("origin");
  }
  for (const auto& st : dec.strata) {
    if (st.dim != 2) continue;
    int taken = 0;
    for (int c = 0; c < st.cloud.cols() && taken < 60; ++c) {
      Eigen::VectorXd q = st.cloud.col(c);
      if (q.head(2).norm() < 0.35) continue;  // stay clear of the axis
      cloud.push_back(q);
      cloud_label.push_back(st.label);
      ++taken;
    }
  }
  OrbitRun orun = run_orbit(scene, cloud, ocfg, rb);

  // Euler field membership in the span of the degree-1 basis
  bool euler_ok = false;
  {
    auto mons = poly::monomials_up_to(3, 1);
    auto coeffs_of = [&](const VectorField& x) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(3 * static_cast<int>(mons.size()));
      for (int j = 0; j < 3; ++j) {
        auto pm = poly::expand(x.components[j].root(), 3);
        if (!pm) return c;
        for (const auto& [m, v] : *pm) {
          auto it = std::find(mons.begin(), mons.end(), m);
          if (it != mons.end())
            c(j * static_cast<int>(mons.size()) + static_cast<int>(it - mons.begin())) = v;
        }
      }
      return c;
    };
    VectorField euler;
    for (const char* comp : {"2*x", "3*y", "z"}) euler.components.push_back(parse_expr(comp, 3));
    Eigen::VectorXd e = coeffs_of(euler);
    if (!orun.basis.empty()) {
      Eigen::MatrixXd B(e.size(), orun.basis.size());
      for (std::size_t k = 0; k < orun.basis.size(); ++k)
        B.col(static_cast<int>(k)) = coeffs_of(orun.basis[k]);
      Eigen::VectorXd sol = B.colPivHouseholderQr().solve(e);
      euler_ok = (B * sol - e).norm() <= 1e-9 * e.norm();
    }
    detail::add_fixture(rb, "cusp/euler_in_basis", euler_ok,
                        "basis size " + std::to_string(orun.basis.size()));

    // exact flow (e^{2t} x, e^{3t} y, e^{t} z)
    Eigen::VectorXd q(3);
    q << 0.5, std::sqrt(0.125), 1.0;
    FlowOptions fo;
    fo.set = scene.set.get();
    fo.tol_mem = cfg.tol_mem;
    double worst = 0.0;
    for (double t : {-1.0, -0.5, 0.5, 1.0}) {
      Eigen::VectorXd got = flow(euler, q, t, fo);
      Eigen::VectorXd want(3);
      want << std::exp(2 * t) * q(0), std::exp(3 * t) * q(1), std::exp(t) * q(2);
      worst = std::max(worst, (got - want).norm() / want.norm());
    }
    detail::add_fixture(rb, "cusp/euler_flow", worst <= 1e-6,
                        "relative error " + std::to_string(worst));
  }

  // reach classes must not merge across strata (4 seeds)
  bool no_cross = true;
  for (int s = 0; s < 4 && no_cross; ++s) {
    ReachOptions ro;
    ro.words = cfg.words;
    ro.flow.set = scene.set.get();
    ro.flow.tol_mem = cfg.tol_mem;
    ro.link_radius = 0.08;
    ro.estimate_dims = false;
    OrbitEstimate est = reach_partition(orun.basis, cloud, mix_seed(cfg.seed, 0x4e + s), ro);
    for (const auto& cls : est.classes) {
      const std::string& first = cloud_label[cls.members.front()];
      for (int m : cls.members)
        if (cloud_label[m] != first) no_cross = false;
    }
  }
  detail::add_fixture(rb, "cusp/reach_containment", no_cross, "4 seeds, link 0.08");
}

inline void run_corpus_spiral(const DriverConfig& cfg, ReportBuilder& rb) {
  Scene scene = load_example("spiral").load();
  const Stratum* s1 = scene.find_stratum("S1");
  const Stratum* s0 = scene.find_stratum("S0");
  Eigen::VectorXd origin = Eigen::VectorXd::Zero(2);

  // tangent-line limit along theta = 2 pi n
  PlaneSequence tangents;
  for (int n = 4; n <= 12; ++n) {
    Eigen::VectorXd t(1);
    t << 2.0 * M_PI * n;
    tangents.push_back(span_of(scene.set->parametrization->jacobian(t)));
  }
  PlaneLimit lim = limit_of_planes(tangents, cfg.tol_limit);
  Eigen::VectorXd d(2);
  d << 1, -1;
  double dist = plane_distance(lim.limit, line_through(d));
  detail::add_fixture(rb, "spiral/tangent_limit", lim.converged && dist <= 1e-4,
                      "distance to span{(1,-1)} = " + std::to_string(dist));

  run_whitney_pair(*s1, *s0, origin, cfg, rb, 24);
  // the B defect must be 0.7071 +- 1e-3
  auto opt = cfg.whitney_options(24);
  CheckReport b = whitney_B(*s1, *s0, origin, mix_seed(cfg.seed, 0xb), opt);
  detail::add_fixture(rb, "spiral/b_defect",
                      b.verdict == Verdict::Fails && std::abs(b.defect - std::sqrt(0.5)) <= 1e-3,
                      "B defect = " + std::to_string(b.defect));
}

inline void run_corpus_mather(const DriverConfig& cfg, ReportBuilder& rb) {
  Scene scene = load_example("mather").load();

  // fixture: eight 2-dim strata (four sheets split by the axis) plus the axis
  // (two of the four sheets sit within ~0.3 of each other, so keeping the
  // proximity-graph edge radius below that gap needs a denser cloud)
  DriverConfig mcfg = cfg;
  mcfg.samples = std::max(cfg.samples, 2500);
  Decomposition dec = run_stratify(scene, mcfg, rb);
  int d2 = 0, d1 = 0;
  for (const auto& st : dec.strata) {
    if (st.dim == 2) ++d2;
    if (st.dim == 1) ++d1;
  }
  detail::add_fixture(rb, "mather/strata", d2 == 8 && d1 == 1,
                      "dims 2x" + std::to_string(d2) + ",1x" + std::to_string(d1));

  std::vector<double> crs;
  bool cones_ok = true;
  for (double z0 : {-1.0, 0.0, 1.0}) {
    Eigen::VectorXd x(3);
    x << 0, 0, z0;
    json rec = run_cone(scene, x, {2}, 4, cfg, rb);
    double alpha = 3.0 + std::atan(z0);
    std::vector<Eigen::Vector3d> expected = {
        {0, 1, 0}, {1, 0, 0}, {1, -1, 0}, {1, -alpha, 0}};
    if (rec["lines"].size() != 4) {
      cones_ok = false;
    } else {
      for (const auto& e : expected) {
        Eigen::VectorXd u = e.normalized();
        bool matched = false;
        for (const auto& jl : rec["lines"]) {
          Eigen::VectorXd v = detail::json_vector(jl);
          double c = std::min(1.0, std::abs(u.dot(v)));
          if (std::sqrt(std::max(0.0, 1.0 - c * c)) <= 1e-2) matched = true;
        }
        if (!matched) cones_ok = false;
      }
    }
    if (rec.contains("cross_ratio")) crs.push_back(rec["cross_ratio"].get<double>());
  }
  detail::add_fixture(rb, "mather/cone_lines", cones_ok, "z0 in {-1,0,1}, angle tol 1e-2");
  bool inj = crs.size() == 3;
  for (std::size_t i = 0; inj && i < crs.size(); ++i)
    for (std::size_t j = i + 1; j < crs.size(); ++j)
      if (std::abs(crs[i] - crs[j]) <= 0.05) inj = false;
  std::ostringstream cr_note;
  cr_note << "cross-ratios:";
  for (double v : crs) cr_note << " " << v;
  detail::add_fixture(rb, "mather/cross_ratio_injective", inj, cr_note.str());

  // orbit dimensions: 0 on the axis, 2 at a smooth sample (local field bases)
  bool dims_ok = true;
  for (double z0 : {-1.0, 0.0, 1.0}) {
    Eigen::VectorXd x(3);
    x << 0, 0, z0;
    FieldBasisOptions fb;
    fb.seed = mix_seed(cfg.seed, 0xd1);
    fb.anchor = x;
    fb.radius = 0.3;
    fb.tol_mem = cfg.tol_mem;
    auto basis = tangent_field_basis(*scene.set, 2, fb);
    if (orbit_dimension(basis, x) != 0) dims_ok = false;
  }
  Eigen::VectorXd smooth(3);
  smooth << 0, 0.9, 0.4;  // on the sheet x = 0, away from the axis
  {
    FieldBasisOptions fb;
    fb.seed = mix_seed(cfg.seed, 0xd2);
    fb.anchor = smooth;
    fb.radius = 0.25;
    fb.tol_mem = cfg.tol_mem;
    auto basis = tangent_field_basis(*scene.set, 2, fb);
    if (orbit_dimension(basis, smooth) != 2) dims_ok = false;
  }
  detail::add_fixture(rb, "mather/orbit_dims", dims_ok, "axis dim 0, smooth dim 2");
}

inline void run_corpus_quotient(const std::string& name, const DriverConfig& cfg,
                                ReportBuilder& rb) {
  Scene scene = load_example(name).load();
  run_quotient(scene, cfg, rb);
}

inline void run_corpus(const std::string& name, const DriverConfig& cfg, ReportBuilder& rb) {
  if (name == "cusp") return run_corpus_cusp(cfg, rb);
  if (name == "spiral") return run_corpus_spiral(cfg, rb);
  if (name == "mather") return run_corpus_mather(cfg, rb);
  if (name == "z2_line" || name == "z2_plane" || name == "s1_plane")
    return run_corpus_quotient(name, cfg, rb);
  load_example(name);  // throws with the catalog
}

}  // namespace strata
