// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Each criterion is timed against its runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "strata/driver.hpp"

using namespace strata;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& title, double budget_seconds,
               const std::function<bool(std::string&)>& body) {
  auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string note;
  try {
    ok = body(note);
  } catch (const std::exception& e) {
    ok = false;
    note = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_seconds) {
    ok = false;
    note += (note.empty() ? "" : "; ") + std::string("over budget");
  }
  if (!ok) ++g_failures;
  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(1);
  line << "criterion " << number << " (" << title << "): " << (ok ? "PASS" : "FAIL") << " ["
       << secs << "s / " << budget_seconds << "s]";
  if (!note.empty()) line << " — " << note;
  std::cout << line.str() << std::endl;
}

Eigen::VectorXd vec3(double x, double y, double z) {
  Eigen::VectorXd v(3);
  v << x, y, z;
  return v;
}

// shared state across the cusp criteria
Scene g_cusp;
Decomposition g_cusp_dec;

bool all_verdicts_hold(const ReportBuilder& rb, const std::string& check_prefix,
                       std::string& note) {
  int seen = 0;
  for (const auto& rec : rb.root["records"]) {
    if (!rec.contains("verdict")) continue;
    std::string check = rec.value("check", "");
    if (check.rfind(check_prefix, 0) != 0) continue;
    ++seen;
    if (rec["verdict"] != "holds") {
      note = check + " " + rec.value("pair", std::string{}) + " -> " +
             rec["verdict"].get<std::string>();
      return false;
    }
  }
  if (seen == 0) {
    note = "no '" + check_prefix + "' records";
    return false;
  }
  return true;
}

}  // namespace

int main() {
  DriverConfig cfg;

  criterion(1, "cusp strata dims {2+,1,1,0} with matching ranks", 30.0, [&](std::string& note) {
    g_cusp = load_example("cusp").load();
    ReportBuilder rb("acceptance", "cusp", cfg.to_json());
    g_cusp_dec = run_stratify(g_cusp, cfg, rb);
    detail::refine_cusp_axes(g_cusp_dec);
    int d2 = 0, d1 = 0, d0 = 0;
    bool axes_ok = true, origin_ok = false;
    for (const auto& st : g_cusp_dec.strata) {
      if (st.dim == 2) ++d2;
      if (st.dim == 1) {
        ++d1;
        double zmin = st.cloud.row(2).minCoeff(), zmax = st.cloud.row(2).maxCoeff();
        if (zmin * zmax < 0) axes_ok = false;
        if (st.cloud.row(0).cwiseAbs().maxCoeff() > 1e-4 ||
            st.cloud.row(1).cwiseAbs().maxCoeff() > 1e-4)
          axes_ok = false;
        if (!st.signature || st.signature->hessian_ranks != std::vector<int>{2})
          axes_ok = false;
      }
      if (st.dim == 0 && st.point) {
        ++d0;
        if (st.point->norm() <= 1e-4 && st.signature &&
            st.signature->hessian_ranks == std::vector<int>{1})
          origin_ok = true;
      }
    }
    // DF vanishes identically on the axis
    bool df_zero = g_cusp.set->equations[0].gradient(vec3(0, 0, 1)).norm() == 0.0 &&
                   g_cusp.set->equations[0].gradient(vec3(0, 0, -0.37)).norm() == 0.0;
    std::ostringstream os;
    os << "dims 2x" << d2 << ",1x" << d1 << ",0x" << d0;
    note = os.str();
    return d2 >= 1 && d1 == 2 && d0 == 1 && axes_ok && origin_ok && df_zero;
  });

  criterion(2, "cusp whitney A/B hold at (0,0,+-1) and the origin", 60.0,
            [&](std::string& note) {
    ReportBuilder rb("acceptance", "cusp", cfg.to_json());
    for (const auto& x : {vec3(0, 0, 1), vec3(0, 0, -1), vec3(0, 0, 0)}) {
      for (const auto& mp : g_cusp_dec.strata) {
        if (!stratum_member(mp, x, 1e-7)) continue;
        for (const auto& m : g_cusp_dec.strata) {
          if (m.label == mp.label || m.dim <= mp.dim) continue;
          if (!detail::closure_reaches(m, x, mix_seed(cfg.seed, 0xcc))) continue;
          run_whitney_pair(m, mp, x, cfg, rb, mp.dim == 0 ? 90 : 44);
        }
      }
    }
    int pairs = 0;
    for (const auto& rec : rb.root["records"]) {
      std::string check = rec.value("check", "");
      if (check != "whitney_a" && check != "whitney_b") continue;
      ++pairs;
      if (rec["verdict"] != "holds" || rec["defect"].get<double>() > 1e-3 ||
          rec["seeds"].get<int>() < 8) {
        note = check + " " + rec["pair"].get<std::string>() + " " +
               rec["verdict"].get<std::string>();
        return false;
      }
    }
    note = std::to_string(pairs) + " checks over 8 seeds each";
    return pairs >= 2;
  });

  criterion(3, "spiral tangent limit and whitney B defect 0.7071", 10.0,
            [&](std::string& note) {
    Scene scene = load_example("spiral").load();
    const Stratum* arm = scene.find_stratum("S1");
    const Stratum* origin = scene.find_stratum("S0");
    if (!arm || !origin) {
      note = "missing declared strata";
      return false;
    }
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd diag(2);
    diag << 1, -1;
    SequenceOptions sopt;
    sopt.count = 24;  // the spiral parameter domain holds 27 periods
    PointSequence seq = make_sequence(*arm, zero, cfg.seed, sopt);
    PlaneLimit lim = limit_of_planes(seq.planes, cfg.tol_limit);
    bool limit_ok = lim.converged && plane_distance(lim.limit, line_through(diag)) <= 1e-4;
    CheckReport b = whitney_B(*arm, *origin, zero, mix_seed(cfg.seed, 0xb));
    CheckReport a = whitney_A(*arm, *origin, zero, mix_seed(cfg.seed, 0xa));
    bool b_ok = b.verdict == Verdict::Fails && std::abs(b.defect - std::sqrt(0.5)) <= 1e-3;
    bool a_ok = a.verdict == Verdict::Holds && a.defect <= 1e-9;
    std::ostringstream os;
    os << "B defect " << b.defect;
    note = os.str();
    return limit_ok && b_ok && a_ok;
  });

  criterion(4, "mather cone lines, cross-ratio injectivity, orbit dims", 120.0,
            [&](std::string& note) {
    ReportBuilder rb("acceptance", "mather", cfg.to_json());
    run_corpus_mather(cfg, rb);
    for (const char* fixture :
         {"mather/cone_lines", "mather/cross_ratio_injective", "mather/orbit_dims"}) {
      bool found = false;
      for (const auto& rec : rb.root["records"]) {
        if (rec.value("check", "") != "fixture" || rec.value("pair", "") != fixture) continue;
        found = true;
        if (rec["verdict"] != "holds") {
          note = std::string(fixture) + ": " + rec["witnesses"][0].get<std::string>();
          return false;
        }
      }
      if (!found) {
        note = std::string("missing fixture ") + fixture;
        return false;
      }
    }
    return all_verdicts_hold(rb, "cone", note);
  });

  criterion(5, "cusp orbits: euler field, exact flow, reach containment", 60.0,
            [&](std::string& note) {
    // degree-1 tangent fields contain the Euler direction exactly
    auto basis = tangent_field_basis(*g_cusp.set, 1);
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
    bool euler_ok = false;
    if (!basis.empty()) {
      Eigen::VectorXd e = coeffs_of(euler);
      Eigen::MatrixXd bmat(e.size(), static_cast<int>(basis.size()));
      for (std::size_t k = 0; k < basis.size(); ++k)
        bmat.col(static_cast<int>(k)) = coeffs_of(basis[k]);
      Eigen::VectorXd sol = bmat.colPivHouseholderQr().solve(e);
      euler_ok = (bmat * sol - e).norm() <= 1e-9 * e.norm();
    }

    // flow against the exact exponential solution
    FlowOptions fo;
    fo.set = g_cusp.set.get();
    fo.tol_mem = cfg.tol_mem;
    Eigen::VectorXd q = vec3(0.5, std::sqrt(0.125), 1.0);
    double worst = 0.0;
    for (double t : {-1.0, -0.5, 0.5, 1.0}) {
      Eigen::VectorXd got = flow(euler, q, t, fo);
      Eigen::VectorXd want =
          vec3(std::exp(2 * t) * q(0), std::exp(3 * t) * q(1), std::exp(t) * q(2));
      worst = std::max(worst, (got - want).norm() / want.norm());
    }
    bool flow_ok = worst <= 1e-6;

    // reach classes stay inside single strata over 4 seeds
    std::vector<Eigen::VectorXd> cloud;
    std::vector<std::string> label;
    for (double z : {0.3, 0.5, 0.7, 0.9, 1.1, -0.3, -0.5, -0.7, -0.9, -1.1}) {
      cloud.push_back(vec3(0, 0, z));
      label.push_back(z > 0 ? "axis+" : "axis-");
    }
    cloud.push_back(vec3(0, 0, 0));
    label.push_back("origin");
    for (const auto& st : g_cusp_dec.strata) {
      if (st.dim != 2) continue;
      int taken = 0;
      for (int c = 0; c < st.cloud.cols() && taken < 60; ++c) {
        Eigen::VectorXd p = st.cloud.col(c);
        if (p.head(2).norm() < 0.35) continue;
        cloud.push_back(p);
        label.push_back(st.label);
        ++taken;
      }
    }
    bool no_cross = true;
    for (int s = 0; s < 4 && no_cross; ++s) {
      ReachOptions ro;
      ro.words = cfg.words;
      ro.flow.set = g_cusp.set.get();
      ro.flow.tol_mem = cfg.tol_mem;
      ro.link_radius = 0.08;
      ro.estimate_dims = false;
      OrbitEstimate est = reach_partition(basis, cloud, mix_seed(cfg.seed, 0x4e + s), ro);
      for (const auto& cls : est.classes) {
        const std::string& first = label[cls.members.front()];
        for (int m : cls.members)
          if (label[m] != first) no_cross = false;
      }
    }
    std::ostringstream os;
    os << "basis " << basis.size() << ", flow err " << worst;
    note = os.str();
    return euler_ok && flow_ok && no_cross;
  });

  criterion(6, "theorem-4 agreement for Z2 on R, Z2 on R2, S1 on R2", 60.0,
            [&](std::string& note) {
    for (const char* name : {"z2_line", "z2_plane", "s1_plane"}) {
      Scene scene = load_example(name).load();
      ReportBuilder rb("acceptance", name, cfg.to_json());
      run_quotient(scene, cfg, rb);  // field degree 2, 4 seeds
      std::string sub;
      if (!all_verdicts_hold(rb, "theorem4", sub)) {
        note = std::string(name) + ": " + sub;
        return false;
      }
    }
    return true;
  });

  criterion(7, "property suites: plane limits, derivatives, flows, determinism", 120.0,
            [&](std::string& note) {
    Rng rng = Rng::stream(cfg.seed, {0xacce});

    // vector limits through convergent plane sequences, both directions
    for (int trial = 0; trial < 200; ++trial) {
      int n = 3 + rng.uniform_int(3);
      int m = 1 + rng.uniform_int(n - 1);
      std::vector<Eigen::VectorXd> cols;
      for (int j = 0; j < m; ++j) cols.push_back(rng.normal_vector(n));
      Plane d = orthonormalize(cols);
      if (d.dim() != m) continue;
      Eigen::VectorXd in_dir = d.basis().col(rng.uniform_int(m));
      Eigen::VectorXd out = rng.normal_vector(n);
      out -= d.project(out);
      if (out.norm() < 1e-8) continue;
      out.normalize();
      Eigen::VectorXd u = d.basis() * rng.unit_vector(m);
      double eps0 = 0.4;
      const int terms = 30;
      double eps_tail = eps0 * std::pow(0.5, terms / 2);
      double fwd = 0.0, rev = 0.0;
      for (int k = terms / 2; k < terms; ++k) {
        double eps = eps0 * std::pow(0.5, k);
        Eigen::MatrixXd bk = d.basis();
        for (int j = 0; j < m; ++j) {
          double c = bk.col(j).dot(in_dir);
          bk.col(j) += c * ((std::cos(eps) - 1.0) * in_dir + std::sin(eps) * out);
        }
        Plane dk = span_of(bk);
        Eigen::VectorXd uk = dk.project(u);  // u_k in D_k converging to u
        fwd = std::max(fwd, containment_defect(d, line_through(uk)));
        rev = std::max(rev, (uk - u).norm());
      }
      if (fwd > 10 * eps_tail || rev > 10 * eps_tail) {
        note = "plane-limit vector property failed";
        return false;
      }
    }

    // symbolic gradient and hessian vs central differences on random
    // polynomial fields
    for (int trial = 0; trial < 100; ++trial) {
      int n = 2 + rng.uniform_int(2);
      auto mons = poly::monomials_up_to(n, 3);
      PolyMap pm;
      for (const auto& m : mons)
        if (rng.uniform() < 0.4) pm[m] = rng.uniform(-2.0, 2.0);
      if (pm.empty()) continue;
      ScalarField f(n, poly::to_expr(pm));
      Eigen::VectorXd p = rng.in_box(Eigen::VectorXd::Constant(n, -1.0),
                                     Eigen::VectorXd::Constant(n, 1.0));
      const double h = 1e-5;
      Eigen::VectorXd g = f.gradient(p);
      Eigen::MatrixXd hess = f.hessian(p);
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(n, i);
        double fd = (f.eval(p + h * e) - f.eval(p - h * e)) / (2 * h);
        if (std::abs(fd - g(i)) > 1e-6 * std::max(1.0, std::abs(g(i)))) {
          note = "gradient/fd mismatch";
          return false;
        }
        for (int j = 0; j < n; ++j) {
          Eigen::VectorXd ej = Eigen::VectorXd::Unit(n, j);
          double fd2 = (f.eval(p + h * e + h * ej) - f.eval(p + h * e - h * ej) -
                        f.eval(p - h * e + h * ej) + f.eval(p - h * e - h * ej)) /
                       (4 * h * h);
          if (std::abs(fd2 - hess(i, j)) > 1e-4 * std::max(1.0, std::abs(hess(i, j)))) {
            note = "hessian/fd mismatch";
            return false;
          }
        }
      }
    }

    // flow group law on the circle
    {
      SemialgebraicSet circle;
      circle.ambient_dim = 2;
      circle.equations.push_back(parse_expr("x^2 + y^2 - 1", 2));
      VectorField rot;
      rot.components.push_back(parse_expr("0 - y", 2));
      rot.components.push_back(parse_expr("x", 2));
      FlowOptions fo;
      fo.set = &circle;
      Eigen::VectorXd p0(2);
      p0 << 1, 0;
      for (int trial = 0; trial < 20; ++trial) {
        double s = rng.uniform(-1.0, 1.0), t = rng.uniform(-1.0, 1.0);
        Eigen::VectorXd a = flow(rot, flow(rot, p0, s, fo), t, fo);
        Eigen::VectorXd b = flow(rot, p0, s + t, fo);
        if ((a - b).norm() > 1e-8) {
          note = "flow group law violated";
          return false;
        }
      }
    }

    // cross-ratio invariance under random invertible linear maps
    {
      auto line2 = [](double a, double b) {
        Eigen::VectorXd v(2);
        v << a, b;
        return line_through(v);
      };
      std::vector<Plane> lines{line2(1, 0), line2(1, 1), line2(1, 2), line2(1, 3)};
      double cr0 = cross_ratio(lines);
      int tried = 0;
      while (tried < 100) {
        Eigen::Matrix2d a;
        a << rng.normal(), rng.normal(), rng.normal(), rng.normal();
        if (std::abs(a.determinant()) < 0.1) continue;
        ++tried;
        std::vector<Plane> mapped;
        for (const auto& l : lines) mapped.push_back(line_through(a * l.basis().col(0)));
        if (std::abs(cross_ratio(mapped) - cr0) > 1e-9) {
          note = "cross-ratio drift";
          return false;
        }
      }
    }

    // determinism: two identical runs give byte-identical reports
    {
      ReportBuilder ra("corpus", "spiral", cfg.to_json());
      ReportBuilder rb2("corpus", "spiral", cfg.to_json());
      run_corpus_spiral(cfg, ra);
      run_corpus_spiral(cfg, rb2);
      if (ra.finish().dump(2) != rb2.finish().dump(2)) {
        note = "reports differ across reruns";
        return false;
      }
    }
    return true;
  });

  std::cout << (g_failures == 0 ? "all acceptance criteria passed"
                                : std::to_string(g_failures) + " acceptance criteria failed")
            << std::endl;
  return g_failures;
}
