#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "strata/checks.hpp"
#include "strata/corpus.hpp"
#include "strata/stratkit.hpp"

using namespace strata;

namespace {

Eigen::VectorXd vec2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

std::shared_ptr<SemialgebraicSet> make_set(int dim, std::initializer_list<const char*> eqs) {
  auto set = std::make_shared<SemialgebraicSet>();
  set->ambient_dim = dim;
  for (const char* e : eqs) set->equations.push_back(parse_expr(e, dim));
  return set;
}

const Stratum& stratum_of_dim(const Decomposition& dec, int dim, int which = 0) {
  int seen = 0;
  for (const auto& st : dec.strata)
    if (st.dim == dim && seen++ == which) return st;
  REQUIRE(false);
  static Stratum dummy;
  return dummy;
}

int count_dim(const Decomposition& dec, int dim) {
  int c = 0;
  for (const auto& st : dec.strata) c += (st.dim == dim);
  return c;
}

}  // namespace

TEST_CASE("newton_project lands on the unit circle") {
  auto set = make_set(2, {"x^2 + y^2 - 1"});
  auto eqs = field_ptrs(set->equations);
  auto p = newton_project(eqs, vec2(1.7, -0.4));
  REQUIRE(p.has_value());
  CHECK(p->norm() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(set_member(*set, *p, 1e-9));
}

TEST_CASE("rank_decompose: smooth circle yields only regular 1-dim strata") {
  auto set = make_set(2, {"x^2 + y^2 - 1"});
  Decomposition dec = rank_decompose(set, true, 1200, 3);
  REQUIRE(!dec.strata.empty());
  int cloud_total = 0;
  for (const auto& st : dec.strata) {
    CHECK(st.dim == 1);
    REQUIRE(st.signature.has_value());
    CHECK_FALSE(st.signature->singular);
    CHECK(st.signature->jacobian_rank == 1);
    // every representative sits on the circle
    for (int c = 0; c < st.cloud.cols(); ++c)
      CHECK(st.cloud.col(c).norm() == doctest::Approx(1.0).epsilon(1e-7));
    cloud_total += static_cast<int>(st.cloud.cols());
  }
  CHECK(cloud_total >= 50);
}

TEST_CASE("rank_decompose: crossing lines get regular axes plus a 0-dim singular stratum") {
  auto set = make_set(2, {"x*y"});
  Decomposition dec = rank_decompose(set, true, 600, 7);
  CHECK(count_dim(dec, 1) >= 2);
  REQUIRE(count_dim(dec, 0) == 1);
  const Stratum& origin = stratum_of_dim(dec, 0);
  REQUIRE(origin.signature.has_value());
  CHECK(origin.signature->singular);
  // the 0-dim stratum sits at the origin (the whole singular locus)
  for (int c = 0; c < std::min<int>(origin.cloud.cols(), 20); ++c)
    CHECK(origin.cloud.col(c).norm() <= 1e-7);
  for (const auto& st : dec.strata) {
    if (st.dim != 1) continue;
    CHECK_FALSE(st.signature->singular);
    CHECK(st.signature->jacobian_rank == 1);
  }

  // assign_stratum sends on-axis points to 1-dim strata and 0 to the origin
  int i1 = assign_stratum(dec, vec2(0.8, 0.0));
  REQUIRE(i1 >= 0);
  CHECK(dec.strata[i1].dim == 1);
  int i0 = assign_stratum(dec, vec2(0.0, 0.0));
  REQUIRE(i0 >= 0);
  CHECK(dec.strata[i0].dim == 0);
  CHECK(assign_stratum(dec, vec2(0.3, 0.4)) == -1);  // off the set
}

TEST_CASE("classify_point ranks") {
  auto set = make_set(2, {"x*y"});
  RankSignature reg = classify_point(*set, vec2(1.0, 0.0), true);
  CHECK_FALSE(reg.singular);
  CHECK(reg.jacobian_rank == 1);
  RankSignature sing = classify_point(*set, vec2(0.0, 0.0), true);
  CHECK(sing.singular);
  REQUIRE(sing.hessian_ranks.size() == 1);
  CHECK(sing.hessian_ranks[0] == 2);
}

TEST_CASE("tangent_plane of the circle at (1,0) is the y-axis") {
  auto set = make_set(2, {"x^2 + y^2 - 1"});
  Decomposition dec = rank_decompose(set, true, 1200, 3);
  Plane t = tangent_plane(dec.strata[0], vec2(1.0, 0.0));
  CHECK(t.dim() == 1);
  CHECK(planes_equal(t, line_through(vec2(0, 1)), 1e-8));
}

TEST_CASE("make_sequence walks into the base point with exact offsets") {
  auto set = make_set(2, {"x^2 + y^2 - 1"});
  Decomposition dec = rank_decompose(set, true, 1200, 3);
  Eigen::VectorXd x = vec2(1.0, 0.0);
  SequenceOptions sopt;
  sopt.count = 44;  // brings the trailing half below the 1e-6 Cauchy tol
  PointSequence seq = make_sequence(dec.strata[0], x, 42, sopt);
  REQUIRE(static_cast<int>(seq.points.size()) == sopt.count);
  REQUIRE(seq.offsets.size() == seq.points.size());
  for (std::size_t i = 0; i < seq.points.size(); ++i) {
    CHECK(set_member(*set, seq.points[i], 1e-8));
    // offsets are the stored displacement, geometric in the radius
    CHECK(seq.offsets[i].norm() <= 0.5 * std::pow(0.5, static_cast<double>(i)) * 10.5);
    CHECK(seq.offsets[i].norm() >= 1e-3 * std::pow(0.5, static_cast<double>(i)));
  }
  PlaneLimit lim = limit_of_planes(seq.planes, 1e-6);
  CHECK(lim.converged);
  CHECK(planes_equal(lim.limit, line_through(vec2(0, 1)), 1e-5));
}

TEST_CASE("make_sequence on a 0-dim stratum is the constant sequence") {
  auto set = make_set(2, {"x*y"});
  Decomposition dec = rank_decompose(set, true, 600, 7);
  const Stratum& origin = stratum_of_dim(dec, 0);
  PointSequence seq = make_sequence(origin, vec2(0, 0), 1);
  for (const auto& off : seq.offsets) CHECK(off.norm() == 0.0);
  for (const auto& pl : seq.planes.planes) CHECK(pl.dim() == 0);
}

TEST_CASE("whitney A and B hold for a half-axis over the origin") {
  auto set = make_set(2, {"x*y"});
  Decomposition dec = rank_decompose(set, true, 600, 7);
  const Stratum& origin = stratum_of_dim(dec, 0);
  // pick a half-axis whose closure reaches the origin; all four do
  const Stratum& axis = stratum_of_dim(dec, 1);
  CheckReport a = whitney_A(axis, origin, vec2(0, 0), 11);
  CHECK(a.verdict == Verdict::Holds);
  CHECK(a.defect <= 1e-3);
  CheckReport b = whitney_B(axis, origin, vec2(0, 0), 11);
  CHECK(b.verdict == Verdict::Holds);
  CHECK(b.defect <= 1e-3);
}

TEST_CASE("spiral: tangent limit along theta = 2 pi n and the whitney B failure") {
  Scene scene = load_example("spiral").load();
  const Stratum* arm = scene.find_stratum("S1");
  const Stratum* origin = scene.find_stratum("S0");
  REQUIRE(arm);
  REQUIRE(origin);
  Eigen::VectorXd zero = vec2(0, 0);

  // tangent planes along the periodic parameter schedule converge to
  // span{(1,-1)}
  SequenceOptions sopt;
  sopt.count = 24;  // the spiral parameter domain holds 27 periods
  PointSequence seq = make_sequence(*arm, zero, 5, sopt);
  PlaneLimit lim = limit_of_planes(seq.planes, 1e-6);
  CHECK(lim.converged);
  CHECK(plane_distance(lim.limit, line_through(vec2(1, -1))) <= 1e-4);

  // secants approach span{(1,0)}-type radial directions at 45 degrees to the
  // tangent limit: condition B fails with defect sin(pi/4)
  CheckReport b = whitney_B(*arm, *origin, zero, 17);
  CHECK(b.verdict == Verdict::Fails);
  CHECK(b.defect == doctest::Approx(std::sqrt(0.5)).epsilon(1e-3));

  // condition A with a 0-dimensional lower stratum holds trivially
  CheckReport a = whitney_A(*arm, *origin, zero, 17);
  CHECK(a.verdict == Verdict::Holds);
  CHECK(a.defect == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("frontier and local closedness hold for the crossing lines") {
  auto set = make_set(2, {"x*y"});
  Decomposition dec = rank_decompose(set, true, 600, 7);
  for (const auto& rep : check_frontier(dec, 23)) {
    CHECK(rep.verdict != Verdict::Fails);
  }
  for (const auto& st : dec.strata) {
    CheckReport rep = check_local_closedness(st, dec, 23);
    CHECK(rep.verdict != Verdict::Fails);
  }
}

TEST_CASE("tangent cone of crossing lines at the origin is the two axes") {
  auto set = make_set(2, {"x*y"});
  ConeReport rep = tangent_cone_lines(*set, vec2(0, 0), 29);
  REQUIRE(rep.lines.size() == 2);
  CHECK(rep.stable);
  double d0 = std::min(plane_distance(rep.lines[0], line_through(vec2(1, 0))),
                       plane_distance(rep.lines[0], line_through(vec2(0, 1))));
  double d1 = std::min(plane_distance(rep.lines[1], line_through(vec2(1, 0))),
                       plane_distance(rep.lines[1], line_through(vec2(0, 1))));
  CHECK(d0 <= 1e-2);
  CHECK(d1 <= 1e-2);
  CHECK(plane_distance(rep.lines[0], rep.lines[1]) >= 0.9);
}

TEST_CASE("cross_ratio oracle and linear invariance") {
  auto line2 = [](double a, double b) { return line_through(vec2(a, b)); };
  // slopes 0, 1, 2, 3: cross-ratio ((0-2)(1-3)) / ((0-3)(1-2)) = 4/3
  std::vector<Plane> lines{line2(1, 0), line2(1, 1), line2(1, 2), line2(1, 3)};
  CHECK(cross_ratio(lines) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  // invariance under invertible linear maps (projective invariance of the
  // cross-ratio of concurrent lines)
  Rng rng = Rng::stream(31, {0xcf});
  int tried = 0;
  for (int trial = 0; trial < 200 && tried < 100; ++trial) {
    Eigen::Matrix2d a;
    a << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    if (std::abs(a.determinant()) < 0.1) continue;
    ++tried;
    std::vector<Plane> mapped;
    for (const auto& l : lines) mapped.push_back(line_through(a * l.basis().col(0)));
    CHECK(std::abs(cross_ratio(mapped) - 4.0 / 3.0) <= 1e-9);
  }
  CHECK(tried == 100);
  CHECK_THROWS(cross_ratio({line2(1, 0), line2(0, 1)}));
}

TEST_CASE("components splits two clusters") {
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(vec2(0.01 * i, 0));
  for (int i = 0; i < 10; ++i) pts.push_back(vec2(5 + 0.01 * i, 0));
  auto comps = detail::components(pts, 0.05);
  CHECK(comps.size() == 2);
}

TEST_CASE("decomposition is deterministic in the seed") {
  auto set = make_set(2, {"x*y"});
  Decomposition a = rank_decompose(set, true, 400, 99);
  Decomposition b = rank_decompose(set, true, 400, 99);
  REQUIRE(a.strata.size() == b.strata.size());
  for (std::size_t i = 0; i < a.strata.size(); ++i) {
    CHECK(a.strata[i].label == b.strata[i].label);
    CHECK(a.strata[i].dim == b.strata[i].dim);
    CHECK((a.strata[i].cloud - b.strata[i].cloud).norm() == 0.0);
  }
}
