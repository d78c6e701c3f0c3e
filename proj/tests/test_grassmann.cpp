#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <vector>

#include "strata/grassmann.hpp"
#include "strata/rng.hpp"

using namespace strata;

namespace {

Eigen::VectorXd vec2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

Eigen::VectorXd vec3(double x, double y, double z) {
  Eigen::VectorXd v(3);
  v << x, y, z;
  return v;
}

Plane line_at_angle(double theta) { return line_through(vec2(std::cos(theta), std::sin(theta))); }

// random m-plane in R^n via orthonormalized Gaussian columns
Plane random_plane(Rng& rng, int n, int m) {
  std::vector<Eigen::VectorXd> cols;
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c(i) = rng.normal();
    cols.push_back(c);
  }
  return orthonormalize(cols);
}

}  // namespace

TEST_CASE("orthonormalize detects rank") {
  std::vector<Eigen::VectorXd> v{vec3(1, 0, 0), vec3(2, 0, 0), vec3(0, 1, 0)};
  Plane p = orthonormalize(v);
  CHECK(p.dim() == 2);
  CHECK(p.ambient_dim() == 3);
  // spans the xy-plane: projector fixes (1,1,0), kills (0,0,1)
  CHECK((p.project(vec3(1, 1, 0)) - vec3(1, 1, 0)).norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.project(vec3(0, 0, 1)).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("zero plane and line_through") {
  Plane z = Plane::zero(3);
  CHECK(z.dim() == 0);
  CHECK(z.projector().norm() == 0.0);
  CHECK_THROWS(line_through(vec3(0, 0, 0)));
  Plane l = line_through(vec3(0, 0, 5));
  CHECK(l.dim() == 1);
  CHECK(std::abs(l.basis()(2, 0)) == doctest::Approx(1.0));
}

TEST_CASE("plane_distance matches sin of the rotation angle for lines") {
  // for two lines at angle theta the projector distance is sin(theta)
  for (double theta : {0.1, 0.3, 0.7, 1.2, M_PI / 2}) {
    double d = plane_distance(line_at_angle(0.0), line_at_angle(theta));
    CHECK(d == doctest::Approx(std::sin(theta)).epsilon(1e-10));
  }
  // coordinate planes in R^3: distance 1 (each contains a direction normal
  // to the other)
  Plane xy = span_of((Eigen::MatrixXd(3, 2) << 1, 0, 0, 1, 0, 0).finished());
  Plane xz = span_of((Eigen::MatrixXd(3, 2) << 1, 0, 0, 0, 0, 1).finished());
  CHECK(plane_distance(xy, xz) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("plane_distance is a metric on same-dimension planes") {
  Rng rng = Rng::stream(11, {0x6a});
  for (int trial = 0; trial < 50; ++trial) {
    Plane a = random_plane(rng, 4, 2);
    Plane b = random_plane(rng, 4, 2);
    Plane c = random_plane(rng, 4, 2);
    double ab = plane_distance(a, b), bc = plane_distance(b, c), ac = plane_distance(a, c);
    CHECK(ab == doctest::Approx(plane_distance(b, a)).epsilon(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ac <= ab + bc + 1e-12);
    CHECK(plane_distance(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("containment_defect oracles") {
  Plane xy = span_of((Eigen::MatrixXd(3, 2) << 1, 0, 0, 1, 0, 0).finished());
  // contained line: defect 0
  CHECK(containment_defect(xy, line_through(vec3(1, 1, 0))) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // orthogonal line: defect 1
  CHECK(containment_defect(xy, line_through(vec3(0, 0, 1))) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // line tilted by theta out of the plane: defect sin(theta)
  for (double theta : {0.2, 0.5, 1.0}) {
    Plane l = line_through(vec3(std::cos(theta), 0, std::sin(theta)));
    CHECK(containment_defect(xy, l) == doctest::Approx(std::sin(theta)).epsilon(1e-10));
  }
  // zero plane is contained in everything
  CHECK(containment_defect(xy, Plane::zero(3)) == doctest::Approx(0.0));
}

TEST_CASE("planes_equal ignores the choice of basis") {
  Plane a = span_of((Eigen::MatrixXd(3, 2) << 1, 0, 0, 1, 0, 0).finished());
  Plane b = span_of((Eigen::MatrixXd(3, 2) << 1, 1, 1, -1, 0, 0).finished());
  CHECK(planes_equal(a, b));
  Plane c = span_of((Eigen::MatrixXd(3, 2) << 1, 0, 0, 0, 0, 1).finished());
  CHECK_FALSE(planes_equal(a, c));
}

TEST_CASE("limit_of_planes converges for geometric rotations") {
  PlaneSequence seq;
  for (int k = 0; k < 40; ++k) seq.push_back(line_at_angle(0.8 * std::pow(0.5, k)), k);
  PlaneLimit lim = limit_of_planes(seq, 1e-6);
  CHECK(lim.converged);
  CHECK(planes_equal(lim.limit, line_at_angle(0.0), 1e-6));
  CHECK(lim.tail_defect <= 1e-6);
}

TEST_CASE("limit_of_planes rejects an alternating sequence") {
  // lines flipping between 0 and 0.5 rad: trailing half not Cauchy, and the
  // tail defect reports the full oscillation sin(0.5)
  PlaneSequence seq;
  for (int k = 0; k < 40; ++k) seq.push_back(line_at_angle(k % 2 ? 0.5 : 0.0), k);
  PlaneLimit lim = limit_of_planes(seq, 1e-6);
  CHECK_FALSE(lim.converged);
  CHECK(lim.tail_defect == doctest::Approx(std::sin(0.5)).epsilon(1e-10));
}

TEST_CASE("limit_of_planes trailing-half rule forgives a bad prefix") {
  // junk early terms followed by an exactly constant tail: converged
  PlaneSequence seq;
  for (int k = 0; k < 10; ++k) seq.push_back(line_at_angle(1.0 + 0.1 * k), k);
  for (int k = 0; k < 30; ++k) seq.push_back(line_at_angle(0.25), k);
  PlaneLimit lim = limit_of_planes(seq, 1e-6);
  CHECK(lim.converged);
  CHECK(planes_equal(lim.limit, line_at_angle(0.25), 1e-9));
}

TEST_CASE("remark-1 forward and reverse vector-limit properties") {
  // forward: u_n in D_n with D_n -> D implies the limit of u_n lies in D;
  // reverse: every u in D is the limit of its projections onto D_n
  Rng rng = Rng::stream(2026, {0x21});
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    int n = 3 + rng.uniform_int(3);                 // ambient 3..5
    int m = 1 + rng.uniform_int(n - 1);             // plane dim 1..n-1
    Plane d = random_plane(rng, n, m);

    // rotate d by eps_k = eps0 * 0.5^k inside a random 2-plane mixing a
    // d-direction with an orthogonal one
    Eigen::VectorXd in_dir = d.basis().col(rng.uniform_int(m));
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) out(i) = rng.normal();
    out -= d.project(out);
    if (out.norm() < 1e-8) continue;
    out.normalize();
    double eps0 = 0.4 * (0.5 + rng.uniform());

    Eigen::VectorXd u_coeff(m);
    for (int i = 0; i < m; ++i) u_coeff(i) = rng.normal();
    if (u_coeff.norm() < 1e-8) u_coeff(0) = 1.0;
    u_coeff.normalize();

    const int terms = 30;
    double eps_tail = eps0 * std::pow(0.5, terms / 2);
    Eigen::VectorXd u_last;
    double reverse_defect = 0.0;
    for (int k = 0; k < terms; ++k) {
      double eps = eps0 * std::pow(0.5, k);
      Eigen::MatrixXd bk = d.basis();
      for (int j = 0; j < m; ++j) {
        double c = bk.col(j).dot(in_dir);
        bk.col(j) += c * ((std::cos(eps) - 1.0) * in_dir + std::sin(eps) * out);
      }
      Plane dk = span_of(bk);
      REQUIRE(dk.dim() == m);
      u_last = dk.basis() * (dk.basis().transpose() * (d.basis() * u_coeff));
      if (k >= terms / 2) {
        Eigen::VectorXd u_rev = dk.project(d.basis() * u_coeff);
        reverse_defect = std::max(
            reverse_defect, containment_defect(dk, line_through(d.basis() * u_coeff)));
        (void)u_rev;
      }
    }
    // forward: the last u_n is within 10*eps_tail of lying in d
    CHECK(containment_defect(d, line_through(u_last)) <= 10 * eps_tail);
    // reverse: projections of u onto the tail planes stay within the same bound
    CHECK(reverse_defect <= 10 * eps_tail);
  }
}

TEST_CASE("planes CSV round-trip") {
  Rng rng = Rng::stream(5, {0xc5});
  PlaneSequence seq;
  for (int k = 0; k < 7; ++k) seq.push_back(random_plane(rng, 4, 2), 0.1 * k);
  std::string path = "grassmann_roundtrip.csv";
  save_planes_csv(seq, path);
  PlaneSequence back = load_planes_csv(path);
  REQUIRE(back.size() == seq.size());
  // the format stores the basis entries only; labels are not persisted
  for (std::size_t i = 0; i < seq.size(); ++i)
    CHECK(planes_equal(seq.planes[i], back.planes[i], 1e-12));
  std::remove(path.c_str());
}

TEST_CASE("operator_norm matches the largest singular value") {
  Eigen::MatrixXd m(2, 2);
  m << 3, 0, 0, -2;
  CHECK(operator_norm(m) == doctest::Approx(3.0).epsilon(1e-12));
}
