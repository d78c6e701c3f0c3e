#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "strata/quotient.hpp"

using namespace strata;

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

Eigen::VectorXd vec2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

GroupAction z2_flip_x(int dim) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(dim, dim);
  g(0, 0) = -1;
  return GroupAction::finite({Eigen::MatrixXd::Identity(dim, dim), g});
}

VectorField make_field(int dim, std::initializer_list<const char*> comps) {
  VectorField x;
  x.name = "X";
  for (const char* c : comps) x.components.push_back(parse_expr(c, dim));
  return x;
}

}  // namespace

TEST_CASE("GroupAction::finite validates the group axioms") {
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd flip = id;
  flip(0, 0) = -1;
  CHECK_NOTHROW(GroupAction::finite({id, flip}));
  CHECK_THROWS(GroupAction::finite({flip}));              // identity missing
  Eigen::MatrixXd rot3(2, 2);                             // order-3 rotation alone
  double c = std::cos(2 * M_PI / 3), s = std::sin(2 * M_PI / 3);
  rot3 << c, -s, s, c;
  CHECK_THROWS(GroupAction::finite({id, rot3}));          // not closed
  Eigen::MatrixXd shear(2, 2);
  shear << 1, 1, 0, 1;
  CHECK_THROWS(GroupAction::finite({id, shear}));         // not orthogonal
}

TEST_CASE("isotropy for the reflection action") {
  GroupAction act = z2_flip_x(2);
  CHECK(isotropy(act, vec2(0, 0.7)).elements.size() == 2);  // on the mirror
  CHECK(isotropy(act, vec2(0.5, 0.7)).elements.size() == 1);
}

TEST_CASE("circle action: matrices, isotropy, orbit distance") {
  GroupAction act = GroupAction::circle({1}, 2);
  Eigen::MatrixXd m = act.circle_matrix(M_PI / 2);
  CHECK((m * vec2(1, 0) - vec2(0, 1)).norm() <= 1e-12);
  CHECK(isotropy(act, vec2(0, 0)).circle == IsotropyType::Circle::Full);
  CHECK(isotropy(act, vec2(1, 0)).circle == IsotropyType::Circle::Trivial);
  // same-orbit points have orbit distance zero; different radii differ by
  // the radius gap
  CHECK(orbit_distance(act, vec2(1, 0), vec2(0, 1)) <= 1e-6);
  CHECK(orbit_distance(act, vec2(2, 0), vec2(0, 1)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("orbit_type_partition separates the mirror from free points") {
  GroupAction act = z2_flip_x(2);
  std::vector<Eigen::VectorXd> cloud{vec2(0, -1), vec2(0, 0.5), vec2(1, 0.2),
                                     vec2(-1, 0.2), vec2(0.4, -0.9)};
  OrbitTypePartition part = orbit_type_partition(act, cloud, 3);
  REQUIRE(part.pieces.size() == 2);
  std::size_t mirror = part.pieces[0].members.size() == 2 ? 0 : 1;
  CHECK(part.pieces[mirror].members.size() == 2);
  CHECK(part.pieces[1 - mirror].members.size() == 3);
}

TEST_CASE("average projects onto invariants") {
  GroupAction act = z2_flip_x(1);
  ScalarField odd = parse_expr("x", 1);
  ScalarField even = parse_expr("x^2 + 3", 1);
  ScalarField avg_odd = average(odd, act);
  ScalarField avg_even = average(even, act);
  for (double x : {-1.3, 0.2, 0.9}) {
    CHECK(std::abs(avg_odd.eval(vec1(x))) <= 1e-12);
    CHECK(avg_even.eval(vec1(x)) == doctest::Approx(x * x + 3).epsilon(1e-12));
  }
}

TEST_CASE("average_field produces an invariant field") {
  GroupAction act = z2_flip_x(2);
  VectorField skew = make_field(2, {"1 + x", "y"});
  VectorField avg = average_field(skew, act);
  // the constant x-component averages away, x d/dx survives
  CHECK((avg.eval(vec2(0.5, 0.3)) - vec2(0.5, 0.3)).norm() <= 1e-12);
  CHECK(invariance_defect(avg, act, 50, 7) <= 1e-10);
  CHECK(invariance_defect(skew, act, 50, 7) > 0.5);
}

TEST_CASE("circle averaging acts as the angular mean") {
  GroupAction act = GroupAction::circle({1}, 2);
  VectorField radial = make_field(2, {"x", "y"});
  CHECK(invariance_defect(radial, act, 50, 7) <= 1e-9);
  VectorField constant = make_field(2, {"1", "0"});
  VectorField avg = average_field(constant, act);
  CHECK(avg.eval(vec2(0.8, -0.3)).norm() <= 1e-9);
}

TEST_CASE("hilbert map invariance and orbit separation") {
  GroupAction act = z2_flip_x(1);
  HilbertMap hmap;
  hmap.generators.push_back(parse_expr("x^2", 1));
  CHECK(hilbert_invariance_defect(hmap, act, 100, 5) <= 1e-12);
  std::vector<Eigen::VectorXd> cloud{vec1(-1), vec1(1), vec1(0.5), vec1(-0.5), vec1(0)};
  HilbertPush push = hilbert_push(act, hmap, cloud);
  CHECK(push.separation_failures.empty());
  // mirrored points map to the same image
  CHECK(std::abs(push.images(0, 0) - push.images(0, 1)) <= 1e-12);
  // a non-invariant generator has a visible defect
  HilbertMap bad;
  bad.generators.push_back(parse_expr("x", 1));
  CHECK(hilbert_invariance_defect(bad, act, 100, 5) > 0.5);
}

TEST_CASE("push_field rewrites X(sigma) in the generators") {
  GroupAction act = z2_flip_x(1);
  HilbertMap hmap;
  hmap.generators.push_back(parse_expr("x^2", 1));
  // X = x d/dx is invariant and pushes to 2 u1 d/du1
  VectorField x = make_field(1, {"x"});
  VectorField pushed = push_field(x, hmap);
  REQUIRE(pushed.ambient_dim() == 1);
  CHECK(pushed.eval(vec1(3.0))(0) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(pushed.eval(vec1(0.0))(0) == doctest::Approx(0.0).epsilon(1e-12));
  // the translation field is not invariant: X(x^2) = 2x has no expression in
  // u1 = x^2
  VectorField bad = make_field(1, {"1"});
  CHECK_THROWS_AS(push_field(bad, hmap), rewrite_error);
  (void)act;
}

TEST_CASE("theorem4_check agrees for the reflection on the line") {
  GroupAction act = z2_flip_x(1);
  HilbertMap hmap;
  hmap.generators.push_back(parse_expr("x^2", 1));
  std::vector<Eigen::VectorXd> cloud{vec1(-1), vec1(-0.6), vec1(-0.3), vec1(0),
                                     vec1(0.3), vec1(0.6), vec1(1)};
  // an explicit link radius below the contraction gap near the fixed point:
  // the image of 0.3 flows down to 0.09 * e^{-2}, which mean-NN linking
  // would merge with the fixed origin
  Theorem4Options opt;
  opt.link_radius = 0.008;
  Theorem4Report rep = theorem4_check(act, hmap, 2, cloud, 41, opt);
  CHECK(rep.agree);
  CHECK(rep.witnesses.empty());
  CHECK(rep.field_invariance_defect <= 1e-9);
  // the partition has the fixed origin apart from the free points
  REQUIRE(rep.types.pieces.size() == 2);
}
