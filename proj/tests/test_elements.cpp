#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fddlm/elements.hpp"
#include "fddlm/mesh.hpp"

using namespace fddlm;

TEST_CASE("shape functions partition unity and their gradients sum to zero", "[elements]")
{
  std::mt19937 rng(0x2001u);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial)
    {
      const Point2 r{dist(rng), dist(rng)};
      double sum = 0.0;
      Point2 gsum{0.0, 0.0};
      for (int a = 0; a < 4; ++a)
        {
          sum += shape_value(ElementKind::q1, a, r);
          gsum = gsum + shape_gradient(ElementKind::q1, a, r);
        }
      CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-14));
      CHECK_THAT(gsum.x, Catch::Matchers::WithinAbs(0.0, 1e-13));
      CHECK_THAT(gsum.y, Catch::Matchers::WithinAbs(0.0, 1e-13));
    }
}

TEST_CASE("the bubble vanishes on the cell boundary and peaks at one", "[elements]")
{
  CHECK(bubble_value({0.5, 0.5}) == 1.0);
  CHECK(bubble_value({0.0, 0.3}) == 0.0);
  CHECK(bubble_value({1.0, 0.7}) == 0.0);
  CHECK(bubble_value({0.4, 0.0}) == 0.0);
  CHECK(bubble_value({0.4, 1.0}) == 0.0);
  CHECK(shape_value(ElementKind::q1_bubble, 4, {0.5, 0.5}) == 1.0);
  CHECK(local_dof_count(ElementKind::q1) == 4);
  CHECK(local_dof_count(ElementKind::q1_bubble) == 5);
  CHECK(local_dof_count(ElementKind::p0) == 1);
  CHECK_THROWS_AS(shape_value(ElementKind::q1, 4, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(shape_gradient(ElementKind::p0, 1, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("gradients match central differences", "[elements]")
{
  std::mt19937 rng(0x2002u);
  std::uniform_real_distribution<double> dist(0.05, 0.95);
  const double h = 1e-6;
  for (ElementKind element : {ElementKind::q1, ElementKind::q1_bubble})
    for (int a = 0; a < local_dof_count(element); ++a)
      for (int trial = 0; trial < 10; ++trial)
        {
          const Point2 r{dist(rng), dist(rng)};
          const Point2 g = shape_gradient(element, a, r);
          const double dx = (shape_value(element, a, {r.x + h, r.y}) -
                             shape_value(element, a, {r.x - h, r.y})) /
                            (2.0 * h);
          const double dy = (shape_value(element, a, {r.x, r.y + h}) -
                             shape_value(element, a, {r.x, r.y - h})) /
                            (2.0 * h);
          CHECK_THAT(g.x, Catch::Matchers::WithinAbs(dx, 1e-6));
          CHECK_THAT(g.y, Catch::Matchers::WithinAbs(dy, 1e-6));
        }
}

TEST_CASE("quadrature rules integrate monomials to known values", "[elements]")
{
  for (int order = 1; order <= 5; ++order)
    {
      const QuadratureRule rule = gauss_rule(order);
      double total = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q)
        total += rule.weights[q];
      CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-14));
    }

  // A two-point rule is exact through cubic terms.
  const QuadratureRule rule = gauss_rule(2);
  double xy3 = 0.0, bubble = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q)
    {
      const Point2 p = rule.points[q];
      xy3 += rule.weights[q] * p.x * p.x * p.x * p.y * p.y * p.y;
      bubble += rule.weights[q] * bubble_value(p);
    }
  CHECK_THAT(xy3, Catch::Matchers::WithinAbs(1.0 / 16.0, 1e-14));
  CHECK_THAT(bubble, Catch::Matchers::WithinAbs(4.0 / 9.0, 1e-14));

  // The three-point rule must agree on the bubble integral.
  const QuadratureRule rule3 = gauss_rule(3);
  double bubble3 = 0.0;
  for (std::size_t q = 0; q < rule3.size(); ++q)
    bubble3 += rule3.weights[q] * bubble_value(rule3.points[q]);
  CHECK_THAT(bubble3, Catch::Matchers::WithinAbs(4.0 / 9.0, 1e-14));

  CHECK(quadrature_order_for(ElementKind::q1, ElementKind::q1) == 2);
  CHECK(quadrature_order_for(ElementKind::q1, ElementKind::p0) == 2);
  CHECK(quadrature_order_for(ElementKind::q1_bubble, ElementKind::p0) == 3);
  CHECK(quadrature_order_for(ElementKind::q1, ElementKind::q1_bubble) == 3);
}

TEST_CASE("jacobians of axis-aligned cells scale gradients by the side length", "[elements]")
{
  const MeshHierarchy mesh = build_square_hierarchy(1.4, 3);
  const MeshLevel &level = mesh.level(3);
  const double side = 2.8 / 4.0;

  const auto corners = cell_corners(level, 5);
  const Jacobian J = cell_jacobian(corners, {0.3, 0.8});
  CHECK_THAT(J.det(), Catch::Matchers::WithinRel(side * side, 1e-14));

  const Point2 gref = shape_gradient(ElementKind::q1, 2, {0.3, 0.8});
  const Point2 gphys = physical_gradient(J, gref);
  CHECK_THAT(gphys.x, Catch::Matchers::WithinRel(gref.x / side, 1e-13));
  CHECK_THAT(gphys.y, Catch::Matchers::WithinRel(gref.y / side, 1e-13));

  // The bilinear map reproduces corners and center.
  const Point2 p0 = map_to_physical(corners, {0.0, 0.0});
  CHECK(p0.x == corners[0].x);
  CHECK(p0.y == corners[0].y);
  const Point2 pc = map_to_physical(corners, {0.5, 0.5});
  CHECK_THAT(pc.x, Catch::Matchers::WithinAbs(0.25 * (corners[0].x + corners[1].x +
                                                      corners[2].x + corners[3].x),
                                              1e-14));
}

TEST_CASE("dof enumeration matches mesh entities", "[elements]")
{
  const MeshHierarchy square = build_square_hierarchy(1.4, 2);
  const MeshHierarchy disk = build_disk_hierarchy(1.0, 2);

  SECTION("vertex spaces use vertex indices and flag the boundary")
  {
    const FeSpace v = enumerate_dofs(square, 2, ElementKind::q1, true);
    CHECK(v.n_dofs == 9);
    CHECK(v.boundary_dofs.size() == 8);
    const auto dofs = v.cell_dofs(0);
    REQUIRE(dofs.size() == 4);
    CHECK(dofs[0] == square.level(2).cells[0][0]);
    CHECK(dofs[3] == square.level(2).cells[0][3]);
  }

  SECTION("no boundary handling without the constraint flag")
  {
    const FeSpace v = enumerate_dofs(square, 2, ElementKind::q1, false);
    CHECK(v.boundary_dofs.empty());
  }

  SECTION("the enriched space appends one bubble per cell")
  {
    const FeSpace v2 = enumerate_dofs(disk, 1, ElementKind::q1_bubble, false);
    CHECK(v2.n_dofs == 13); // 8 vertices + 5 cells
    const auto dofs = v2.cell_dofs(2);
    REQUIRE(dofs.size() == 5);
    CHECK(dofs[4] == 8 + 2);
  }

  SECTION("piecewise constants are cell indexed with no boundary dofs")
  {
    const FeSpace lambda = enumerate_dofs(disk, 2, ElementKind::p0, true);
    CHECK(lambda.n_dofs == 20);
    CHECK(lambda.boundary_dofs.empty());
    CHECK(lambda.cell_dofs(7)[0] == 7);
  }
}
