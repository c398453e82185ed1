#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "fddlm/elements.hpp" // cell_corners / map_to_physical for round trips
#include "fddlm/mesh.hpp"

using namespace fddlm;

namespace
{
  double shoelace_area(const MeshLevel &level, std::size_t cell)
  {
    double area = 0.0;
    for (int k = 0; k < 4; ++k)
      {
        const Point2 a = level.vertices[level.cells[cell][k]];
        const Point2 b = level.vertices[level.cells[cell][(k + 1) % 4]];
        area += a.x * b.y - b.x * a.y;
      }
    return 0.5 * area;
  }

  double mesh_area(const MeshLevel &level)
  {
    double area = 0.0;
    for (std::size_t c = 0; c < level.n_cells(); ++c)
      area += shoelace_area(level, c);
    return area;
  }
} // namespace

TEST_CASE("square hierarchy has the expected counts and coordinates", "[mesh]")
{
  const MeshHierarchy mesh = build_square_hierarchy(1.4, 4);
  REQUIRE(mesh.n_levels() == 4);

  const MeshLevel &l4 = mesh.level(4);
  CHECK(l4.n_cells() == 64);
  CHECK(l4.n_vertices() == 81);

  std::size_t boundary = 0;
  for (char b : l4.boundary_vertex)
    boundary += b != 0;
  CHECK(boundary == 32);

  // Corners sit exactly on the box.
  CHECK(l4.vertices.front().x == -1.4);
  CHECK(l4.vertices.front().y == -1.4);
  CHECK(l4.vertices.back().x == 1.4);
  CHECK(l4.vertices.back().y == 1.4);

  // Total area is exact.
  CHECK_THAT(mesh_area(l4), Catch::Matchers::WithinRel(2.8 * 2.8, 1e-14));

  CHECK_THROWS_AS(mesh.level(0), std::invalid_argument);
  CHECK_THROWS_AS(mesh.level(5), std::invalid_argument);
}

TEST_CASE("square refinement nests vertices bit-exactly", "[mesh]")
{
  const MeshHierarchy mesh = build_square_hierarchy(1.4, 5);
  for (int k = 2; k <= 5; ++k)
    {
      const MeshLevel &fine = mesh.level(k);
      const MeshLevel &coarse = mesh.level(k - 1);
      REQUIRE(fine.vertex_origin.size() == fine.n_vertices());
      for (std::size_t v = 0; v < fine.n_vertices(); ++v)
        {
          const VertexOrigin origin = fine.vertex_origin[v];
          if (origin.kind == VertexOrigin::Kind::copied)
            {
              // bit-exact, not merely close
              CHECK(fine.vertices[v].x == coarse.vertices[origin.a].x);
              CHECK(fine.vertices[v].y == coarse.vertices[origin.a].y);
            }
          else if (origin.kind == VertexOrigin::Kind::edge_midpoint)
            {
              const Point2 m = 0.5 * (coarse.vertices[origin.a] + coarse.vertices[origin.b]);
              CHECK_THAT(fine.vertices[v].x, Catch::Matchers::WithinAbs(m.x, 1e-15));
              CHECK_THAT(fine.vertices[v].y, Catch::Matchers::WithinAbs(m.y, 1e-15));
            }
        }
    }
}

TEST_CASE("square cells are counterclockwise with correct parents", "[mesh]")
{
  const MeshHierarchy mesh = build_square_hierarchy(1.4, 4);
  for (int k = 1; k <= 4; ++k)
    {
      const MeshLevel &level = mesh.level(k);
      for (std::size_t c = 0; c < level.n_cells(); ++c)
        CHECK(shoelace_area(level, c) > 0.0);
    }
  for (int k = 2; k <= 4; ++k)
    {
      const MeshLevel &fine = mesh.level(k);
      const MeshLevel &coarse = mesh.level(k - 1);
      REQUIRE(fine.parent_cell.size() == fine.n_cells());
      for (std::size_t c = 0; c < fine.n_cells(); ++c)
        {
          // Child centroid falls inside the parent's bounding box.
          Point2 centroid{0.0, 0.0};
          for (int i = 0; i < 4; ++i)
            centroid = centroid + 0.25 * fine.vertices[fine.cells[c][i]];
          const auto &pc = coarse.cells[fine.parent_cell[c]];
          double x_lo = 1e30, x_hi = -1e30, y_lo = 1e30, y_hi = -1e30;
          for (int i = 0; i < 4; ++i)
            {
              x_lo = std::min(x_lo, coarse.vertices[pc[i]].x);
              x_hi = std::max(x_hi, coarse.vertices[pc[i]].x);
              y_lo = std::min(y_lo, coarse.vertices[pc[i]].y);
              y_hi = std::max(y_hi, coarse.vertices[pc[i]].y);
            }
          CHECK(centroid.x > x_lo);
          CHECK(centroid.x < x_hi);
          CHECK(centroid.y > y_lo);
          CHECK(centroid.y < y_hi);
        }
    }
}

TEST_CASE("disk coarse level is the five-block layout", "[mesh]")
{
  const MeshLevel coarse = make_disk_coarse_level(1.0);
  CHECK(coarse.n_vertices() == 8);
  CHECK(coarse.n_cells() == 5);

  std::size_t boundary = 0;
  for (char b : coarse.boundary_vertex)
    boundary += b != 0;
  CHECK(boundary == 4);

  // Boundary vertices lie exactly on the circle, interior ones inside it.
  for (std::size_t v = 0; v < coarse.n_vertices(); ++v)
    {
      const double r = norm(coarse.vertices[v]);
      if (coarse.boundary_vertex[v])
        CHECK_THAT(r, Catch::Matchers::WithinRel(1.0, 1e-14));
      else
        CHECK(r < 1.0);
    }
  for (std::size_t c = 0; c < coarse.n_cells(); ++c)
    CHECK(shoelace_area(coarse, c) > 0.0);
}

TEST_CASE("disk refinement projects boundary vertices and stays oriented", "[mesh]")
{
  const double radius = 1.0;
  const MeshHierarchy disk = build_disk_hierarchy(radius, 5);
  for (int k = 1; k <= 5; ++k)
    {
      const MeshLevel &level = disk.level(k);
      const std::size_t n = 1ull << (k - 1);
      CHECK(level.n_cells() == 5 * n * n);

      std::size_t boundary = 0;
      for (std::size_t v = 0; v < level.n_vertices(); ++v)
        if (level.boundary_vertex[v])
          {
            ++boundary;
            CHECK_THAT(norm(level.vertices[v]), Catch::Matchers::WithinRel(radius, 1e-14));
          }
      CHECK(boundary == 4 * n);
      // Euler count for a closed quad disk: V = C + B/2 + 1.
      CHECK(level.n_vertices() == level.n_cells() + boundary / 2 + 1);

      for (std::size_t c = 0; c < level.n_cells(); ++c)
        CHECK(shoelace_area(level, c) > 0.0);
    }
}

TEST_CASE("disk polygon area converges to the circle area at fourth order in cells", "[mesh]")
{
  const MeshHierarchy disk = build_disk_hierarchy(1.0, 5);
  const double pi = 3.14159265358979323846;
  const double d4 = pi - mesh_area(disk.level(4));
  const double d5 = pi - mesh_area(disk.level(5));
  CHECK(d4 > 0.0);
  CHECK(d5 > 0.0);
  CHECK(d4 < 2.5e-2);
  CHECK(d5 < 1e-2);
  // Halving h cuts the deficit by about four.
  CHECK(d4 / d5 > 3.5);
  CHECK(d4 / d5 < 4.5);
}

TEST_CASE("point location finds the enclosing cell with exact reference coordinates", "[mesh]")
{
  const MeshHierarchy mesh = build_square_hierarchy(1.4, 4);

  SECTION("random points map back to themselves")
  {
    std::mt19937 rng(0x9001u);
    std::uniform_real_distribution<double> dist(-1.4, 1.4);
    for (int trial = 0; trial < 200; ++trial)
      {
        const Point2 p{dist(rng), dist(rng)};
        const PointLocation loc = locate_point(mesh, 4, p);
        REQUIRE(loc.cell < mesh.level(4).n_cells());
        const auto corners = cell_corners(mesh.level(4), loc.cell);
        const Point2 q = map_to_physical(corners, loc.ref);
        CHECK_THAT(q.x, Catch::Matchers::WithinAbs(p.x, 1e-12));
        CHECK_THAT(q.y, Catch::Matchers::WithinAbs(p.y, 1e-12));
        CHECK(loc.ref.x >= 0.0);
        CHECK(loc.ref.x <= 1.0);
        CHECK(loc.ref.y >= 0.0);
        CHECK(loc.ref.y <= 1.0);
      }
  }

  SECTION("interior grid lines resolve to the lower cell")
  {
    // x = 0 is a gridline at level 2 (2x2 cells); the tie goes to the cell
    // on the smaller-index side with reference coordinate exactly 1.
    const PointLocation loc = locate_point(mesh, 2, {0.0, -0.7});
    CHECK(loc.cell == 0);
    CHECK(loc.ref.x == 1.0);
  }

  SECTION("domain corners and edges are inside")
  {
    CHECK_NOTHROW(locate_point(mesh, 3, {-1.4, -1.4}));
    CHECK_NOTHROW(locate_point(mesh, 3, {1.4, 1.4}));
    CHECK_NOTHROW(locate_point(mesh, 3, {1.4, 0.3}));
  }

  SECTION("outside points throw")
  {
    CHECK_THROWS_AS(locate_point(mesh, 3, {1.41, 0.0}), OutOfDomainError);
    CHECK_THROWS_AS(locate_point(mesh, 3, {0.0, -1.5}), OutOfDomainError);
  }

  SECTION("only the structured hierarchy supports location")
  {
    const MeshHierarchy disk = build_disk_hierarchy(1.0, 2);
    CHECK_THROWS_AS(locate_point(disk, 2, {0.0, 0.0}), std::invalid_argument);
  }
}

TEST_CASE("debug listing writes vertices then connectivity", "[mesh]")
{
  const MeshHierarchy mesh = build_square_hierarchy(1.4, 2);
  std::ostringstream out;
  write_debug_listing(mesh.level(2), out);

  std::istringstream in(out.str());
  std::string line;
  std::size_t vertex_lines = 0, cell_lines = 0;
  const MeshLevel &level = mesh.level(2);
  while (std::getline(in, line))
    {
      std::istringstream fields(line);
      if (vertex_lines < level.n_vertices())
        {
          double x, y;
          REQUIRE((fields >> x >> y));
          CHECK_THAT(x, Catch::Matchers::WithinAbs(level.vertices[vertex_lines].x, 1e-15));
          CHECK_THAT(y, Catch::Matchers::WithinAbs(level.vertices[vertex_lines].y, 1e-15));
          ++vertex_lines;
        }
      else
        {
          unsigned v0, v1, v2, v3;
          REQUIRE((fields >> v0 >> v1 >> v2 >> v3));
          const auto &cell = level.cells[cell_lines];
          CHECK(v0 == cell[0]);
          CHECK(v1 == cell[1]);
          CHECK(v2 == cell[2]);
          CHECK(v3 == cell[3]);
          ++cell_lines;
        }
    }
  CHECK(vertex_lines == level.n_vertices());
  CHECK(cell_lines == level.n_cells());
}
