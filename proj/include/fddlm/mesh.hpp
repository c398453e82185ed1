#ifndef FDDLM_MESH_HPP
#define FDDLM_MESH_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fddlm/errors.hpp"

namespace fddlm
{

struct Point2
{
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }

enum class DomainKind
{
  square,
  disk
};

// Provenance of a vertex relative to the next coarser level. Grid transfer
// operators are built from these records, never from coordinates, so the
// radial projection of disk boundary midpoints does not disturb them.
struct VertexOrigin
{
  enum class Kind : std::uint8_t
  {
    copied,        // a = coarse vertex index
    edge_midpoint, // a, b = coarse endpoint vertex indices
    cell_center    // a = coarse cell index
  };
  Kind kind = Kind::copied;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
};

struct MeshLevel
{
  std::vector<Point2> vertices;
  // Vertex index tuples in counterclockwise order; the bilinear map from the
  // unit reference square has positive Jacobian on every cell.
  std::vector<std::array<std::uint32_t, 4>> cells;
  std::vector<char> boundary_vertex;
  std::vector<std::uint32_t> parent_cell;  // empty on the coarsest level
  std::vector<VertexOrigin> vertex_origin; // empty on the coarsest level

  std::size_t n_vertices() const { return vertices.size(); }
  std::size_t n_cells() const { return cells.size(); }
};

struct MeshHierarchy
{
  DomainKind kind = DomainKind::square;
  double extent = 1.0; // half-width of the square, or the disk radius
  std::vector<MeshLevel> levels;

  int n_levels() const { return static_cast<int>(levels.size()); }

  // Levels are numbered from 1 (coarsest). Level k of the square has
  // 4^(k-1) cells; level k of the disk has 5 * 4^(k-1).
  const MeshLevel &level(int level_number) const
  {
    if (level_number < 1 || level_number > n_levels())
      throw std::invalid_argument("mesh level number out of range");
    return levels[static_cast<std::size_t>(level_number) - 1];
  }
};

//----------------------------------------------------------------------
// Square hierarchy
//----------------------------------------------------------------------

// Uniform n x n grids on [-half_width, half_width]^2 with n = 2^(k-1).
// Coordinates are computed from one closed-form expression per level so that
// a coarse vertex and the fine vertex at the same lattice position are
// bit-identical doubles.
inline MeshHierarchy build_square_hierarchy(double half_width, int n_levels)
{
  if (!(half_width > 0.0))
    throw std::invalid_argument("square half-width must be positive");
  if (n_levels < 1)
    throw std::invalid_argument("need at least one mesh level");

  MeshHierarchy hierarchy;
  hierarchy.kind = DomainKind::square;
  hierarchy.extent = half_width;

  const double side = 2.0 * half_width;
  for (int k = 1; k <= n_levels; ++k)
    {
      const std::uint32_t n = 1u << (k - 1);
      MeshLevel level;
      level.vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
      level.boundary_vertex.reserve(level.vertices.capacity());
      for (std::uint32_t iy = 0; iy <= n; ++iy)
        for (std::uint32_t ix = 0; ix <= n; ++ix)
          {
            level.vertices.push_back({-half_width + (ix * side) / n,
                                      -half_width + (iy * side) / n});
            level.boundary_vertex.push_back(ix == 0 || ix == n || iy == 0 || iy == n);
          }

      const auto vid = [n](std::uint32_t ix, std::uint32_t iy) {
        return iy * (n + 1) + ix;
      };
      level.cells.reserve(static_cast<std::size_t>(n) * n);
      for (std::uint32_t cy = 0; cy < n; ++cy)
        for (std::uint32_t cx = 0; cx < n; ++cx)
          level.cells.push_back({vid(cx, cy), vid(cx + 1, cy), vid(cx + 1, cy + 1), vid(cx, cy + 1)});

      if (k > 1)
        {
          const std::uint32_t nc = n / 2;
          level.parent_cell.reserve(level.n_cells());
          for (std::uint32_t cy = 0; cy < n; ++cy)
            for (std::uint32_t cx = 0; cx < n; ++cx)
              level.parent_cell.push_back((cy / 2) * nc + (cx / 2));

          const auto coarse_vid = [nc](std::uint32_t ix, std::uint32_t iy) {
            return iy * (nc + 1) + ix;
          };
          level.vertex_origin.reserve(level.n_vertices());
          for (std::uint32_t iy = 0; iy <= n; ++iy)
            for (std::uint32_t ix = 0; ix <= n; ++ix)
              {
                VertexOrigin origin;
                const bool ex = (ix % 2 == 0), ey = (iy % 2 == 0);
                if (ex && ey)
                  origin = {VertexOrigin::Kind::copied, coarse_vid(ix / 2, iy / 2), 0};
                else if (!ex && ey)
                  origin = {VertexOrigin::Kind::edge_midpoint,
                            coarse_vid(ix / 2, iy / 2), coarse_vid(ix / 2 + 1, iy / 2)};
                else if (ex && !ey)
                  origin = {VertexOrigin::Kind::edge_midpoint,
                            coarse_vid(ix / 2, iy / 2), coarse_vid(ix / 2, iy / 2 + 1)};
                else
                  origin = {VertexOrigin::Kind::cell_center, (iy / 2) * nc + (ix / 2), 0};
                level.vertex_origin.push_back(origin);
              }
        }

      hierarchy.levels.push_back(std::move(level));
    }
  return hierarchy;
}

//----------------------------------------------------------------------
// Disk hierarchy
//----------------------------------------------------------------------

// Coarsest disk decomposition: a center square whose corners sit at
// (+-0.35 r, +-0.35 r) (half-diagonal 0.7 r / sqrt 2) plus four trapezoids
// reaching out to circle vertices on the diagonals.
inline MeshLevel make_disk_coarse_level(double radius)
{
  const double c = 0.35 * radius;
  const double d = radius / std::sqrt(2.0);
  MeshLevel level;
  level.vertices = {{-c, -c}, {c, -c}, {c, c}, {-c, c},
                    {-d, -d}, {d, -d}, {d, d}, {-d, d}};
  level.cells = {{0, 1, 2, 3},  // center square
                 {4, 5, 1, 0},  // south
                 {5, 6, 2, 1},  // east
                 {6, 7, 3, 2},  // north
                 {7, 4, 0, 3}}; // west
  level.boundary_vertex = {0, 0, 0, 0, 1, 1, 1, 1};
  return level;
}

// One refinement sweep: every cell splits into four children through edge
// midpoints and the cell center. Midpoints of boundary edges are projected
// radially onto the circle; everything else is plain midpoint arithmetic.
// Coarse vertices are copied verbatim and keep their indices.
inline MeshLevel refine_disk_level(const MeshLevel &coarse, double radius)
{
  MeshLevel fine;
  fine.vertices = coarse.vertices;
  fine.boundary_vertex.assign(coarse.boundary_vertex.begin(), coarse.boundary_vertex.end());
  fine.vertex_origin.resize(coarse.n_vertices());
  for (std::uint32_t v = 0; v < coarse.n_vertices(); ++v)
    fine.vertex_origin[v] = {VertexOrigin::Kind::copied, v, 0};

  using Edge = std::pair<std::uint32_t, std::uint32_t>;
  std::map<Edge, int> edge_count;
  for (const auto &cell : coarse.cells)
    for (int e = 0; e < 4; ++e)
      {
        const std::uint32_t a = cell[e], b = cell[(e + 1) % 4];
        ++edge_count[{std::min(a, b), std::max(a, b)}];
      }

  std::map<Edge, std::uint32_t> midpoint_of;
  const auto edge_midpoint = [&](std::uint32_t a, std::uint32_t b) {
    const Edge key{std::min(a, b), std::max(a, b)};
    if (const auto it = midpoint_of.find(key); it != midpoint_of.end())
      return it->second;
    Point2 m = 0.5 * (fine.vertices[key.first] + fine.vertices[key.second]);
    const bool on_boundary = edge_count.at(key) == 1;
    if (on_boundary)
      m = (radius / norm(m)) * m;
    const auto id = static_cast<std::uint32_t>(fine.vertices.size());
    fine.vertices.push_back(m);
    fine.boundary_vertex.push_back(on_boundary);
    fine.vertex_origin.push_back({VertexOrigin::Kind::edge_midpoint, key.first, key.second});
    midpoint_of.emplace(key, id);
    return id;
  };

  fine.cells.reserve(4 * coarse.n_cells());
  fine.parent_cell.reserve(4 * coarse.n_cells());
  for (std::uint32_t c = 0; c < coarse.n_cells(); ++c)
    {
      const auto &cell = coarse.cells[c];
      const std::uint32_t m01 = edge_midpoint(cell[0], cell[1]);
      const std::uint32_t m12 = edge_midpoint(cell[1], cell[2]);
      const std::uint32_t m23 = edge_midpoint(cell[2], cell[3]);
      const std::uint32_t m30 = edge_midpoint(cell[3], cell[0]);

      const Point2 center = 0.25 * (fine.vertices[cell[0]] + fine.vertices[cell[1]] +
                                    fine.vertices[cell[2]] + fine.vertices[cell[3]]);
      const auto ctr = static_cast<std::uint32_t>(fine.vertices.size());
      fine.vertices.push_back(center);
      fine.boundary_vertex.push_back(0);
      fine.vertex_origin.push_back({VertexOrigin::Kind::cell_center, c, 0});

      fine.cells.push_back({cell[0], m01, ctr, m30});
      fine.cells.push_back({m01, cell[1], m12, ctr});
      fine.cells.push_back({ctr, m12, cell[2], m23});
      fine.cells.push_back({m30, ctr, m23, cell[3]});
      for (int q = 0; q < 4; ++q)
        fine.parent_cell.push_back(c);
    }
  return fine;
}

inline MeshHierarchy build_disk_hierarchy(double radius, int n_levels)
{
  if (!(radius > 0.0))
    throw std::invalid_argument("disk radius must be positive");
  if (n_levels < 1)
    throw std::invalid_argument("need at least one mesh level");

  MeshHierarchy hierarchy;
  hierarchy.kind = DomainKind::disk;
  hierarchy.extent = radius;
  hierarchy.levels.push_back(make_disk_coarse_level(radius));
  for (int k = 2; k <= n_levels; ++k)
    hierarchy.levels.push_back(refine_disk_level(hierarchy.levels.back(), radius));
  return hierarchy;
}

//----------------------------------------------------------------------
// Point location (structured square levels only)
//----------------------------------------------------------------------

struct PointLocation
{
  std::uint32_t cell = 0;
  Point2 ref; // reference coordinates in [0,1]^2
};

// O(1) floor arithmetic on the uniform grid. A point that lands exactly on a
// grid line is assigned to the neighboring cell with the smaller index (the
// one where the matching reference coordinate is 1).
inline PointLocation locate_point(const MeshHierarchy &hierarchy, int level_number, Point2 p)
{
  if (hierarchy.kind != DomainKind::square)
    throw std::invalid_argument("locate_point requires a structured square hierarchy");
  const double hw = hierarchy.extent;
  if (p.x < -hw || p.x > hw || p.y < -hw || p.y > hw)
    throw OutOfDomainError("point lies outside the background square");
  hierarchy.level(level_number); // range check
  const std::uint32_t n = 1u << (level_number - 1);

  const auto split = [&](double coord, std::uint32_t &cell_index, double &ref) {
    const double t = (coord + hw) / (2.0 * hw) * n;
    double i = std::floor(t);
    if (i > n - 1)
      i = n - 1; // includes the far boundary, where ref becomes 1
    cell_index = static_cast<std::uint32_t>(i);
    ref = t - i;
    if (ref == 0.0 && cell_index > 0)
      {
        --cell_index;
        ref = 1.0;
      }
  };

  std::uint32_t cx = 0, cy = 0;
  Point2 ref;
  split(p.x, cx, ref.x);
  split(p.y, cy, ref.y);
  return {cy * n + cx, ref};
}

//----------------------------------------------------------------------
// Debug listing
//----------------------------------------------------------------------

// Plain-text dump: one "x y" line per vertex, then one "v0 v1 v2 v3" line
// per cell.
inline void write_debug_listing(const MeshLevel &level, std::ostream &out)
{
  const auto previous = out.precision(17);
  for (const auto &v : level.vertices)
    out << v.x << ' ' << v.y << '\n';
  for (const auto &c : level.cells)
    out << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << '\n';
  out.precision(previous);
}

} // namespace fddlm

#endif
