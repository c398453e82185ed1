#ifndef FDDLM_ELEMENTS_HPP
#define FDDLM_ELEMENTS_HPP

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fddlm/mesh.hpp"

namespace fddlm
{

//----------------------------------------------------------------------
// Reference elements on the unit square [0,1]^2
//----------------------------------------------------------------------

enum class ElementKind
{
  q1,        // bilinear, one DoF per vertex
  q1_bubble, // bilinear enriched by one interior bubble per cell
  p0         // piecewise constant, one DoF per cell
};

inline int local_dof_count(ElementKind element)
{
  switch (element)
    {
      case ElementKind::q1:
        return 4;
      case ElementKind::q1_bubble:
        return 5;
      case ElementKind::p0:
        return 1;
    }
  throw std::invalid_argument("unknown element kind");
}

inline bool has_vertex_dofs(ElementKind element) { return element != ElementKind::p0; }
inline bool has_bubble_dofs(ElementKind element) { return element == ElementKind::q1_bubble; }

// The bubble takes the value 1 at the cell center and vanishes on the cell
// boundary, so it does not disturb inter-cell continuity.
inline double bubble_value(Point2 r) { return 16.0 * r.x * (1.0 - r.x) * r.y * (1.0 - r.y); }

inline Point2 bubble_gradient(Point2 r)
{
  return {16.0 * (1.0 - 2.0 * r.x) * r.y * (1.0 - r.y),
          16.0 * r.x * (1.0 - r.x) * (1.0 - 2.0 * r.y)};
}

inline double shape_value(ElementKind element, int local_dof, Point2 r)
{
  if (local_dof < 0 || local_dof >= local_dof_count(element))
    throw std::invalid_argument("local shape index out of range");
  if (element == ElementKind::p0)
    return 1.0;
  switch (local_dof)
    {
      case 0:
        return (1.0 - r.x) * (1.0 - r.y);
      case 1:
        return r.x * (1.0 - r.y);
      case 2:
        return r.x * r.y;
      case 3:
        return (1.0 - r.x) * r.y;
      default:
        return bubble_value(r);
    }
}

// Gradient with respect to the reference coordinates.
inline Point2 shape_gradient(ElementKind element, int local_dof, Point2 r)
{
  if (local_dof < 0 || local_dof >= local_dof_count(element))
    throw std::invalid_argument("local shape index out of range");
  if (element == ElementKind::p0)
    return {0.0, 0.0};
  switch (local_dof)
    {
      case 0:
        return {-(1.0 - r.y), -(1.0 - r.x)};
      case 1:
        return {1.0 - r.y, -r.x};
      case 2:
        return {r.y, r.x};
      case 3:
        return {-r.y, 1.0 - r.x};
      default:
        return bubble_gradient(r);
    }
}

//----------------------------------------------------------------------
// Tensor-product Gauss-Legendre quadrature on [0,1]^2
//----------------------------------------------------------------------

struct QuadratureRule
{
  std::vector<Point2> points;
  std::vector<double> weights;
  std::size_t size() const { return points.size(); }
};

// order-q rule: q x q points, exact for polynomials of degree 2q-1 per
// coordinate direction.
inline QuadratureRule gauss_rule(int order)
{
  std::vector<double> g, w;
  switch (order)
    {
      case 1:
        g = {0.0};
        w = {2.0};
        break;
      case 2:
        g = {-0.5773502691896257, 0.5773502691896257};
        w = {1.0, 1.0};
        break;
      case 3:
        g = {-0.7745966692414834, 0.0, 0.7745966692414834};
        w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        break;
      case 4:
        g = {-0.8611363115940526, -0.33998104358485626, 0.33998104358485626, 0.8611363115940526};
        w = {0.34785484513745385, 0.6521451548625461, 0.6521451548625461, 0.34785484513745385};
        break;
      case 5:
        g = {-0.906179845938664, -0.5384693101056831, 0.0, 0.5384693101056831, 0.906179845938664};
        w = {0.23692688505618908, 0.47862867049936647, 0.5688888888888889, 0.47862867049936647,
             0.23692688505618908};
        break;
      default:
        throw std::invalid_argument("gauss_rule supports orders 1 through 5");
    }

  QuadratureRule rule;
  rule.points.reserve(static_cast<std::size_t>(order) * order);
  rule.weights.reserve(rule.points.capacity());
  for (int j = 0; j < order; ++j)
    for (int i = 0; i < order; ++i)
      {
        rule.points.push_back({0.5 * (1.0 + g[i]), 0.5 * (1.0 + g[j])});
        rule.weights.push_back(0.25 * w[i] * w[j]);
      }
  return rule;
}

// Integration of the coupling terms and of anything involving the bubble
// uses the order-3 rule; plain bilinear terms use order 2.
inline int quadrature_order_for(ElementKind a, ElementKind b)
{
  return (has_bubble_dofs(a) || has_bubble_dofs(b)) ? 3 : 2;
}

//----------------------------------------------------------------------
// Bilinear cell geometry
//----------------------------------------------------------------------

struct Jacobian
{
  // [ dx/dxi  dx/deta ]
  // [ dy/dxi  dy/deta ]
  double dxdxi, dxdeta, dydxi, dydeta;
  double det() const { return dxdxi * dydeta - dxdeta * dydxi; }
};

inline std::array<Point2, 4> cell_corners(const MeshLevel &level, std::size_t cell)
{
  const auto &c = level.cells[cell];
  return {level.vertices[c[0]], level.vertices[c[1]], level.vertices[c[2]], level.vertices[c[3]]};
}

inline Point2 map_to_physical(const std::array<Point2, 4> &corners, Point2 r)
{
  Point2 p{0.0, 0.0};
  for (int a = 0; a < 4; ++a)
    p = p + shape_value(ElementKind::q1, a, r) * corners[a];
  return p;
}

inline Jacobian cell_jacobian(const std::array<Point2, 4> &corners, Point2 r)
{
  Jacobian J{0.0, 0.0, 0.0, 0.0};
  for (int a = 0; a < 4; ++a)
    {
      const Point2 g = shape_gradient(ElementKind::q1, a, r);
      J.dxdxi += corners[a].x * g.x;
      J.dxdeta += corners[a].x * g.y;
      J.dydxi += corners[a].y * g.x;
      J.dydeta += corners[a].y * g.y;
    }
  return J;
}

// Push a reference gradient to physical space: g_phys = J^{-T} g_ref.
inline Point2 physical_gradient(const Jacobian &J, Point2 g)
{
  const double det = J.det();
  return {(J.dydeta * g.x - J.dydxi * g.y) / det,
          (-J.dxdeta * g.x + J.dxdxi * g.y) / det};
}

//----------------------------------------------------------------------
// DoF enumeration
//----------------------------------------------------------------------

// Vertex DoFs are numbered by vertex index, bubble DoFs follow by cell index;
// P0 numbers cells directly.
struct FeSpace
{
  ElementKind element = ElementKind::q1;
  const MeshHierarchy *mesh = nullptr;
  int level = 1; // 1-based level number
  std::size_t n_dofs = 0;
  std::vector<std::uint32_t> dof_map; // n_cells * local_dof_count entries
  std::vector<std::uint32_t> boundary_dofs; // ascending

  const MeshLevel &mesh_level() const { return mesh->level(level); }

  std::span<const std::uint32_t> cell_dofs(std::size_t cell) const
  {
    const auto per_cell = static_cast<std::size_t>(local_dof_count(element));
    return {dof_map.data() + cell * per_cell, per_cell};
  }
};

inline FeSpace enumerate_dofs(const MeshHierarchy &mesh, int level, ElementKind element,
                              bool dirichlet_boundary)
{
  const MeshLevel &grid = mesh.level(level);
  FeSpace space;
  space.element = element;
  space.mesh = &mesh;
  space.level = level;

  const std::size_t n_vertices = grid.n_vertices();
  const std::size_t n_cells = grid.n_cells();
  switch (element)
    {
      case ElementKind::q1:
        space.n_dofs = n_vertices;
        break;
      case ElementKind::q1_bubble:
        space.n_dofs = n_vertices + n_cells;
        break;
      case ElementKind::p0:
        space.n_dofs = n_cells;
        break;
    }

  space.dof_map.reserve(n_cells * local_dof_count(element));
  for (std::size_t c = 0; c < n_cells; ++c)
    {
      if (element == ElementKind::p0)
        {
          space.dof_map.push_back(static_cast<std::uint32_t>(c));
          continue;
        }
      for (int v = 0; v < 4; ++v)
        space.dof_map.push_back(grid.cells[c][v]);
      if (element == ElementKind::q1_bubble)
        space.dof_map.push_back(static_cast<std::uint32_t>(n_vertices + c));
    }

  // Only vertex DoFs can carry the Dirichlet constraint; bubbles vanish on
  // cell boundaries and P0 carries no boundary trace.
  if (dirichlet_boundary && has_vertex_dofs(element))
    for (std::uint32_t v = 0; v < n_vertices; ++v)
      if (grid.boundary_vertex[v])
        space.boundary_dofs.push_back(v);

  return space;
}

} // namespace fddlm

#endif
