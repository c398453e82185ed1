#ifndef FDDLM_ASSEMBLY_HPP
#define FDDLM_ASSEMBLY_HPP

#include <cstdint>
#include <iostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fddlm/csr.hpp"
#include "fddlm/elements.hpp"
#include "fddlm/errors.hpp"
#include "fddlm/mesh.hpp"

namespace fddlm
{

enum class CouplingMode
{
  l2, // (mu, v) in L2 on the disk
  h1  // (mu, v) + (grad mu, grad v), unweighted
};

enum class ElementChoice
{
  element1, // Q1 immersed velocity, Q1 multiplier (admits both coupling modes)
  element2  // Q1+bubble immersed velocity, P0 multiplier (L2 coupling only)
};

// Data of the continuous problem: -div(beta grad u) = f on the background
// square, coefficient beta2 and load f2 inside the immersed disk. The
// operator splitting assembles A2 with coefficient beta2 - beta and the disk
// load with f2 - f, so beta2 > beta is required for the saddle system to be
// well posed.
struct ProblemConfig
{
  double beta = 1.0;
  double beta2 = 10.0;
  double f = 1.0;
  double f2 = 1.0;
  CouplingMode coupling = CouplingMode::l2;
  ElementChoice element = ElementChoice::element1;
  bool allow_degenerate_contrast = false;

  void validate(std::ostream *warnings = nullptr) const
  {
    if (!(beta > 0.0))
      throw std::invalid_argument("beta must be positive");
    if (!(beta2 > beta))
      {
        if (!allow_degenerate_contrast)
          throw std::invalid_argument("beta2 must exceed beta (override to experiment anyway)");
        if (warnings)
          *warnings << "warning: beta2 <= beta voids the invertibility guarantee of the "
                       "immersed block\n";
      }
    if (element == ElementChoice::element2 && coupling == CouplingMode::h1)
      throw UnsupportedPairingError(
        "piecewise-constant multipliers cannot pair with the H1 coupling product");
  }
};

inline ElementKind immersed_element(ElementChoice choice)
{
  return choice == ElementChoice::element1 ? ElementKind::q1 : ElementKind::q1_bubble;
}

inline ElementKind multiplier_element(ElementChoice choice)
{
  return choice == ElementChoice::element1 ? ElementKind::q1 : ElementKind::p0;
}

//----------------------------------------------------------------------
// Cell loops
//----------------------------------------------------------------------

// (coefficient * grad u, grad v) over the space's mesh level.
inline CsrMatrix assemble_stiffness(const FeSpace &space, double coefficient)
{
  const MeshLevel &grid = space.mesh_level();
  const int n_local = local_dof_count(space.element);
  const QuadratureRule quad = gauss_rule(quadrature_order_for(space.element, space.element));

  std::vector<Triplet> triplets;
  triplets.reserve(grid.n_cells() * n_local * n_local);
  std::vector<Point2> grads(static_cast<std::size_t>(n_local));
  for (std::size_t c = 0; c < grid.n_cells(); ++c)
    {
      const auto corners = cell_corners(grid, c);
      const auto dofs = space.cell_dofs(c);
      for (std::size_t q = 0; q < quad.size(); ++q)
        {
          const Jacobian J = cell_jacobian(corners, quad.points[q]);
          const double weight = quad.weights[q] * J.det();
          for (int a = 0; a < n_local; ++a)
            grads[a] = physical_gradient(J, shape_gradient(space.element, a, quad.points[q]));
          for (int a = 0; a < n_local; ++a)
            for (int b = 0; b < n_local; ++b)
              triplets.push_back({dofs[a], dofs[b],
                                  coefficient * weight *
                                    (grads[a].x * grads[b].x + grads[a].y * grads[b].y)});
        }
    }
  return CsrMatrix::from_triplets(space.n_dofs, space.n_dofs, std::move(triplets));
}

// Coupling matrix between two spaces living on the same mesh level: rows are
// multiplier DoFs, columns are immersed-velocity DoFs.
inline CsrMatrix assemble_coupling(const FeSpace &lambda_space, const FeSpace &v2_space,
                                   CouplingMode mode)
{
  if (lambda_space.mesh != v2_space.mesh || lambda_space.level != v2_space.level)
    throw std::invalid_argument("coupling spaces must share one mesh level");
  if (mode == CouplingMode::h1 && !has_vertex_dofs(lambda_space.element))
    throw UnsupportedPairingError(
      "H1 coupling needs multipliers with a square-integrable gradient");

  const MeshLevel &grid = lambda_space.mesh_level();
  const int n_rows_local = local_dof_count(lambda_space.element);
  const int n_cols_local = local_dof_count(v2_space.element);
  const QuadratureRule quad =
    gauss_rule(quadrature_order_for(lambda_space.element, v2_space.element));

  std::vector<Triplet> triplets;
  triplets.reserve(grid.n_cells() * n_rows_local * n_cols_local);
  for (std::size_t c = 0; c < grid.n_cells(); ++c)
    {
      const auto corners = cell_corners(grid, c);
      const auto row_dofs = lambda_space.cell_dofs(c);
      const auto col_dofs = v2_space.cell_dofs(c);
      for (std::size_t q = 0; q < quad.size(); ++q)
        {
          const Jacobian J = cell_jacobian(corners, quad.points[q]);
          const double weight = quad.weights[q] * J.det();
          for (int a = 0; a < n_rows_local; ++a)
            {
              const double mu = shape_value(lambda_space.element, a, quad.points[q]);
              const Point2 gmu =
                mode == CouplingMode::h1
                  ? physical_gradient(J, shape_gradient(lambda_space.element, a, quad.points[q]))
                  : Point2{0.0, 0.0};
              for (int b = 0; b < n_cols_local; ++b)
                {
                  const double phi = shape_value(v2_space.element, b, quad.points[q]);
                  double entry = mu * phi;
                  if (mode == CouplingMode::h1)
                    {
                      const Point2 gphi = physical_gradient(
                        J, shape_gradient(v2_space.element, b, quad.points[q]));
                      entry += gmu.x * gphi.x + gmu.y * gphi.y;
                    }
                  triplets.push_back({row_dofs[a], col_dofs[b], weight * entry});
                }
            }
        }
    }
  return CsrMatrix::from_triplets(lambda_space.n_dofs, v2_space.n_dofs, std::move(triplets));
}

// Coupling of disk multipliers against the background space: quadrature runs
// over the disk cells; each physical quadrature point is located in the
// background grid and the background shapes are evaluated there. Always uses
// the order-3 rule since the integrand mixes two unrelated meshes.
inline CsrMatrix assemble_background_coupling(const FeSpace &lambda_space,
                                              const FeSpace &v_space, CouplingMode mode)
{
  if (v_space.mesh->kind != DomainKind::square)
    throw std::invalid_argument("background space must live on the square hierarchy");
  if (mode == CouplingMode::h1 && !has_vertex_dofs(lambda_space.element))
    throw UnsupportedPairingError(
      "H1 coupling needs multipliers with a square-integrable gradient");

  const MeshLevel &disk = lambda_space.mesh_level();
  const MeshLevel &background = v_space.mesh_level();
  const int n_rows_local = local_dof_count(lambda_space.element);
  const QuadratureRule quad = gauss_rule(3);

  std::vector<Triplet> triplets;
  triplets.reserve(disk.n_cells() * n_rows_local * 4 * quad.size() / 2);
  for (std::size_t c = 0; c < disk.n_cells(); ++c)
    {
      const auto corners = cell_corners(disk, c);
      const auto row_dofs = lambda_space.cell_dofs(c);
      for (std::size_t q = 0; q < quad.size(); ++q)
        {
          const Jacobian J = cell_jacobian(corners, quad.points[q]);
          const double weight = quad.weights[q] * J.det();
          const Point2 p = map_to_physical(corners, quad.points[q]);

          const PointLocation loc = locate_point(*v_space.mesh, v_space.level, p);
          const auto col_dofs = v_space.cell_dofs(loc.cell);
          const auto bg_corners = cell_corners(background, loc.cell);
          const Jacobian Jbg = cell_jacobian(bg_corners, loc.ref);

          for (int a = 0; a < n_rows_local; ++a)
            {
              const double mu = shape_value(lambda_space.element, a, quad.points[q]);
              const Point2 gmu =
                mode == CouplingMode::h1
                  ? physical_gradient(J, shape_gradient(lambda_space.element, a, quad.points[q]))
                  : Point2{0.0, 0.0};
              for (int b = 0; b < 4; ++b)
                {
                  const double phi = shape_value(ElementKind::q1, b, loc.ref);
                  double entry = mu * phi;
                  if (mode == CouplingMode::h1)
                    {
                      const Point2 gphi =
                        physical_gradient(Jbg, shape_gradient(ElementKind::q1, b, loc.ref));
                      entry += gmu.x * gphi.x + gmu.y * gphi.y;
                    }
                  triplets.push_back({row_dofs[a], col_dofs[b], weight * entry});
                }
            }
        }
    }
  return CsrMatrix::from_triplets(lambda_space.n_dofs, v_space.n_dofs, std::move(triplets));
}

// Load vector scale * (1, phi_j) over the space's mesh level.
inline std::vector<double> assemble_load(const FeSpace &space, double scale)
{
  const MeshLevel &grid = space.mesh_level();
  const int n_local = local_dof_count(space.element);
  const QuadratureRule quad = gauss_rule(quadrature_order_for(space.element, space.element));

  std::vector<double> load(space.n_dofs, 0.0);
  for (std::size_t c = 0; c < grid.n_cells(); ++c)
    {
      const auto corners = cell_corners(grid, c);
      const auto dofs = space.cell_dofs(c);
      for (std::size_t q = 0; q < quad.size(); ++q)
        {
          const Jacobian J = cell_jacobian(corners, quad.points[q]);
          const double weight = quad.weights[q] * J.det();
          for (int a = 0; a < n_local; ++a)
            load[dofs[a]] += scale * weight * shape_value(space.element, a, quad.points[q]);
        }
    }
  return load;
}

//----------------------------------------------------------------------
// Dirichlet elimination
//----------------------------------------------------------------------

// Symmetric elimination: boundary rows and columns become identity rows with
// the boundary value on the right-hand side; column contributions move to the
// right-hand side of the remaining rows. Boundary values default to zero but
// the bookkeeping is general.
inline std::pair<CsrMatrix, std::vector<double>>
apply_dirichlet(const CsrMatrix &a, const std::vector<double> &rhs,
                std::span<const std::uint32_t> boundary_dofs,
                const std::vector<double> *boundary_values = nullptr)
{
  if (a.n_rows() != a.n_cols() || rhs.size() != a.n_rows())
    throw std::invalid_argument("dirichlet elimination needs a square system");

  std::vector<char> is_boundary(a.n_rows(), 0);
  for (const auto d : boundary_dofs)
    is_boundary[d] = 1;
  const auto value_of = [&](std::uint32_t d) {
    return boundary_values ? (*boundary_values)[d] : 0.0;
  };

  std::vector<double> new_rhs = rhs;
  std::vector<Triplet> triplets;
  triplets.reserve(a.nnz());
  for (std::size_t r = 0; r < a.n_rows(); ++r)
    {
      if (is_boundary[r])
        {
          triplets.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r), 1.0});
          new_rhs[r] = value_of(static_cast<std::uint32_t>(r));
          continue;
        }
      const auto cols = a.row_columns(r);
      const auto vals = a.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k)
        {
          if (is_boundary[cols[k]])
            new_rhs[r] -= vals[k] * value_of(cols[k]);
          else
            triplets.push_back({static_cast<std::uint32_t>(r), cols[k], vals[k]});
        }
    }
  return {CsrMatrix::from_triplets(a.n_rows(), a.n_cols(), std::move(triplets)),
          std::move(new_rhs)};
}

// Drop all entries of the listed columns (used to decouple constrained
// background DoFs from the multiplier equations).
inline CsrMatrix zero_columns(const CsrMatrix &a, std::span<const std::uint32_t> columns)
{
  std::vector<char> drop(a.n_cols(), 0);
  for (const auto c : columns)
    drop[c] = 1;
  std::vector<Triplet> triplets;
  triplets.reserve(a.nnz());
  for (auto &t : a.to_triplets())
    if (!drop[t.col])
      triplets.push_back(t);
  return CsrMatrix::from_triplets(a.n_rows(), a.n_cols(), std::move(triplets));
}

//----------------------------------------------------------------------
// The 3x3 block system
//----------------------------------------------------------------------

// Row layout of the full operator:
//   [ A1   0    C1^T ] [ u  ]   [ F1 ]
//   [ 0    A2  -C2^T ] [ u2 ] = [ F2 ]
//   [ C1  -C2    0   ] [ l  ]   [ 0  ]
struct BlockSystem
{
  FeSpace v_space, v2_space, lambda_space;
  CouplingMode coupling = CouplingMode::l2;
  CsrMatrix a1, a2, c1, c2;
  std::vector<double> f1, f2;

  std::size_t n_v() const { return v_space.n_dofs; }
  std::size_t n_v2() const { return v2_space.n_dofs; }
  std::size_t n_lambda() const { return lambda_space.n_dofs; }
  std::size_t size() const { return n_v() + n_v2() + n_lambda(); }
};

inline BlockSystem assemble_system(const ProblemConfig &config, const MeshHierarchy &background,
                                   const MeshHierarchy &disk, int background_level, int disk_level)
{
  config.validate(&std::cerr);

  BlockSystem system;
  system.coupling = config.coupling;
  system.v_space = enumerate_dofs(background, background_level, ElementKind::q1, true);
  system.v2_space = enumerate_dofs(disk, disk_level, immersed_element(config.element), false);
  system.lambda_space = enumerate_dofs(disk, disk_level, multiplier_element(config.element), false);

  system.a1 = assemble_stiffness(system.v_space, config.beta);
  system.a2 = assemble_stiffness(system.v2_space, config.beta2 - config.beta);
  system.c2 = assemble_coupling(system.lambda_space, system.v2_space, config.coupling);
  system.c1 = assemble_background_coupling(system.lambda_space, system.v_space, config.coupling);

  system.f1 = assemble_load(system.v_space, config.f);
  system.f2 = assemble_load(system.v2_space, config.f2 - config.f);

  auto [a1_bc, f1_bc] =
    apply_dirichlet(system.a1, system.f1, system.v_space.boundary_dofs);
  system.a1 = std::move(a1_bc);
  system.f1 = std::move(f1_bc);
  // The constraint rows must not see the eliminated boundary DoFs either.
  system.c1 = zero_columns(system.c1, system.v_space.boundary_dofs);

  return system;
}

inline CsrMatrix compose_full_matrix(const BlockSystem &s)
{
  const auto nv = static_cast<std::uint32_t>(s.n_v());
  const auto nv2 = static_cast<std::uint32_t>(s.n_v2());
  const std::size_t n = s.size();

  std::vector<Triplet> triplets;
  triplets.reserve(s.a1.nnz() + s.a2.nnz() + 2 * s.c1.nnz() + 2 * s.c2.nnz());
  for (auto t : s.a1.to_triplets())
    triplets.push_back(t);
  for (auto t : s.a2.to_triplets())
    triplets.push_back({nv + t.row, nv + t.col, t.value});
  for (auto t : s.c1.to_triplets())
    {
      triplets.push_back({nv + nv2 + t.row, t.col, t.value});  // C1
      triplets.push_back({t.col, nv + nv2 + t.row, t.value});  // C1^T
    }
  for (auto t : s.c2.to_triplets())
    {
      triplets.push_back({nv + nv2 + t.row, nv + t.col, -t.value}); // -C2
      triplets.push_back({nv + t.col, nv + nv2 + t.row, -t.value}); // -C2^T
    }
  return CsrMatrix::from_triplets(n, n, std::move(triplets));
}

// The immersed sub-block [[A2, -C2^T], [-C2, 0]].
inline CsrMatrix compose_b_matrix(const BlockSystem &s)
{
  const auto nv2 = static_cast<std::uint32_t>(s.n_v2());
  const std::size_t n = s.n_v2() + s.n_lambda();

  std::vector<Triplet> triplets;
  triplets.reserve(s.a2.nnz() + 2 * s.c2.nnz());
  for (auto t : s.a2.to_triplets())
    triplets.push_back(t);
  for (auto t : s.c2.to_triplets())
    {
      triplets.push_back({nv2 + t.row, t.col, -t.value});
      triplets.push_back({t.col, nv2 + t.row, -t.value});
    }
  return CsrMatrix::from_triplets(n, n, std::move(triplets));
}

inline std::vector<double> compose_rhs(const BlockSystem &s)
{
  std::vector<double> rhs;
  rhs.reserve(s.size());
  rhs.insert(rhs.end(), s.f1.begin(), s.f1.end());
  rhs.insert(rhs.end(), s.f2.begin(), s.f2.end());
  rhs.resize(s.size(), 0.0);
  return rhs;
}

} // namespace fddlm

#endif
