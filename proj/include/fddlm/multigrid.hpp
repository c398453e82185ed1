#ifndef FDDLM_MULTIGRID_HPP
#define FDDLM_MULTIGRID_HPP

#include <cmath>
#include <cstdint>
#include <iostream>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "fddlm/assembly.hpp"
#include "fddlm/csr.hpp"
#include "fddlm/elements.hpp"
#include "fddlm/errors.hpp"
#include "fddlm/linalg.hpp"
#include "fddlm/mesh.hpp"

namespace fddlm
{

//----------------------------------------------------------------------
// Grid transfers
//----------------------------------------------------------------------

// Prolongation stored as a sparse fine-by-coarse matrix; restriction is its
// transpose.
struct TransferOperator
{
  CsrMatrix prolongation;

  std::vector<double> prolongate(const std::vector<double> &coarse) const
  {
    return prolongation.apply(coarse);
  }
  std::vector<double> restrict_to_coarse(const std::vector<double> &fine) const
  {
    return prolongation.apply_transpose(fine);
  }
};

namespace detail
{
  // Vertex interpolation weights from the refinement records: coinciding
  // vertices copy, edge midpoints average their two endpoints, cell centers
  // average the four parent-cell corners.
  inline void append_q1_rows(std::vector<Triplet> &triplets, const MeshLevel &fine,
                             const MeshLevel &coarse, std::uint32_t row_offset,
                             std::uint32_t col_offset)
  {
    if (fine.vertex_origin.empty())
      throw std::invalid_argument("transfer needs consecutive levels of one hierarchy");
    for (std::uint32_t v = 0; v < fine.n_vertices(); ++v)
      {
        const VertexOrigin origin = fine.vertex_origin[v];
        const std::uint32_t row = row_offset + v;
        switch (origin.kind)
          {
            case VertexOrigin::Kind::copied:
              triplets.push_back({row, col_offset + origin.a, 1.0});
              break;
            case VertexOrigin::Kind::edge_midpoint:
              triplets.push_back({row, col_offset + origin.a, 0.5});
              triplets.push_back({row, col_offset + origin.b, 0.5});
              break;
            case VertexOrigin::Kind::cell_center:
              for (int k = 0; k < 4; ++k)
                triplets.push_back({row, col_offset + coarse.cells[origin.a][k], 0.25});
              break;
          }
      }
  }
} // namespace detail

inline TransferOperator build_q1_transfer(const MeshHierarchy &mesh, int coarse_level,
                                          int fine_level)
{
  if (fine_level != coarse_level + 1)
    throw std::invalid_argument("transfer needs consecutive levels of one hierarchy");
  const MeshLevel &coarse = mesh.level(coarse_level);
  const MeshLevel &fine = mesh.level(fine_level);

  std::vector<Triplet> triplets;
  triplets.reserve(2 * fine.n_vertices());
  detail::append_q1_rows(triplets, fine, coarse, 0, 0);
  TransferOperator transfer;
  transfer.prolongation =
    CsrMatrix::from_triplets(fine.n_vertices(), coarse.n_vertices(), std::move(triplets));
  return transfer;
}

namespace detail
{
  // Reference position of a child cell inside its parent. Refinement keeps
  // the parent's orientation, so the child shares exactly one corner with
  // the parent and that corner's local index names the quadrant.
  inline Point2 child_offset(const MeshLevel &fine, std::uint32_t cell)
  {
    for (int k = 0; k < 4; ++k)
      if (fine.vertex_origin[fine.cells[cell][k]].kind == VertexOrigin::Kind::copied)
        switch (k)
          {
            case 0:
              return {0.0, 0.0};
            case 1:
              return {0.5, 0.0};
            case 2:
              return {0.5, 0.5};
            default:
              return {0.0, 0.5};
          }
    throw std::invalid_argument("refined cell shares no corner with its parent");
  }

  // Rows for one element kind of the immersed space; row/col offsets place
  // the block inside a composite vector.
  inline void append_component_rows(std::vector<Triplet> &triplets, const MeshHierarchy &mesh,
                                    int coarse_level, int fine_level, ElementKind element,
                                    std::uint32_t row_offset, std::uint32_t col_offset)
  {
    const MeshLevel &coarse = mesh.level(coarse_level);
    const MeshLevel &fine = mesh.level(fine_level);

    if (element == ElementKind::p0)
      {
        for (std::uint32_t c = 0; c < fine.n_cells(); ++c)
          triplets.push_back({row_offset + c, col_offset + fine.parent_cell[c], 1.0});
        return;
      }

    // Vertex DoFs take the coarse function's point values. For the enriched
    // space the coarse bubble contributes at parent-cell centers.
    append_q1_rows(triplets, fine, coarse, row_offset, col_offset);
    if (element == ElementKind::q1)
      return;

    const auto coarse_bubble = [&](std::uint32_t cell) {
      return col_offset + static_cast<std::uint32_t>(coarse.n_vertices()) + cell;
    };
    for (std::uint32_t v = 0; v < fine.n_vertices(); ++v)
      if (fine.vertex_origin[v].kind == VertexOrigin::Kind::cell_center)
        triplets.push_back({row_offset + v, coarse_bubble(fine.vertex_origin[v].a), 1.0});

    // A fine bubble coefficient is the coarse function at the fine cell
    // center minus the bilinear interpolant of the fine cell's corner values.
    // Bilinear coarse components interpolate exactly, so only the parent
    // bubble survives; the evaluation below keeps the general form.
    const auto fine_bubble_row = [&](std::uint32_t cell) {
      return row_offset + static_cast<std::uint32_t>(fine.n_vertices()) + cell;
    };
    for (std::uint32_t c = 0; c < fine.n_cells(); ++c)
      {
        const std::uint32_t parent = fine.parent_cell[c];
        const Point2 base = child_offset(fine, c);
        const Point2 center{base.x + 0.25, base.y + 0.25};
        const Point2 corner[4] = {{base.x, base.y},
                                  {base.x + 0.5, base.y},
                                  {base.x + 0.5, base.y + 0.5},
                                  {base.x, base.y + 0.5}};
        for (int a = 0; a < 5; ++a)
          {
            double w = shape_value(ElementKind::q1_bubble, a, center);
            for (const Point2 &p : corner)
              w -= 0.25 * shape_value(ElementKind::q1_bubble, a, p);
            if (std::abs(w) < 1e-14)
              continue;
            const std::uint32_t col =
              a < 4 ? col_offset + coarse.cells[parent][a] : coarse_bubble(parent);
            triplets.push_back({fine_bubble_row(c), col, w});
          }
      }
  }
} // namespace detail

// Block-diagonal transfer for the stacked immersed vector [v2; lambda].
inline TransferOperator build_mixed_transfer(const MeshHierarchy &mesh, int coarse_level,
                                             int fine_level, ElementKind v2_element,
                                             ElementKind lambda_element)
{
  if (fine_level != coarse_level + 1)
    throw std::invalid_argument("transfer needs consecutive levels of one hierarchy");
  const auto dofs_of = [&](int level, ElementKind element) {
    const MeshLevel &grid = mesh.level(level);
    switch (element)
      {
        case ElementKind::q1:
          return grid.n_vertices();
        case ElementKind::q1_bubble:
          return grid.n_vertices() + grid.n_cells();
        case ElementKind::p0:
          return grid.n_cells();
      }
    return std::size_t{0};
  };

  const std::size_t fine_v2 = dofs_of(fine_level, v2_element);
  const std::size_t coarse_v2 = dofs_of(coarse_level, v2_element);
  const std::size_t fine_lambda = dofs_of(fine_level, lambda_element);
  const std::size_t coarse_lambda = dofs_of(coarse_level, lambda_element);

  std::vector<Triplet> triplets;
  triplets.reserve(2 * (fine_v2 + fine_lambda));
  detail::append_component_rows(triplets, mesh, coarse_level, fine_level, v2_element, 0, 0);
  detail::append_component_rows(triplets, mesh, coarse_level, fine_level, lambda_element,
                                static_cast<std::uint32_t>(fine_v2),
                                static_cast<std::uint32_t>(coarse_v2));

  TransferOperator transfer;
  transfer.prolongation = CsrMatrix::from_triplets(fine_v2 + fine_lambda,
                                                   coarse_v2 + coarse_lambda, std::move(triplets));
  return transfer;
}

//----------------------------------------------------------------------
// Smoothers
//----------------------------------------------------------------------

enum class SweepDirection
{
  forward,
  backward
};

inline void sor_sweep(const CsrMatrix &a, std::vector<double> &x, const std::vector<double> &b,
                      double omega, SweepDirection direction)
{
  const std::size_t n = a.n_rows();
  const auto update = [&](std::size_t i) {
    double sum = b[i];
    double diag = 0.0;
    const auto cols = a.row_columns(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      {
        if (cols[k] == i)
          diag = vals[k];
        sum -= vals[k] * x[cols[k]];
      }
    if (diag == 0.0)
      throw SmootherError("relaxation sweep hit a zero diagonal entry");
    x[i] += omega * sum / diag;
  };
  if (direction == SweepDirection::forward)
    for (std::size_t i = 0; i < n; ++i)
      update(i);
  else
    for (std::size_t i = n; i-- > 0;)
      update(i);
}

// One local saddle patch per multiplier DoF i: the multiplier itself plus
// every immersed-velocity DoF its constraint row touches. The local matrix
// is extracted from the assembled block and factorized once.
struct VankaPatch
{
  std::vector<std::uint32_t> dofs; // velocity members ascending, multiplier last
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

struct VankaPatches
{
  std::vector<VankaPatch> patches;
};

inline VankaPatches build_vanka_patches(const CsrMatrix &b_matrix, const CsrMatrix &c2,
                                        std::size_t n_v2)
{
  VankaPatches result;
  result.patches.resize(c2.n_rows());
  for (std::size_t i = 0; i < c2.n_rows(); ++i)
    {
      VankaPatch &patch = result.patches[i];
      const auto cols = c2.row_columns(i);
      patch.dofs.assign(cols.begin(), cols.end()); // ascending by construction
      patch.dofs.push_back(static_cast<std::uint32_t>(n_v2 + i));

      const auto m = static_cast<Eigen::Index>(patch.dofs.size());
      Eigen::MatrixXd local(m, m);
      for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c < m; ++c)
          local(r, c) = b_matrix.coeff(patch.dofs[r], patch.dofs[c]);

      patch.lu.compute(local);
      double max_abs = local.cwiseAbs().maxCoeff();
      const auto diag = patch.lu.matrixLU().diagonal();
      for (Eigen::Index k = 0; k < diag.size(); ++k)
        if (!(std::abs(diag(k)) > 1e-14 * max_abs))
          throw SmootherError("singular local patch in the saddle smoother");
    }
  return result;
}

// Multiplicative sweep in ascending multiplier order: gather the current
// residual on the patch, solve the local saddle problem, scatter the update.
inline void vanka_sweep(const CsrMatrix &b_matrix, const VankaPatches &patches,
                        std::vector<double> &x, const std::vector<double> &b)
{
  for (const VankaPatch &patch : patches.patches)
    {
      const auto m = static_cast<Eigen::Index>(patch.dofs.size());
      Eigen::VectorXd r(m);
      for (Eigen::Index k = 0; k < m; ++k)
        {
          const std::size_t d = patch.dofs[k];
          double sum = b[d];
          const auto cols = b_matrix.row_columns(d);
          const auto vals = b_matrix.row_values(d);
          for (std::size_t j = 0; j < cols.size(); ++j)
            sum -= vals[j] * x[cols[j]];
          r(k) = sum;
        }
      const Eigen::VectorXd delta = patch.lu.solve(r);
      for (Eigen::Index k = 0; k < m; ++k)
        x[patch.dofs[k]] += delta(k);
    }
}

//----------------------------------------------------------------------
// Geometric V-cycle
//----------------------------------------------------------------------

enum class SmootherKind
{
  sor,  // scalar elliptic block
  vanka // immersed saddle block
};

struct MgOptions
{
  int pre_smooth = 2;  // smoothing steps before coarse correction
  int post_smooth = 2; // and after
  double sor_omega = 1.0;
};

// Per-level operators are re-assembled on their own mesh level (no Galerkin
// products); restriction is the transpose of prolongation; the coarsest
// problem is solved directly, with a pseudo-inverse fallback if singular.
class MgHierarchy
{
public:
  struct Level
  {
    CsrMatrix op;
    TransferOperator from_coarser;        // unused on the coarsest level
    VankaPatches patches;                 // vanka smoothing only
    std::vector<std::uint32_t> constrained; // sor smoothing only
  };

  MgHierarchy(SmootherKind kind, MgOptions options, std::vector<Level> levels)
    : kind_(kind), options_(options), levels_(std::move(levels))
  {
    if (levels_.empty())
      throw std::invalid_argument("multigrid hierarchy needs at least one level");
    const CsrMatrix &coarse = levels_.front().op;
    try
      {
        coarse_lu_ = std::make_unique<LuSolver>(coarse);
      }
    catch (const SingularMatrixError &)
      {
        std::cerr << "warning: coarsest multigrid operator is singular, "
                     "falling back to a pseudo-inverse\n";
        const Eigen::MatrixXd dense = to_eigen_dense(coarse);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(dense,
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-12);
        coarse_pinv_ = std::make_unique<Eigen::MatrixXd>(
          svd.matrixV() *
          (svd.singularValues().array() > svd.threshold() * svd.singularValues()(0))
            .select(svd.singularValues().array().inverse(), 0.0)
            .matrix()
            .asDiagonal() *
          svd.matrixU().transpose());
      }
  }

  int n_levels() const { return static_cast<int>(levels_.size()); }
  const CsrMatrix &op(int level_index) const { return levels_[level_index].op; }
  const TransferOperator &transfer(int fine_index) const
  {
    return levels_[fine_index].from_coarser;
  }

  // One V-cycle starting from (and improving) x.
  void v_cycle(std::vector<double> &x, const std::vector<double> &b, int level_index) const
  {
    const Level &level = levels_[level_index];
    if (level_index == 0)
      {
        x = solve_coarsest(b);
        return;
      }

    smooth(level, x, b, options_.pre_smooth);

    std::vector<double> residual = subtract(b, level.op.apply(x));
    std::vector<double> coarse_residual = level.from_coarser.restrict_to_coarse(residual);
    if (kind_ == SmootherKind::sor)
      for (const auto d : levels_[level_index - 1].constrained)
        coarse_residual[d] = 0.0;

    std::vector<double> correction(coarse_residual.size(), 0.0);
    v_cycle(correction, coarse_residual, level_index - 1);
    axpy(1.0, level.from_coarser.prolongate(correction), x);

    smooth(level, x, b, options_.post_smooth);
  }

private:
  std::vector<double> solve_coarsest(const std::vector<double> &b) const
  {
    if (coarse_lu_)
      return coarse_lu_->solve(b);
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
    Eigen::VectorXd x = (*coarse_pinv_) * rhs;
    return {x.data(), x.data() + x.size()};
  }

  void smooth(const Level &level, std::vector<double> &x, const std::vector<double> &b,
              int steps) const
  {
    for (int s = 0; s < steps; ++s)
      {
        if (kind_ == SmootherKind::sor)
          {
            // One step is a symmetric pass: forward then backward.
            sor_sweep(level.op, x, b, options_.sor_omega, SweepDirection::forward);
            sor_sweep(level.op, x, b, options_.sor_omega, SweepDirection::backward);
          }
        else
          vanka_sweep(level.op, level.patches, x, b);
      }
  }

  SmootherKind kind_;
  MgOptions options_;
  std::vector<Level> levels_;
  std::unique_ptr<LuSolver> coarse_lu_;
  std::unique_ptr<Eigen::MatrixXd> coarse_pinv_;
};

// Zero-initial-guess application of `cycles` V-cycles as a linear operator.
inline LinearOperator mg_preconditioner(std::shared_ptr<const MgHierarchy> hierarchy,
                                        int cycles = 1)
{
  const int top = hierarchy->n_levels() - 1;
  const std::size_t n = hierarchy->op(top).n_rows();
  return LinearOperator(n, n, [hierarchy, top, cycles](const std::vector<double> &b) {
    std::vector<double> x(b.size(), 0.0);
    for (int c = 0; c < cycles; ++c)
      hierarchy->v_cycle(x, b, top);
    return x;
  });
}

//----------------------------------------------------------------------
// Hierarchy factories
//----------------------------------------------------------------------

// Background elliptic hierarchy: per-level Dirichlet stiffness smoothed by
// forward+backward relaxation sweeps; restricted residuals are zeroed on
// constrained coarse DoFs.
inline std::shared_ptr<MgHierarchy> build_a1_hierarchy(const MeshHierarchy &background,
                                                       int finest_level, double beta,
                                                       MgOptions options)
{
  std::vector<MgHierarchy::Level> levels;
  levels.reserve(static_cast<std::size_t>(finest_level));
  for (int k = 1; k <= finest_level; ++k)
    {
      MgHierarchy::Level level;
      const FeSpace space = enumerate_dofs(background, k, ElementKind::q1, true);
      std::vector<double> dummy_rhs(space.n_dofs, 0.0);
      auto [op, rhs] = apply_dirichlet(assemble_stiffness(space, beta), dummy_rhs,
                                       space.boundary_dofs);
      (void)rhs;
      level.op = std::move(op);
      level.constrained = space.boundary_dofs;
      if (k > 1)
        level.from_coarser = build_q1_transfer(background, k - 1, k);
      levels.push_back(std::move(level));
    }
  return std::make_shared<MgHierarchy>(SmootherKind::sor, options, std::move(levels));
}

// Immersed saddle hierarchy smoothed by the local patch solver.
inline std::shared_ptr<MgHierarchy> build_b_hierarchy(const MeshHierarchy &disk,
                                                      int finest_level, ElementChoice element,
                                                      CouplingMode coupling, double beta,
                                                      double beta2, MgOptions options)
{
  std::vector<MgHierarchy::Level> levels;
  levels.reserve(static_cast<std::size_t>(finest_level));
  for (int k = 1; k <= finest_level; ++k)
    {
      MgHierarchy::Level level;
      const FeSpace v2 = enumerate_dofs(disk, k, immersed_element(element), false);
      const FeSpace lambda = enumerate_dofs(disk, k, multiplier_element(element), false);

      BlockSystem partial;
      partial.v2_space = v2;
      partial.lambda_space = lambda;
      partial.a2 = assemble_stiffness(v2, beta2 - beta);
      partial.c2 = assemble_coupling(lambda, v2, coupling);
      level.op = compose_b_matrix(partial);
      level.patches = build_vanka_patches(level.op, partial.c2, v2.n_dofs);
      if (k > 1)
        level.from_coarser = build_mixed_transfer(disk, k - 1, k, immersed_element(element),
                                                  multiplier_element(element));
      levels.push_back(std::move(level));
    }
  return std::make_shared<MgHierarchy>(SmootherKind::vanka, options, std::move(levels));
}

} // namespace fddlm

#endif
