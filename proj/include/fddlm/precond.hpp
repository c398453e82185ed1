#ifndef FDDLM_PRECOND_HPP
#define FDDLM_PRECOND_HPP

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fddlm/assembly.hpp"
#include "fddlm/csr.hpp"
#include "fddlm/errors.hpp"
#include "fddlm/linalg.hpp"
#include "fddlm/multigrid.hpp"

namespace fddlm
{

// The three block preconditioners share the same two approximate inverses:
// one for the background elliptic block and one for the immersed saddle
// block [[A2, -C2^T], [-C2, 0]]. They differ in whether the background/
// saddle coupling term is propagated upward (upper triangular), downward
// (lower triangular), or dropped (block diagonal).
enum class PrecondShape
{
  p1, // upper triangular: saddle solve first, coupling lifted into the background solve
  p2, // lower triangular: background solve first, coupling pushed into the saddle solve
  p3  // block diagonal: the two solves are independent
};

enum class InverseKind
{
  direct,   // exact sparse LU of the block
  multigrid // one zero-initial-guess V-cycle per application
};

struct PrecondSpec
{
  PrecondShape shape = PrecondShape::p3;
  InverseKind a1_inverse = InverseKind::direct;
  InverseKind b_inverse = InverseKind::direct;
};

inline std::string variant_label(const PrecondSpec &spec)
{
  std::string label;
  label += spec.a1_inverse == InverseKind::direct ? 'd' : 'm';
  label += spec.b_inverse == InverseKind::direct ? 'd' : 'm';
  return label;
}

inline std::pair<InverseKind, InverseKind> parse_variant(const std::string &label)
{
  if (label.size() != 2)
    throw std::invalid_argument("variant must be two letters from {d,m}: " + label);
  const auto decode = [&](char c) {
    if (c == 'd')
      return InverseKind::direct;
    if (c == 'm')
      return InverseKind::multigrid;
    throw std::invalid_argument("variant must be two letters from {d,m}: " + label);
  };
  return {decode(label[0]), decode(label[1])};
}

inline PrecondShape parse_shape(const std::string &label)
{
  if (label == "p1")
    return PrecondShape::p1;
  if (label == "p2")
    return PrecondShape::p2;
  if (label == "p3")
    return PrecondShape::p3;
  throw std::invalid_argument("shape must be one of p1, p2, p3: " + label);
}

inline std::string shape_label(PrecondShape shape)
{
  switch (shape)
    {
      case PrecondShape::p1:
        return "p1";
      case PrecondShape::p2:
        return "p2";
      default:
        return "p3";
    }
}

// Applies one of the three block preconditioners to a stacked residual
// [r_u; r_u2; r_lambda] given operators for the two approximate inverses.
class BlockPreconditioner
{
public:
  BlockPreconditioner(PrecondShape shape, LinearOperator a1_inverse, LinearOperator b_inverse,
                      std::shared_ptr<const CsrMatrix> c1, std::size_t n_v, std::size_t n_v2,
                      std::size_t n_lambda)
    : impl_(std::make_shared<Impl>(Impl{shape, std::move(a1_inverse), std::move(b_inverse),
                                        std::move(c1), n_v, n_v2, n_lambda}))
  {
    if (impl_->a1_inverse.n_rows() != n_v || impl_->a1_inverse.n_cols() != n_v)
      throw std::invalid_argument("background inverse has the wrong dimensions");
    const std::size_t nb = n_v2 + n_lambda;
    if (impl_->b_inverse.n_rows() != nb || impl_->b_inverse.n_cols() != nb)
      throw std::invalid_argument("saddle inverse has the wrong dimensions");
    if (impl_->c1->n_rows() != n_lambda || impl_->c1->n_cols() != n_v)
      throw std::invalid_argument("constraint block has the wrong dimensions");
  }

  std::size_t size() const { return impl_->n_v + impl_->n_v2 + impl_->n_lambda; }

  std::vector<double> apply(const std::vector<double> &r) const
  {
    const Impl &s = *impl_;
    if (r.size() != size())
      throw std::invalid_argument("preconditioner applied to a vector of the wrong size");

    const std::vector<double> ru(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(s.n_v));
    std::vector<double> rb(r.begin() + static_cast<std::ptrdiff_t>(s.n_v), r.end());

    std::vector<double> zu, zb;
    switch (s.shape)
      {
        case PrecondShape::p3:
          {
            zu = s.a1_inverse.apply(ru);
            zb = s.b_inverse.apply(rb);
            break;
          }
        case PrecondShape::p1:
          {
            // Saddle block first; its multiplier component feeds back into
            // the background residual through the constraint transpose.
            zb = s.b_inverse.apply(rb);
            const std::vector<double> zlambda(
              zb.begin() + static_cast<std::ptrdiff_t>(s.n_v2), zb.end());
            std::vector<double> shifted = ru;
            axpy(-1.0, s.c1->apply_transpose(zlambda), shifted);
            zu = s.a1_inverse.apply(shifted);
            break;
          }
        case PrecondShape::p2:
          {
            // Background block first; its trace enters the multiplier rows
            // of the saddle residual through the constraint block.
            zu = s.a1_inverse.apply(ru);
            const std::vector<double> trace = s.c1->apply(zu);
            for (std::size_t i = 0; i < s.n_lambda; ++i)
              rb[s.n_v2 + i] -= trace[i];
            zb = s.b_inverse.apply(rb);
            break;
          }
      }

    std::vector<double> z;
    z.reserve(size());
    z.insert(z.end(), zu.begin(), zu.end());
    z.insert(z.end(), zb.begin(), zb.end());
    return z;
  }

  LinearOperator as_operator() const
  {
    const std::size_t n = size();
    BlockPreconditioner copy = *this;
    return LinearOperator(n, n,
                          [copy](const std::vector<double> &r) { return copy.apply(r); });
  }

private:
  struct Impl
  {
    PrecondShape shape;
    LinearOperator a1_inverse;
    LinearOperator b_inverse;
    std::shared_ptr<const CsrMatrix> c1;
    std::size_t n_v, n_v2, n_lambda;
  };
  std::shared_ptr<Impl> impl_;
};

// Multigrid knobs used when either block inverse is a V-cycle.
struct MgConfig
{
  int smooth_steps = 2;   // background block, symmetric relaxation passes
  int b_smooth_steps = 2; // saddle block, local patch sweeps
  double sor_omega = 1.0;
  int cycles = 1;
};

// Assembles the requested approximate inverses for an already-assembled
// system. Direct inverses factorize the assembled blocks; multigrid
// inverses rebuild the block hierarchy from the meshes referenced by the
// system's spaces.
inline BlockPreconditioner build_preconditioner(const BlockSystem &system,
                                                const ProblemConfig &config,
                                                const PrecondSpec &spec,
                                                const MgConfig &mg = MgConfig{})
{
  LinearOperator a1_inverse = LinearOperator::identity(system.n_v());
  LinearOperator b_inverse = LinearOperator::identity(system.n_v2() + system.n_lambda());

  if (spec.a1_inverse == InverseKind::direct)
    {
      auto lu = std::make_shared<const LuSolver>(system.a1);
      a1_inverse = lu_operator(std::move(lu));
    }
  else
    {
      MgOptions options;
      options.pre_smooth = mg.smooth_steps;
      options.post_smooth = mg.smooth_steps;
      options.sor_omega = mg.sor_omega;
      auto hierarchy =
        build_a1_hierarchy(*system.v_space.mesh, system.v_space.level, config.beta, options);
      a1_inverse = mg_preconditioner(std::move(hierarchy), mg.cycles);
    }

  if (spec.b_inverse == InverseKind::direct)
    {
      try
        {
          auto lu = std::make_shared<const LuSolver>(compose_b_matrix(system));
          b_inverse = lu_operator(std::move(lu));
        }
      catch (const SingularMatrixError &e)
        {
          throw SingularMatrixError(
            std::string("saddle block is singular (it is guaranteed invertible only for "
                        "beta2 > beta): ") +
            e.what());
        }
    }
  else
    {
      MgOptions options;
      options.pre_smooth = mg.b_smooth_steps;
      options.post_smooth = mg.b_smooth_steps;
      options.sor_omega = mg.sor_omega;
      auto hierarchy = build_b_hierarchy(*system.v2_space.mesh, system.v2_space.level,
                                         config.element, config.coupling, config.beta,
                                         config.beta2, options);
      b_inverse = mg_preconditioner(std::move(hierarchy), mg.cycles);
    }

  auto c1 = std::make_shared<const CsrMatrix>(system.c1);
  return BlockPreconditioner(spec.shape, std::move(a1_inverse), std::move(b_inverse),
                             std::move(c1), system.n_v(), system.n_v2(), system.n_lambda());
}

} // namespace fddlm

#endif
