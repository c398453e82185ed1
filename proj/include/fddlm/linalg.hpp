#ifndef FDDLM_LINALG_HPP
#define FDDLM_LINALG_HPP

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "fddlm/csr.hpp"
#include "fddlm/errors.hpp"

namespace fddlm
{

//----------------------------------------------------------------------
// Linear operators
//----------------------------------------------------------------------

// A square or rectangular operator given by its action. Operators built from
// an assembled matrix keep a handle to it, which the iterative condition
// estimator requires (it factorizes the matrix).
class LinearOperator
{
public:
  using ApplyFn = std::function<std::vector<double>(const std::vector<double> &)>;

  LinearOperator() = default;

  LinearOperator(std::size_t n_rows, std::size_t n_cols, ApplyFn apply)
    : n_rows_(n_rows), n_cols_(n_cols), apply_(std::move(apply))
  {}

  static LinearOperator identity(std::size_t n)
  {
    return LinearOperator(n, n, [](const std::vector<double> &x) { return x; });
  }

  static LinearOperator from_matrix(std::shared_ptr<const CsrMatrix> m)
  {
    LinearOperator op(m->n_rows(), m->n_cols(),
                      [m](const std::vector<double> &x) { return m->apply(x); });
    op.matrix_ = std::move(m);
    return op;
  }

  static LinearOperator from_matrix(const CsrMatrix &m)
  {
    return from_matrix(std::make_shared<const CsrMatrix>(m));
  }

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }

  std::vector<double> apply(const std::vector<double> &x) const
  {
    if (!apply_)
      throw std::invalid_argument("empty linear operator");
    if (x.size() != n_cols_)
      throw std::invalid_argument("operator-vector size mismatch");
    return apply_(x);
  }

  // Non-null for matrix-backed operators.
  const CsrMatrix *matrix() const { return matrix_.get(); }

private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  ApplyFn apply_;
  std::shared_ptr<const CsrMatrix> matrix_;
};

// Composition a(b(x)).
inline LinearOperator compose(const LinearOperator &a, const LinearOperator &b)
{
  if (a.n_cols() != b.n_rows())
    throw std::invalid_argument("operator composition size mismatch");
  return LinearOperator(a.n_rows(), b.n_cols(), [a, b](const std::vector<double> &x) {
    return a.apply(b.apply(x));
  });
}

//----------------------------------------------------------------------
// Direct solves (Eigen-backed)
//----------------------------------------------------------------------

inline Eigen::SparseMatrix<double> to_eigen_sparse(const CsrMatrix &m)
{
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(m.nnz());
  for (std::size_t r = 0; r < m.n_rows(); ++r)
    {
      const auto cols = m.row_columns(r);
      const auto vals = m.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k)
        t.emplace_back(static_cast<int>(r), static_cast<int>(cols[k]), vals[k]);
    }
  Eigen::SparseMatrix<double> s(static_cast<Eigen::Index>(m.n_rows()),
                                static_cast<Eigen::Index>(m.n_cols()));
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

inline Eigen::MatrixXd to_eigen_dense(const CsrMatrix &m)
{
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.n_rows()),
                                            static_cast<Eigen::Index>(m.n_cols()));
  for (std::size_t r = 0; r < m.n_rows(); ++r)
    {
      const auto cols = m.row_columns(r);
      const auto vals = m.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k)
        d(static_cast<Eigen::Index>(r), cols[k]) = vals[k];
    }
  return d;
}

// LU factorization of a square matrix. Small systems go through a dense
// factorization, larger ones through a sparse LU with fill-reducing column
// ordering. A pivot below 1e-14 * max|A| counts as singular.
class LuSolver
{
public:
  explicit LuSolver(const CsrMatrix &a, std::size_t dense_threshold = 3000)
  {
    if (a.n_rows() != a.n_cols())
      throw std::invalid_argument("LU factorization needs a square matrix");
    n_ = a.n_rows();
    if (n_ == 0)
      return;

    double max_abs = 0.0;
    for (const double v : a.values())
      max_abs = std::max(max_abs, std::abs(v));

    if (n_ < dense_threshold)
      {
        dense_ = std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXd>>(to_eigen_dense(a));
        const auto diag = dense_->matrixLU().diagonal();
        for (Eigen::Index i = 0; i < diag.size(); ++i)
          if (!(std::abs(diag(i)) > 1e-14 * max_abs))
            throw SingularMatrixError("LU pivot below threshold: matrix is singular");
      }
    else
      {
        sparse_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
        Eigen::SparseMatrix<double> s = to_eigen_sparse(a);
        sparse_->compute(s);
        if (sparse_->info() != Eigen::Success)
          throw SingularMatrixError("sparse LU factorization failed: matrix is singular");
      }
  }

  std::size_t size() const { return n_; }

  std::vector<double> solve(const std::vector<double> &b) const
  {
    if (b.size() != n_)
      throw std::invalid_argument("LU solve size mismatch");
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(n_));
    Eigen::VectorXd x;
    if (dense_)
      x = dense_->solve(rhs);
    else
      x = sparse_->solve(rhs);
    return {x.data(), x.data() + n_};
  }

  std::vector<double> solve_transpose(const std::vector<double> &b) const
  {
    if (b.size() != n_)
      throw std::invalid_argument("LU solve size mismatch");
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(n_));
    Eigen::VectorXd x;
    if (dense_)
      x = dense_->transpose().solve(rhs);
    else
      x = sparse_->transpose().solve(rhs);
    return {x.data(), x.data() + n_};
  }

private:
  std::size_t n_ = 0;
  std::unique_ptr<Eigen::PartialPivLU<Eigen::MatrixXd>> dense_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> sparse_;
};

inline LinearOperator lu_operator(std::shared_ptr<const LuSolver> lu)
{
  const std::size_t n = lu->size();
  return LinearOperator(n, n, [lu = std::move(lu)](const std::vector<double> &b) {
    return lu->solve(b);
  });
}

//----------------------------------------------------------------------
// GMRES, right-preconditioned
//----------------------------------------------------------------------

struct GmresOptions
{
  double tol = 1e-12;
  bool relative = false; // interpret tol relative to ||b||
  std::size_t max_iter = 100000;
  std::size_t restart = 200;
};

struct SolveReport
{
  bool converged = false;
  bool breakdown = false;
  std::size_t iterations = 0;
  double wall_seconds = 0.0;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  // residual_history[0] is the initial residual, one entry per iteration after.
  std::vector<double> residual_history;
};

struct GmresResult
{
  std::vector<double> x;
  SolveReport report;
};

// Right preconditioning keeps the minimized quantity equal to the true
// residual ||b - A x||, so the recorded history needs no rescaling. The
// solution update is x += M^{-1} (V y).
inline GmresResult gmres(const LinearOperator &op, const std::vector<double> &b,
                         const LinearOperator *precond = nullptr, GmresOptions opts = {})
{
  if (op.n_rows() != op.n_cols() || op.n_rows() != b.size())
    throw std::invalid_argument("gmres needs a square operator matching the rhs");
  if (opts.restart == 0)
    throw std::invalid_argument("gmres restart length must be positive");

  const auto t_start = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  const double target = opts.relative ? opts.tol * norm2(b) : opts.tol;

  GmresResult result;
  result.x.assign(n, 0.0);
  SolveReport &report = result.report;

  std::vector<double> r = b; // x0 = 0
  double beta = norm2(r);
  report.residual_history.push_back(beta);
  report.final_residual = beta;
  if (beta <= target)
    {
      report.converged = true;
      report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      return result;
    }

  const std::size_t m = opts.restart;
  std::vector<std::vector<double>> V;
  std::vector<std::vector<double>> H; // H[j] holds column j (j+2 entries)
  std::vector<double> cs(m, 0.0), sn(m, 0.0), g(m + 1, 0.0);

  bool done = false;
  while (!done)
    {
      V.assign(1, r);
      for (double &v : V[0])
        v /= beta;
      H.clear();
      std::fill(g.begin(), g.end(), 0.0);
      g[0] = beta;

      std::size_t j = 0; // columns completed in this cycle
      bool cycle_breakdown = false;
      while (j < m && report.iterations < opts.max_iter)
        {
          std::vector<double> z = precond ? precond->apply(V[j]) : V[j];
          std::vector<double> w = op.apply(z);

          // Modified Gram-Schmidt
          std::vector<double> h(j + 2, 0.0);
          for (std::size_t i = 0; i <= j; ++i)
            {
              h[i] = dot(w, V[i]);
              axpy(-h[i], V[i], w);
            }
          h[j + 1] = norm2(w);

          // Previous Givens rotations, then a new one.
          for (std::size_t i = 0; i < j; ++i)
            {
              const double t = cs[i] * h[i] + sn[i] * h[i + 1];
              h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
              h[i] = t;
            }
          const double subdiag = h[j + 1]; // Arnoldi subdiagonal, pre-rotation
          const double denom = std::hypot(h[j], h[j + 1]);
          if (denom == 0.0)
            {
              // The operator annihilated the new direction entirely; keep the
              // columns accumulated so far and stop this cycle.
              ++report.iterations;
              report.residual_history.push_back(std::abs(g[j]));
              cycle_breakdown = true;
              break;
            }
          cs[j] = h[j] / denom;
          sn[j] = h[j + 1] / denom;
          g[j + 1] = -sn[j] * g[j];
          g[j] = cs[j] * g[j];
          h[j] = denom;
          h[j + 1] = 0.0;
          H.push_back(std::move(h));

          ++report.iterations;
          report.residual_history.push_back(std::abs(g[j + 1]));

          if (subdiag < 1e-300)
            {
              // Lucky breakdown: the Krylov space is invariant, so the least
              // squares solution in it is exact (or the iteration stagnated).
              cycle_breakdown = true;
              ++j;
              break;
            }
          V.push_back(w);
          for (double &v : V.back())
            v /= subdiag;
          ++j;
          if (std::abs(g[j]) <= target)
            break;
        }

      if (j > 0)
        {
          // Back substitution on the j x j triangular system.
          std::vector<double> y(j, 0.0);
          for (std::size_t ii = j; ii-- > 0;)
            {
              double s = g[ii];
              for (std::size_t k = ii + 1; k < j; ++k)
                s -= H[k][ii] * y[k];
              y[ii] = s / H[ii][ii];
            }
          std::vector<double> u(n, 0.0);
          for (std::size_t k = 0; k < j; ++k)
            axpy(y[k], V[k], u);
          if (precond)
            u = precond->apply(u);
          axpy(1.0, u, result.x);
        }

      r = subtract(b, op.apply(result.x));
      beta = norm2(r);
      report.final_residual = beta;

      if (beta <= target)
        {
          report.converged = true;
          done = true;
        }
      else if (cycle_breakdown)
        {
          // Cannot enlarge the space beyond an invariant subspace; report
          // the stagnation instead of spinning.
          report.breakdown = true;
          done = true;
        }
      else if (report.iterations >= opts.max_iter)
        done = true;
    }

  report.wall_seconds =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

//----------------------------------------------------------------------
// Condition number estimation (2-norm)
//----------------------------------------------------------------------

// Materializes the operator column by column and runs a dense SVD.
inline double estimate_condition_dense(const LinearOperator &op)
{
  if (op.n_rows() != op.n_cols())
    throw std::invalid_argument("condition number needs a square operator");
  const std::size_t n = op.n_rows();
  if (n == 0)
    return 1.0;

  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    {
      e[j] = 1.0;
      const std::vector<double> col = op.apply(e);
      e[j] = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }

  const Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(static_cast<Eigen::Index>(n) - 1);
  if (smin <= 0.0)
    return std::numeric_limits<double>::infinity();
  return smax / smin;
}

namespace detail
{
  // Largest eigenvalue of the symmetric map `sym` by power iteration with a
  // Rayleigh-quotient residual stop. Deterministic seeded start.
  inline double power_iteration(const std::function<std::vector<double>(const std::vector<double> &)> &sym,
                                std::size_t n, double rel_tol)
  {
    std::mt19937 rng(0x5eedu);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (double &x : v)
      x = dist(rng);
    double nv = norm2(v);
    for (double &x : v)
      x /= nv;

    double theta = 0.0;
    for (int it = 0; it < 100000; ++it)
      {
        std::vector<double> w = sym(v);
        theta = dot(v, w);
        std::vector<double> resid = w;
        axpy(-theta, v, resid);
        if (norm2(resid) <= rel_tol * std::abs(theta))
          break;
        const double nw = norm2(w);
        if (nw == 0.0)
          return 0.0;
        for (std::size_t i = 0; i < n; ++i)
          v[i] = w[i] / nw;
      }
    return theta;
  }
} // namespace detail

// sigma_max from power iteration on A^T A; sigma_min from inverse iteration
// through an LU of A. Returns +infinity for singular matrices.
inline double estimate_condition_iterative(const CsrMatrix &a, double rel_tol = 1e-6)
{
  if (a.n_rows() != a.n_cols())
    throw std::invalid_argument("condition number needs a square matrix");
  const std::size_t n = a.n_rows();
  if (n == 0)
    return 1.0;

  const double lambda_max = detail::power_iteration(
    [&a](const std::vector<double> &v) { return a.apply_transpose(a.apply(v)); }, n, rel_tol);
  if (lambda_max <= 0.0)
    return std::numeric_limits<double>::infinity();

  std::unique_ptr<LuSolver> lu;
  try
    {
      lu = std::make_unique<LuSolver>(a);
    }
  catch (const SingularMatrixError &)
    {
      return std::numeric_limits<double>::infinity();
    }

  const double lambda_inv = detail::power_iteration(
    [&lu](const std::vector<double> &v) { return lu->solve(lu->solve_transpose(v)); }, n, rel_tol);
  if (lambda_inv <= 0.0)
    return std::numeric_limits<double>::infinity();

  return std::sqrt(lambda_max * lambda_inv);
}

enum class CondMode
{
  dense_svd,
  iterative
};

// Iterative estimation factorizes the matrix, so it is only available for
// matrix-backed operators.
inline double estimate_condition_number(const LinearOperator &op, CondMode mode)
{
  if (mode == CondMode::dense_svd)
    return estimate_condition_dense(op);
  if (op.matrix() == nullptr)
    throw std::invalid_argument("iterative condition estimate needs a matrix-backed operator");
  return estimate_condition_iterative(*op.matrix());
}

} // namespace fddlm

#endif
