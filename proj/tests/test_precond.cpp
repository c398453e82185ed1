#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fddlm/assembly.hpp"
#include "fddlm/linalg.hpp"
#include "fddlm/precond.hpp"

using namespace fddlm;

namespace
{
  struct Fixture
  {
    MeshHierarchy background = build_square_hierarchy(1.4, 2);
    MeshHierarchy disk = build_disk_hierarchy(1.0, 2);
    ProblemConfig config;
    BlockSystem system;

    explicit Fixture(ElementChoice element = ElementChoice::element1,
                     CouplingMode coupling = CouplingMode::l2)
    {
      config.element = element;
      config.coupling = coupling;
      system = assemble_system(config, background, disk, 2, 2);
    }
  };

  std::vector<double> random_vector(std::mt19937 &rng, std::size_t n)
  {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto &x : v)
      x = dist(rng);
    return v;
  }

  // Count eigenvalues of the left-preconditioned operator equal to one.
  std::size_t unit_eigenvalue_count(const BlockSystem &system, const BlockPreconditioner &p)
  {
    const CsrMatrix full = compose_full_matrix(system);
    const std::size_t n = full.n_rows();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      {
        e[j] = 1.0;
        const std::vector<double> col = p.apply(full.apply(e));
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
      }
    const Eigen::EigenSolver<Eigen::MatrixXd> eig(m, false);
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
      if (std::abs(eig.eigenvalues()(i) - std::complex<double>(1.0, 0.0)) < 1e-8)
        ++count;
    return count;
  }
} // namespace

TEST_CASE("variant and shape labels round-trip", "[precond]")
{
  CHECK(parse_variant("dd") ==
        std::pair{InverseKind::direct, InverseKind::direct});
  CHECK(parse_variant("dm") ==
        std::pair{InverseKind::direct, InverseKind::multigrid});
  CHECK(parse_variant("md") ==
        std::pair{InverseKind::multigrid, InverseKind::direct});
  CHECK(parse_variant("mm") ==
        std::pair{InverseKind::multigrid, InverseKind::multigrid});
  CHECK_THROWS_AS(parse_variant("xd"), std::invalid_argument);
  CHECK_THROWS_AS(parse_variant("d"), std::invalid_argument);

  PrecondSpec spec;
  spec.a1_inverse = InverseKind::multigrid;
  spec.b_inverse = InverseKind::direct;
  CHECK(variant_label(spec) == "md");

  CHECK(parse_shape("p2") == PrecondShape::p2);
  CHECK(shape_label(PrecondShape::p1) == "p1");
  CHECK_THROWS_AS(parse_shape("p4"), std::invalid_argument);
}

TEST_CASE("direct block preconditioners satisfy their defining equations", "[precond]")
{
  for (const auto element_coupling :
       {std::pair{ElementChoice::element1, CouplingMode::l2},
        std::pair{ElementChoice::element1, CouplingMode::h1},
        std::pair{ElementChoice::element2, CouplingMode::l2}})
    {
      Fixture fx(element_coupling.first, element_coupling.second);
      const BlockSystem &s = fx.system;
      const CsrMatrix b_matrix = compose_b_matrix(s);
      const std::size_t nv = s.n_v(), nv2 = s.n_v2(), nl = s.n_lambda();

      std::mt19937 rng(0x6001u);
      for (PrecondShape shape : {PrecondShape::p1, PrecondShape::p2, PrecondShape::p3})
        {
          const BlockPreconditioner p = build_preconditioner(
            s, fx.config, PrecondSpec{shape, InverseKind::direct, InverseKind::direct});

          for (int trial = 0; trial < 10; ++trial)
            {
              const std::vector<double> r = random_vector(rng, nv + nv2 + nl);
              const std::vector<double> z = p.apply(r);

              const std::vector<double> ru(r.begin(), r.begin() + nv);
              const std::vector<double> rb(r.begin() + nv, r.end());
              const std::vector<double> zu(z.begin(), z.begin() + nv);
              const std::vector<double> zb(z.begin() + nv, z.end());
              const std::vector<double> zl(z.begin() + nv + nv2, z.end());

              // background row: A1 zu (+ coupling for the upper-triangular shape) = ru
              std::vector<double> row_u = s.a1.apply(zu);
              if (shape == PrecondShape::p1)
                axpy(1.0, s.c1.apply_transpose(zl), row_u);
              CHECK(norm2(subtract(row_u, ru)) < 1e-10);

              // saddle rows: B zb (+ coupling for the lower-triangular shape) = rb
              std::vector<double> row_b = b_matrix.apply(zb);
              if (shape == PrecondShape::p2)
                {
                  const std::vector<double> trace = s.c1.apply(zu);
                  for (std::size_t i = 0; i < nl; ++i)
                    row_b[nv2 + i] += trace[i];
                }
              CHECK(norm2(subtract(row_b, rb)) < 1e-10);
            }
        }
    }
}

TEST_CASE("triangular shapes pin an eigenvalue cluster at one", "[precond]")
{
  for (const auto element_coupling :
       {std::pair{ElementChoice::element1, CouplingMode::l2},
        std::pair{ElementChoice::element2, CouplingMode::l2}})
    {
      Fixture fx(element_coupling.first, element_coupling.second);
      const std::size_t expected = fx.system.n_v2() + fx.system.n_lambda();

      for (PrecondShape shape : {PrecondShape::p1, PrecondShape::p2})
        {
          const BlockPreconditioner p = build_preconditioner(
            fx.system, fx.config, PrecondSpec{shape, InverseKind::direct, InverseKind::direct});
          CHECK(unit_eigenvalue_count(fx.system, p) >= expected);
        }
    }
}

TEST_CASE("repeated cycles drive the multigrid variant toward the direct one", "[precond]")
{
  Fixture fx;
  std::mt19937 rng(0x6002u);
  const std::vector<double> r = random_vector(rng, fx.system.size());

  const BlockPreconditioner dd = build_preconditioner(
    fx.system, fx.config,
    PrecondSpec{PrecondShape::p3, InverseKind::direct, InverseKind::direct});
  const std::vector<double> z_exact = dd.apply(r);

  double first_gap = 0.0;
  double previous_gap = std::numeric_limits<double>::infinity();
  double elliptic_gap = std::numeric_limits<double>::infinity();
  for (int cycles : {1, 3, 6})
    {
      MgConfig mg;
      mg.cycles = cycles;
      const BlockPreconditioner mm = build_preconditioner(
        fx.system, fx.config,
        PrecondSpec{PrecondShape::p3, InverseKind::multigrid, InverseKind::multigrid}, mg);
      const std::vector<double> diff = subtract(mm.apply(r), z_exact);
      const double gap = norm2(diff) / norm2(z_exact);
      CHECK(gap < previous_gap);
      if (cycles == 1)
        first_gap = gap;
      previous_gap = gap;
      const std::vector<double> diff_u(diff.begin(), diff.begin() + fx.system.n_v());
      const std::vector<double> exact_u(z_exact.begin(), z_exact.begin() + fx.system.n_v());
      elliptic_gap = norm2(diff_u) / norm2(exact_u);
    }
  // The diagonal shape applies the two cycles independently: the elliptic
  // one converges fast, the saddle one slowly but monotonically.
  CHECK(previous_gap < 0.75 * first_gap);
  CHECK(elliptic_gap < 1e-3);
}

TEST_CASE("all twelve shape-variant combinations are linear and reproducible", "[precond]")
{
  Fixture fx(ElementChoice::element1, CouplingMode::h1);
  std::mt19937 rng(0x6003u);
  const std::vector<double> r = random_vector(rng, fx.system.size());
  const std::vector<double> s_vec = random_vector(rng, fx.system.size());

  for (PrecondShape shape : {PrecondShape::p1, PrecondShape::p2, PrecondShape::p3})
    for (InverseKind a1_kind : {InverseKind::direct, InverseKind::multigrid})
      for (InverseKind b_kind : {InverseKind::direct, InverseKind::multigrid})
        {
          const BlockPreconditioner p =
            build_preconditioner(fx.system, fx.config, PrecondSpec{shape, a1_kind, b_kind});

          const std::vector<double> z1 = p.apply(r);
          const std::vector<double> z2 = p.apply(r);
          CHECK(z1 == z2);

          // additivity: P(r + s) = P(r) + P(s)
          std::vector<double> rs = r;
          axpy(1.0, s_vec, rs);
          const std::vector<double> z_sum = p.apply(rs);
          std::vector<double> expected = z1;
          axpy(1.0, p.apply(s_vec), expected);
          for (std::size_t i = 0; i < z_sum.size(); ++i)
            CHECK_THAT(z_sum[i], Catch::Matchers::WithinAbs(expected[i],
                                                            1e-9 + 1e-9 * std::abs(expected[i])));
        }
}

TEST_CASE("dimension mismatches are rejected up front", "[precond]")
{
  Fixture fx;
  const auto c1 = std::make_shared<const CsrMatrix>(fx.system.c1);
  CHECK_THROWS_AS(BlockPreconditioner(PrecondShape::p3, LinearOperator::identity(3),
                                      LinearOperator::identity(fx.system.n_v2() +
                                                               fx.system.n_lambda()),
                                      c1, fx.system.n_v(), fx.system.n_v2(),
                                      fx.system.n_lambda()),
                  std::invalid_argument);

  const BlockPreconditioner p = build_preconditioner(
    fx.system, fx.config,
    PrecondSpec{PrecondShape::p3, InverseKind::direct, InverseKind::direct});
  CHECK_THROWS_AS(p.apply(std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST_CASE("losing the coefficient-contrast guarantee is reported clearly", "[precond]")
{
  // With equal coefficients the enriched saddle block is genuinely singular;
  // the failure must name the violated requirement rather than crash.
  const MeshHierarchy background = build_square_hierarchy(1.4, 2);
  const MeshHierarchy disk = build_disk_hierarchy(1.0, 2);
  ProblemConfig config;
  config.element = ElementChoice::element2;
  config.beta = 1.0;
  config.beta2 = 1.0;
  config.allow_degenerate_contrast = true;

  std::ostringstream sink;
  config.validate(&sink); // swallow the warning
  const BlockSystem s = assemble_system(config, background, disk, 2, 2);

  try
    {
      build_preconditioner(s, config,
                           PrecondSpec{PrecondShape::p3, InverseKind::direct,
                                       InverseKind::direct});
      FAIL("expected the saddle factorization to fail");
    }
  catch (const SingularMatrixError &e)
    {
      CHECK(std::string(e.what()).find("beta2 > beta") != std::string::npos);
    }
}
