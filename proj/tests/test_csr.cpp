#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>
#include <vector>

#include "fddlm/csr.hpp"

using namespace fddlm;

namespace
{
  CsrMatrix random_sparse(std::mt19937 &rng, std::size_t rows, std::size_t cols, int entries)
  {
    std::uniform_int_distribution<std::uint32_t> row_dist(0, static_cast<std::uint32_t>(rows - 1));
    std::uniform_int_distribution<std::uint32_t> col_dist(0, static_cast<std::uint32_t>(cols - 1));
    std::uniform_real_distribution<double> val_dist(-2.0, 2.0);
    std::vector<Triplet> triplets;
    for (int k = 0; k < entries; ++k)
      triplets.push_back({row_dist(rng), col_dist(rng), val_dist(rng)});
    return CsrMatrix::from_triplets(rows, cols, std::move(triplets));
  }
} // namespace

TEST_CASE("triplet assembly sorts, merges, and range-checks", "[csr]")
{
  const CsrMatrix m = CsrMatrix::from_triplets(
    2, 3, {{1, 2, 4.0}, {0, 0, 1.0}, {0, 0, 2.0}, {1, 0, -1.0}});
  CHECK(m.n_rows() == 2);
  CHECK(m.n_cols() == 3);
  CHECK(m.nnz() == 3); // duplicates merged
  CHECK(m.coeff(0, 0) == 3.0);
  CHECK(m.coeff(1, 2) == 4.0);
  CHECK(m.coeff(1, 0) == -1.0);
  CHECK(m.coeff(0, 1) == 0.0);

  CHECK_THROWS_AS(CsrMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(CsrMatrix::from_triplets(2, 2, {{0, 2, 1.0}}), std::invalid_argument);
}

TEST_CASE("matrix-vector products match a dense reference", "[csr]")
{
  std::mt19937 rng(0x3001u);
  const std::size_t rows = 17, cols = 11;
  const CsrMatrix m = random_sparse(rng, rows, cols, 60);

  std::vector<std::vector<double>> dense(rows, std::vector<double>(cols, 0.0));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      dense[r][c] = m.coeff(r, c);

  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x(cols), yt(rows);
  for (auto &v : x)
    v = dist(rng);
  for (auto &v : yt)
    v = dist(rng);

  const std::vector<double> y = m.apply(x);
  const std::vector<double> xt = m.apply_transpose(yt);
  for (std::size_t r = 0; r < rows; ++r)
    {
      double expect = 0.0;
      for (std::size_t c = 0; c < cols; ++c)
        expect += dense[r][c] * x[c];
      CHECK_THAT(y[r], Catch::Matchers::WithinAbs(expect, 1e-13));
    }
  for (std::size_t c = 0; c < cols; ++c)
    {
      double expect = 0.0;
      for (std::size_t r = 0; r < rows; ++r)
        expect += dense[r][c] * yt[r];
      CHECK_THAT(xt[c], Catch::Matchers::WithinAbs(expect, 1e-13));
    }

  // Explicit transpose agrees with the implicit transpose product.
  const CsrMatrix t = m.transposed();
  CHECK(t.n_rows() == cols);
  const std::vector<double> xt2 = t.apply(yt);
  for (std::size_t c = 0; c < cols; ++c)
    CHECK_THAT(xt2[c], Catch::Matchers::WithinAbs(xt[c], 1e-15));
}

TEST_CASE("identity and vector helpers behave", "[csr]")
{
  const CsrMatrix eye = CsrMatrix::identity(4);
  const std::vector<double> x{1.0, -2.0, 3.0, 0.5};
  CHECK(eye.apply(x) == x);

  CHECK(dot({1.0, 2.0}, {3.0, 4.0}) == 11.0);
  CHECK(norm2({3.0, 4.0}) == 5.0);
  std::vector<double> y{1.0, 1.0};
  axpy(2.0, {1.0, -1.0}, y);
  CHECK(y == std::vector<double>{3.0, -1.0});
  CHECK(subtract({5.0, 5.0}, {2.0, 3.0}) == std::vector<double>{3.0, 2.0});
}

TEST_CASE("matrix exchange format round-trips bitwise", "[csr]")
{
  std::mt19937 rng(0x3002u);
  const CsrMatrix m = random_sparse(rng, 9, 13, 40);

  std::ostringstream out;
  write_matrix_market(m, out);
  const std::string text = out.str();

  // Fixed banner and one-based indices.
  CHECK(text.rfind("%%MatrixMarket matrix coordinate real general\n", 0) == 0);
  {
    std::istringstream check(text);
    std::string banner;
    std::getline(check, banner);
    std::string line;
    std::getline(check, line);
    std::istringstream header(line);
    std::size_t rows, cols, nnz;
    REQUIRE((header >> rows >> cols >> nnz));
    CHECK(rows == 9);
    CHECK(cols == 13);
    CHECK(nnz == m.nnz());
    std::getline(check, line);
    std::istringstream first(line);
    std::size_t r, c;
    double v;
    REQUIRE((first >> r >> c >> v));
    CHECK(r >= 1);
    CHECK(c >= 1);
  }

  std::istringstream in(text);
  const CsrMatrix back = read_matrix_market(in);
  REQUIRE(back.n_rows() == m.n_rows());
  REQUIRE(back.n_cols() == m.n_cols());
  REQUIRE(back.nnz() == m.nnz());
  for (const Triplet &t : m.to_triplets())
    CHECK(back.coeff(t.row, t.col) == t.value); // %.17g round-trips doubles exactly

  std::istringstream bad("%%MatrixMarket matrix array real general\n1 1 1\n1 1 1.0\n");
  CHECK_THROWS_AS(read_matrix_market(bad), std::invalid_argument);
}
