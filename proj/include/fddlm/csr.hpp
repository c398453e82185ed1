#ifndef FDDLM_CSR_HPP
#define FDDLM_CSR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fddlm
{

struct Triplet
{
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  double value = 0.0;
};

// Compressed sparse row storage. Column indices are ascending within each
// row and duplicate triplets are summed on construction.
class CsrMatrix
{
public:
  CsrMatrix() = default;

  static CsrMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                 std::vector<Triplet> triplets)
  {
    for (const auto &t : triplets)
      if (t.row >= n_rows || t.col >= n_cols)
        throw std::invalid_argument("triplet index out of range");

    std::sort(triplets.begin(), triplets.end(), [](const Triplet &a, const Triplet &b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    CsrMatrix m;
    m.n_rows_ = n_rows;
    m.n_cols_ = n_cols;
    m.row_offsets_.assign(n_rows + 1, 0);
    m.col_indices_.reserve(triplets.size());
    m.values_.reserve(triplets.size());
    for (std::size_t i = 0; i < triplets.size();)
      {
        std::size_t j = i;
        double sum = 0.0;
        while (j < triplets.size() && triplets[j].row == triplets[i].row &&
               triplets[j].col == triplets[i].col)
          sum += triplets[j++].value;
        m.col_indices_.push_back(triplets[i].col);
        m.values_.push_back(sum);
        ++m.row_offsets_[triplets[i].row + 1];
        i = j;
      }
    for (std::size_t r = 0; r < n_rows; ++r)
      m.row_offsets_[r + 1] += m.row_offsets_[r];
    return m;
  }

  static CsrMatrix identity(std::size_t n)
  {
    std::vector<Triplet> t;
    t.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
      t.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(t));
  }

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t> &row_offsets() const { return row_offsets_; }
  const std::vector<std::uint32_t> &col_indices() const { return col_indices_; }
  const std::vector<double> &values() const { return values_; }

  std::span<const std::uint32_t> row_columns(std::size_t r) const
  {
    return {col_indices_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const
  {
    return {values_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }

  // Value at (r, c); zero when the entry is not stored.
  double coeff(std::size_t r, std::size_t c) const
  {
    const auto cols = row_columns(r);
    const auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(c));
    if (it == cols.end() || *it != c)
      return 0.0;
    return values_[row_offsets_[r] + static_cast<std::size_t>(it - cols.begin())];
  }

  std::vector<double> apply(const std::vector<double> &x) const
  {
    if (x.size() != n_cols_)
      throw std::invalid_argument("matrix-vector size mismatch");
    std::vector<double> y(n_rows_, 0.0);
    for (std::size_t r = 0; r < n_rows_; ++r)
      {
        double sum = 0.0;
        for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
          sum += values_[k] * x[col_indices_[k]];
        y[r] = sum;
      }
    return y;
  }

  std::vector<double> apply_transpose(const std::vector<double> &x) const
  {
    if (x.size() != n_rows_)
      throw std::invalid_argument("matrix-vector size mismatch");
    std::vector<double> y(n_cols_, 0.0);
    for (std::size_t r = 0; r < n_rows_; ++r)
      for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
        y[col_indices_[k]] += values_[k] * x[r];
    return y;
  }

  CsrMatrix transposed() const
  {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t r = 0; r < n_rows_; ++r)
      for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
        t.push_back({col_indices_[k], static_cast<std::uint32_t>(r), values_[k]});
    return from_triplets(n_cols_, n_rows_, std::move(t));
  }

  std::vector<Triplet> to_triplets() const
  {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t r = 0; r < n_rows_; ++r)
      for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
        t.push_back({static_cast<std::uint32_t>(r), col_indices_[k], values_[k]});
    return t;
  }

private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_ = {0};
  std::vector<std::uint32_t> col_indices_;
  std::vector<double> values_;
};

//----------------------------------------------------------------------
// MatrixMarket coordinate IO (1-based indices)
//----------------------------------------------------------------------

inline void write_matrix_market(const CsrMatrix &m, std::ostream &out)
{
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.n_rows() << ' ' << m.n_cols() << ' ' << m.nnz() << '\n';
  char line[96];
  for (std::size_t r = 0; r < m.n_rows(); ++r)
    {
      const auto cols = m.row_columns(r);
      const auto vals = m.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k)
        {
          std::snprintf(line, sizeof line, "%zu %u %.17g\n", r + 1, cols[k] + 1, vals[k]);
          out << line;
        }
    }
}

inline CsrMatrix read_matrix_market(std::istream &in)
{
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw std::invalid_argument("missing MatrixMarket banner");
  {
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (object != "matrix" || format != "coordinate" || field != "real" || symmetry != "general")
      throw std::invalid_argument("unsupported MatrixMarket header: " + line);
  }
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '%')
      break;

  std::size_t rows = 0, cols = 0, entries = 0;
  {
    std::istringstream sizes(line);
    if (!(sizes >> rows >> cols >> entries))
      throw std::invalid_argument("malformed MatrixMarket size line");
  }

  std::vector<Triplet> triplets;
  triplets.reserve(entries);
  for (std::size_t k = 0; k < entries; ++k)
    {
      std::size_t i = 0, j = 0;
      double v = 0.0;
      if (!(in >> i >> j >> v))
        throw std::invalid_argument("truncated MatrixMarket entry list");
      if (i < 1 || j < 1 || i > rows || j > cols)
        throw std::invalid_argument("MatrixMarket entry out of range");
      triplets.push_back({static_cast<std::uint32_t>(i - 1), static_cast<std::uint32_t>(j - 1), v});
    }
  return CsrMatrix::from_triplets(rows, cols, std::move(triplets));
}

//----------------------------------------------------------------------
// Small dense-free vector helpers shared by the solvers
//----------------------------------------------------------------------

inline double dot(const std::vector<double> &a, const std::vector<double> &b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double> &a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const std::vector<double> &x, std::vector<double> &y)
{
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] += alpha * x[i];
}

inline std::vector<double> subtract(const std::vector<double> &a, const std::vector<double> &b)
{
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    r[i] = a[i] - b[i];
  return r;
}

} // namespace fddlm

#endif
