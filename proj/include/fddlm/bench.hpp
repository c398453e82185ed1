#ifndef FDDLM_BENCH_HPP
#define FDDLM_BENCH_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fddlm/assembly.hpp"
#include "fddlm/csr.hpp"
#include "fddlm/linalg.hpp"
#include "fddlm/mesh.hpp"
#include "fddlm/precond.hpp"

namespace fddlm
{

//----------------------------------------------------------------------
// Experiment identification
//----------------------------------------------------------------------

// The three discretization/coupling columns of the study.
enum class CaseId
{
  e1l2, // Q1-Q1-Q1 with L2 coupling
  e1h1, // Q1-Q1-Q1 with H1 coupling
  e2l2  // Q1-(Q1+bubble)-P0 with L2 coupling
};

inline std::string case_label(CaseId id)
{
  switch (id)
    {
      case CaseId::e1l2:
        return "e1l2";
      case CaseId::e1h1:
        return "e1h1";
      default:
        return "e2l2";
    }
}

inline CaseId parse_case(const std::string &label)
{
  if (label == "e1l2")
    return CaseId::e1l2;
  if (label == "e1h1")
    return CaseId::e1h1;
  if (label == "e2l2")
    return CaseId::e2l2;
  throw std::invalid_argument("case must be one of e1l2, e1h1, e2l2: " + label);
}

inline ElementChoice element_of(CaseId id)
{
  return id == CaseId::e2l2 ? ElementChoice::element2 : ElementChoice::element1;
}

inline CouplingMode coupling_of(CaseId id)
{
  return id == CaseId::e1h1 ? CouplingMode::h1 : CouplingMode::l2;
}

// One (discretization, preconditioner shape, block-inverse variant) series.
struct ExperimentCase
{
  CaseId case_id = CaseId::e1l2;
  PrecondShape shape = PrecondShape::p3;
  InverseKind a1_inverse = InverseKind::direct;
  InverseKind b_inverse = InverseKind::direct;
};

struct BenchSettings
{
  double half_width = 1.4; // background box [-hw, hw]^2
  double radius = 1.0;     // immersed disk radius
  double beta = 1.0;
  double beta2 = 10.0;
  double f = 1.0;
  double f2 = 1.0;
  double tol = 1e-12;
  bool relative = false; // interpret tol relative to ||b||
  std::size_t max_iter = 100000;
  std::size_t restart = 200;
  int smooth_steps = 2;
  double sor_omega = 1.0;
  int min_level = 2;
  int max_level = 5;
  int disk_level_offset = 0;          // disk level = background level + offset
  std::size_t dense_cond_cap = 6000;  // above this, dense SVD estimates are skipped
  bool allow_degenerate_contrast = false;
};

struct ResultRow
{
  std::string case_id;
  std::string shape;
  std::string variant;
  int level = 0;
  double h = 0.0;
  std::size_t n_v = 0;
  std::size_t n_v2 = 0;
  std::size_t n_lambda = 0;
  double cond_initial = std::numeric_limits<double>::quiet_NaN();
  double cond_precond = std::numeric_limits<double>::quiet_NaN();
  std::string cond_method;
  std::size_t iterations = 0;
  double solve_seconds = 0.0;
  double setup_seconds = 0.0;
  bool converged = false;
};

//----------------------------------------------------------------------
// Shared per-case state: meshes and per-level assembled systems
//----------------------------------------------------------------------

namespace detail
{
  struct AssembledLevel
  {
    BlockSystem system;
    std::shared_ptr<const CsrMatrix> full;
    std::vector<double> rhs;
    double cond_initial = std::numeric_limits<double>::quiet_NaN();
    std::string cond_method;
  };
} // namespace detail

// Builds the meshes once and caches one assembled system plus its
// unpreconditioned condition estimate per refinement level, shared by all
// twelve (shape, variant) runs of the case.
class CaseWorkspace
{
public:
  CaseWorkspace(CaseId id, const BenchSettings &settings) : id_(id), settings_(settings)
  {
    if (settings.min_level < 2 || settings.max_level < settings.min_level)
      throw std::invalid_argument("refinement levels must satisfy 2 <= min <= max");
    if (settings.min_level + settings.disk_level_offset < 1)
      throw std::invalid_argument("disk level offset drops the disk below level 1");
    background_ = std::make_shared<MeshHierarchy>(
      build_square_hierarchy(settings.half_width, settings.max_level));
    disk_ = std::make_shared<MeshHierarchy>(
      build_disk_hierarchy(settings.radius, settings.max_level + settings.disk_level_offset));
  }

  CaseId id() const { return id_; }

  ProblemConfig problem_config() const
  {
    ProblemConfig config;
    config.beta = settings_.beta;
    config.beta2 = settings_.beta2;
    config.f = settings_.f;
    config.f2 = settings_.f2;
    config.coupling = coupling_of(id_);
    config.element = element_of(id_);
    config.allow_degenerate_contrast = settings_.allow_degenerate_contrast;
    return config;
  }

  const detail::AssembledLevel &level(int background_level)
  {
    auto found = levels_.find(background_level);
    if (found != levels_.end())
      return found->second;

    detail::AssembledLevel assembled;
    assembled.system = assemble_system(problem_config(), *background_, *disk_, background_level,
                                       background_level + settings_.disk_level_offset);
    assembled.full = std::make_shared<const CsrMatrix>(compose_full_matrix(assembled.system));
    assembled.rhs = compose_rhs(assembled.system);

    const LinearOperator op = LinearOperator::from_matrix(assembled.full);
    if (assembled.full->n_rows() <= settings_.dense_cond_cap)
      {
        assembled.cond_initial = estimate_condition_number(op, CondMode::dense_svd);
        assembled.cond_method = "dense";
      }
    else
      {
        assembled.cond_initial = estimate_condition_number(op, CondMode::iterative);
        assembled.cond_method = "estimated";
      }
    return levels_.emplace(background_level, std::move(assembled)).first->second;
  }

private:
  CaseId id_;
  BenchSettings settings_;
  std::shared_ptr<MeshHierarchy> background_, disk_;
  std::map<int, detail::AssembledLevel> levels_;
};

//----------------------------------------------------------------------
// Case and matrix drivers
//----------------------------------------------------------------------

// Runs one (case, shape, variant) series over the configured levels: for
// each level assemble (cached), build the preconditioner, estimate the
// preconditioned condition number, solve, and record a row. Non-convergence
// is recorded, never thrown.
inline std::vector<ResultRow> run_case(const ExperimentCase &experiment, CaseWorkspace &workspace,
                                       const BenchSettings &settings,
                                       std::ostream *progress = nullptr)
{
  const PrecondSpec spec{experiment.shape, experiment.a1_inverse, experiment.b_inverse};

  MgConfig mg;
  mg.smooth_steps = settings.smooth_steps;
  mg.sor_omega = settings.sor_omega;
  mg.b_smooth_steps = settings.smooth_steps;
  // The discontinuous pairing needs a stronger saddle smoother; the local
  // patch sweeps are raised unless the user already asked for more.
  if (experiment.case_id == CaseId::e2l2 && experiment.b_inverse == InverseKind::multigrid)
    mg.b_smooth_steps = std::max(settings.smooth_steps, 5);

  std::vector<ResultRow> rows;
  for (int level = settings.min_level; level <= settings.max_level; ++level)
    {
      const detail::AssembledLevel &assembled = workspace.level(level);

      ResultRow row;
      row.case_id = case_label(experiment.case_id);
      row.shape = shape_label(experiment.shape);
      row.variant = variant_label(spec);
      row.level = level;
      row.h = 2.0 * settings.half_width / static_cast<double>(1 << (level - 1));
      row.n_v = assembled.system.n_v();
      row.n_v2 = assembled.system.n_v2();
      row.n_lambda = assembled.system.n_lambda();
      row.cond_initial = assembled.cond_initial;
      row.cond_method = assembled.cond_method;

      if (progress != nullptr)
        *progress << "[run] " << row.case_id << ' ' << row.shape << ' ' << row.variant
                  << " level " << level << " (n=" << assembled.full->n_rows() << ")\n";

      const auto t_setup = std::chrono::steady_clock::now();
      const BlockPreconditioner precond =
        build_preconditioner(assembled.system, workspace.problem_config(), spec, mg);
      row.setup_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_setup).count();

      const LinearOperator op = LinearOperator::from_matrix(assembled.full);
      const LinearOperator precond_op = precond.as_operator();

      if (assembled.full->n_rows() <= settings.dense_cond_cap)
        {
          // Condition of the operator the solver iterates on: A applied to
          // the preconditioned vector.
          const LinearOperator iterated(
            assembled.full->n_rows(), assembled.full->n_cols(),
            [&op, &precond_op](const std::vector<double> &x) {
              return op.apply(precond_op.apply(x));
            });
          row.cond_precond = estimate_condition_number(iterated, CondMode::dense_svd);
        }
      else
        {
          // No matrix backs the preconditioned operator, so nothing cheaper
          // than the dense estimate exists; the field stays unavailable.
          row.cond_precond = std::numeric_limits<double>::quiet_NaN();
        }

      GmresOptions opts;
      opts.tol = settings.tol;
      opts.relative = settings.relative;
      opts.max_iter = settings.max_iter;
      opts.restart = settings.restart;
      const GmresResult result = gmres(op, assembled.rhs, &precond_op, opts);
      row.iterations = result.report.iterations;
      row.solve_seconds = result.report.wall_seconds;
      row.converged = result.report.converged;
      rows.push_back(std::move(row));
    }
  return rows;
}

// Optional single-valued filters; an empty optional keeps every value.
struct MatrixFilter
{
  std::optional<CaseId> case_id;
  std::optional<PrecondShape> shape;
  std::optional<std::pair<InverseKind, InverseKind>> variant;
};

// Runs every admissible (case, shape, variant) combination exactly once, in
// a fixed order so reruns produce identically ordered rows.
inline std::vector<ResultRow> run_matrix(const BenchSettings &settings,
                                         const MatrixFilter &filter = {},
                                         std::ostream *progress = nullptr)
{
  static constexpr CaseId all_cases[] = {CaseId::e1h1, CaseId::e1l2, CaseId::e2l2};
  static constexpr PrecondShape all_shapes[] = {PrecondShape::p1, PrecondShape::p2,
                                                PrecondShape::p3};
  static constexpr std::pair<InverseKind, InverseKind> all_variants[] = {
    {InverseKind::direct, InverseKind::direct},
    {InverseKind::direct, InverseKind::multigrid},
    {InverseKind::multigrid, InverseKind::direct},
    {InverseKind::multigrid, InverseKind::multigrid},
  };

  std::vector<ResultRow> rows;
  for (const CaseId case_id : all_cases)
    {
      if (filter.case_id && *filter.case_id != case_id)
        continue;
      CaseWorkspace workspace(case_id, settings);
      for (const PrecondShape shape : all_shapes)
        {
          if (filter.shape && *filter.shape != shape)
            continue;
          for (const auto &variant : all_variants)
            {
              if (filter.variant && *filter.variant != variant)
                continue;
              ExperimentCase experiment{case_id, shape, variant.first, variant.second};
              std::vector<ResultRow> case_rows =
                run_case(experiment, workspace, settings, progress);
              rows.insert(rows.end(), std::make_move_iterator(case_rows.begin()),
                          std::make_move_iterator(case_rows.end()));
            }
        }
    }
  return rows;
}

//----------------------------------------------------------------------
// CSV emission and parsing
//----------------------------------------------------------------------

inline constexpr const char *csv_header =
  "case,shape,variant,level,h,n_v,n_v2,n_lambda,cond_initial,cond_precond,cond_method,"
  "iterations,solve_seconds,setup_seconds,converged";

namespace detail
{
  inline std::string format_real(double value)
  {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
  }
} // namespace detail

inline void emit_csv(const std::vector<ResultRow> &rows, std::ostream &out)
{
  out << csv_header << '\n';
  for (const ResultRow &row : rows)
    {
      out << row.case_id << ',' << row.shape << ',' << row.variant << ',' << row.level << ','
          << detail::format_real(row.h) << ',' << row.n_v << ',' << row.n_v2 << ','
          << row.n_lambda << ',' << detail::format_real(row.cond_initial) << ','
          << detail::format_real(row.cond_precond) << ',' << row.cond_method << ','
          << row.iterations << ',' << detail::format_real(row.solve_seconds) << ','
          << detail::format_real(row.setup_seconds) << ','
          << (row.converged ? "true" : "false") << '\n';
    }
}

inline void emit_csv(const std::vector<ResultRow> &rows, const std::string &path)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open CSV output file: " + path);
  emit_csv(rows, out);
  if (!out.good())
    throw std::runtime_error("failed while writing CSV output file: " + path);
}

inline std::vector<ResultRow> parse_csv(std::istream &in)
{
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("CSV input is empty");
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  if (line != csv_header)
    throw std::invalid_argument("unexpected CSV header: " + line);

  std::vector<ResultRow> rows;
  while (std::getline(in, line))
    {
      if (!line.empty() && line.back() == '\r')
        line.pop_back();
      if (line.empty())
        continue;
      std::vector<std::string> fields;
      std::string::size_type start = 0;
      while (true)
        {
          const auto comma = line.find(',', start);
          fields.push_back(line.substr(start, comma - start));
          if (comma == std::string::npos)
            break;
          start = comma + 1;
        }
      if (fields.size() != 15)
        throw std::invalid_argument("CSV row does not have 15 fields: " + line);

      ResultRow row;
      row.case_id = fields[0];
      row.shape = fields[1];
      row.variant = fields[2];
      row.level = std::stoi(fields[3]);
      row.h = std::strtod(fields[4].c_str(), nullptr);
      row.n_v = std::stoull(fields[5]);
      row.n_v2 = std::stoull(fields[6]);
      row.n_lambda = std::stoull(fields[7]);
      row.cond_initial = std::strtod(fields[8].c_str(), nullptr);
      row.cond_precond = std::strtod(fields[9].c_str(), nullptr);
      row.cond_method = fields[10];
      row.iterations = std::stoull(fields[11]);
      row.solve_seconds = std::strtod(fields[12].c_str(), nullptr);
      row.setup_seconds = std::strtod(fields[13].c_str(), nullptr);
      if (fields[14] == "true")
        row.converged = true;
      else if (fields[14] == "false")
        row.converged = false;
      else
        throw std::invalid_argument("converged field must be true or false: " + fields[14]);
      rows.push_back(std::move(row));
    }
  return rows;
}

inline std::vector<ResultRow> parse_csv(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open CSV input file: " + path);
  return parse_csv(in);
}

//----------------------------------------------------------------------
// SVG plots
//----------------------------------------------------------------------

namespace detail
{
  struct PlotSeries
  {
    std::string label;
    std::string color;
    bool dashed = false;
    std::vector<std::pair<double, double>> points; // (x, y), positive finite only
  };

  inline bool plottable(double v)
  {
    return std::isfinite(v) && v > 0.0;
  }

  inline std::string decade_label(int exponent)
  {
    char buffer[16];
    std::snprintf(buffer, sizeof buffer, "1e%+03d", exponent);
    return buffer;
  }

  // Minimal log-log scatter/line panel. Both axes get decade ticks; series
  // are polylines with circular markers and a legend in the top-right.
  inline void write_loglog_svg(const std::string &path, const std::string &title,
                               const std::string &x_label, const std::string &y_label,
                               const std::vector<PlotSeries> &series)
  {
    double x_min = std::numeric_limits<double>::infinity();
    double x_max = 0.0;
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = 0.0;
    for (const PlotSeries &s : series)
      for (const auto &[x, y] : s.points)
        {
          x_min = std::min(x_min, x);
          x_max = std::max(x_max, x);
          y_min = std::min(y_min, y);
          y_max = std::max(y_max, y);
        }
    if (!(x_max > 0.0) || !(y_max > 0.0))
      return; // nothing plottable

    int x_lo = static_cast<int>(std::floor(std::log10(x_min)));
    int x_hi = static_cast<int>(std::ceil(std::log10(x_max)));
    int y_lo = static_cast<int>(std::floor(std::log10(y_min)));
    int y_hi = static_cast<int>(std::ceil(std::log10(y_max)));
    if (x_lo == x_hi)
      ++x_hi;
    if (y_lo == y_hi)
      ++y_hi;

    const double width = 640.0, height = 480.0;
    const double left = 80.0, right = 620.0, top = 50.0, bottom = 420.0;
    const auto x_pix = [&](double x) {
      return left + (std::log10(x) - x_lo) / (x_hi - x_lo) * (right - left);
    };
    const auto y_pix = [&](double y) {
      return bottom - (std::log10(y) - y_lo) / (y_hi - y_lo) * (bottom - top);
    };

    std::ofstream out(path);
    if (!out)
      throw std::runtime_error("cannot open SVG output file: " + path);

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << (left + right) / 2 << "\" y=\"28\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";

    // frame
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left
        << "\" height=\"" << bottom - top << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int e = x_lo; e <= x_hi; ++e)
      {
        const double px = x_pix(std::pow(10.0, e));
        out << "<line x1=\"" << px << "\" y1=\"" << top << "\" x2=\"" << px << "\" y2=\""
            << bottom << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << px << "\" y=\"" << bottom + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << decade_label(e) << "</text>\n";
      }
    for (int e = y_lo; e <= y_hi; ++e)
      {
        const double py = y_pix(std::pow(10.0, e));
        out << "<line x1=\"" << left << "\" y1=\"" << py << "\" x2=\"" << right << "\" y2=\""
            << py << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << py + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << decade_label(e) << "</text>\n";
      }

    out << "<text x=\"" << (left + right) / 2 << "\" y=\"" << bottom + 45
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << x_label
        << "</text>\n";
    out << "<text x=\"20\" y=\"" << (top + bottom) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
           "transform=\"rotate(-90 20 "
        << (top + bottom) / 2 << ")\">" << y_label << "</text>\n";

    double legend_y = top + 18.0;
    for (const PlotSeries &s : series)
      {
        if (s.points.empty())
          continue;
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
        if (s.dashed)
          out << " stroke-dasharray=\"6 4\"";
        out << " points=\"";
        for (const auto &[x, y] : s.points)
          out << x_pix(x) << ',' << y_pix(y) << ' ';
        out << "\"/>\n";
        for (const auto &[x, y] : s.points)
          out << "<circle cx=\"" << x_pix(x) << "\" cy=\"" << y_pix(y) << "\" r=\"3\" fill=\""
              << s.color << "\"/>\n";

        out << "<line x1=\"" << right - 110 << "\" y1=\"" << legend_y << "\" x2=\""
            << right - 85 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"";
        if (s.dashed)
          out << " stroke-dasharray=\"6 4\"";
        out << "/>\n";
        out << "<text x=\"" << right - 78 << "\" y=\"" << legend_y + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
        legend_y += 18.0;
      }

    out << "</svg>\n";
    if (!out.good())
      throw std::runtime_error("failed while writing SVG output file: " + path);
  }

  inline std::string variant_color(const std::string &variant)
  {
    if (variant == "dd")
      return "#1f77b4";
    if (variant == "dm")
      return "#ff7f0e";
    if (variant == "md")
      return "#2ca02c";
    if (variant == "mm")
      return "#d62728";
    return "#555555";
  }
} // namespace detail

// Writes one condition panel and one iteration/time panel per (case, shape)
// present in the rows; returns the written file paths. Empty input writes
// nothing and warns on stderr.
inline std::vector<std::string> emit_plots(const std::vector<ResultRow> &rows,
                                           const std::string &out_dir)
{
  if (rows.empty())
    {
      std::cerr << "warning: no benchmark rows, skipping plot output\n";
      return {};
    }
  std::filesystem::create_directories(out_dir);

  static const char *variant_order[] = {"dd", "dm", "md", "mm"};
  std::vector<std::string> written;

  for (const char *case_name : {"e1h1", "e1l2", "e2l2"})
    for (const char *shape_name : {"p1", "p2", "p3"})
      {
        std::vector<const ResultRow *> group;
        for (const ResultRow &row : rows)
          if (row.case_id == case_name && row.shape == shape_name)
            group.push_back(&row);
        if (group.empty())
          continue;

        // Condition panel: one series per variant plus the shared
        // unpreconditioned series (one point per level).
        std::vector<detail::PlotSeries> cond_series;
        for (const char *variant : variant_order)
          {
            detail::PlotSeries s{variant, detail::variant_color(variant), false, {}};
            for (const ResultRow *row : group)
              if (row->variant == variant && detail::plottable(row->h) &&
                  detail::plottable(row->cond_precond))
                s.points.emplace_back(row->h, row->cond_precond);
            if (!s.points.empty())
              cond_series.push_back(std::move(s));
          }
        {
          detail::PlotSeries s{"none", detail::variant_color("none"), true, {}};
          std::map<int, std::pair<double, double>> by_level;
          for (const ResultRow *row : group)
            if (detail::plottable(row->h) && detail::plottable(row->cond_initial))
              by_level[row->level] = {row->h, row->cond_initial};
          for (const auto &[level, point] : by_level)
            s.points.push_back(point);
          if (!s.points.empty())
            cond_series.push_back(std::move(s));
        }

        const std::string case_shape = std::string(case_name) + "_" + shape_name;
        if (!cond_series.empty())
          {
            const std::string path =
              (std::filesystem::path(out_dir) / ("cond_" + case_shape + ".svg")).string();
            detail::write_loglog_svg(path, "condition number vs h (" + case_shape + ")", "h",
                                     "condition number", cond_series);
            if (std::filesystem::exists(path))
              written.push_back(path);
          }

        // Iteration/time panel: iterations against solve seconds.
        std::vector<detail::PlotSeries> iter_series;
        for (const char *variant : variant_order)
          {
            detail::PlotSeries s{variant, detail::variant_color(variant), false, {}};
            for (const ResultRow *row : group)
              if (row->variant == variant && detail::plottable(row->solve_seconds) &&
                  detail::plottable(static_cast<double>(row->iterations)))
                s.points.emplace_back(row->solve_seconds,
                                      static_cast<double>(row->iterations));
            if (!s.points.empty())
              iter_series.push_back(std::move(s));
          }
        if (!iter_series.empty())
          {
            const std::string path =
              (std::filesystem::path(out_dir) / ("iters_" + case_shape + ".svg")).string();
            detail::write_loglog_svg(path, "iterations vs solve time (" + case_shape + ")",
                                     "solve seconds", "iterations", iter_series);
            if (std::filesystem::exists(path))
              written.push_back(path);
          }
      }

  if (written.empty())
    std::cerr << "warning: no plottable series, no plot files written\n";
  return written;
}

} // namespace fddlm

#endif
