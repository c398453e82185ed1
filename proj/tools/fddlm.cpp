// Command-line driver for the immersed-interface benchmark: runs the
// experiment matrix (optionally filtered), writes the result CSV, and
// optionally renders the SVG panels.

#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fddlm/fddlm.hpp"

namespace
{
  std::string trimmed(const std::string &s)
  {
    const auto first = s.find_first_not_of(" \t\r");
    const auto last = s.find_last_not_of(" \t\r");
    return first == std::string::npos ? std::string{} : s.substr(first, last - first + 1);
  }

  // Expand `--config FILE` into synthetic `--key=value` arguments. The file
  // holds one `key = value` pair per line with `#` comments; a key that was
  // already given on the command line is skipped, so explicit flags win.
  std::vector<std::string> expand_config(int argc, char **argv)
  {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i)
      {
        if (args[i] == "--config" && i + 1 < args.size())
          config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
          config_path = args[i].substr(9);
      }
    if (config_path.empty())
      return args;

    std::ifstream in(config_path);
    if (!in)
      throw std::runtime_error("cannot open config file: " + config_path);
    std::string line;
    while (std::getline(in, line))
      {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
          line.erase(hash);
        line = trimmed(line);
        if (line.empty())
          continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
          throw std::runtime_error("config line is not key=value: " + line);
        const std::string key = trimmed(line.substr(0, eq));
        const std::string value = trimmed(line.substr(eq + 1));
        if (key.empty())
          throw std::runtime_error("config line has an empty key: " + line);
        const std::string flag = "--" + key;
        bool given = false;
        for (const std::string &a : args)
          if (a == flag || a.rfind(flag + "=", 0) == 0)
            given = true;
        if (given)
          continue;
        if (value == "true" || value.empty())
          args.push_back(flag); // boolean switches
        else
          args.push_back(flag + "=" + value);
      }
    return args;
  }
} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"finite element benchmark for immersed-domain block preconditioners"};
  app.require_subcommand(1);

  CLI::App *run = app.add_subcommand("run", "run the experiment matrix and write results");

  fddlm::BenchSettings settings;
  std::string element_filter, shape_filter, variant_filter;
  std::string csv_path = "fddlm_results.csv";
  std::string plots_dir;

  run->add_option("--element", element_filter, "restrict to one case: e1l2, e1h1, or e2l2")
    ->check(CLI::IsMember({"e1l2", "e1h1", "e2l2"}));
  run->add_option("--shape", shape_filter, "restrict to one preconditioner shape: p1, p2, p3")
    ->check(CLI::IsMember({"p1", "p2", "p3"}));
  run->add_option("--variant", variant_filter,
                  "restrict to one block-inverse variant: dd, dm, md, mm")
    ->check(CLI::IsMember({"dd", "dm", "md", "mm"}));
  run->add_option("--min-level", settings.min_level, "coarsest background level (default 2)");
  run->add_option("--max-level", settings.max_level, "finest background level (default 5)");
  run->add_option("--beta", settings.beta, "diffusion coefficient on the box (default 1)");
  run->add_option("--beta2", settings.beta2,
                  "diffusion coefficient on the immersed disk (default 10)");
  run->add_option("--f", settings.f, "source term on the box (default 1)");
  run->add_option("--f2", settings.f2, "source term on the disk (default 1)");
  run->add_option("--tol", settings.tol, "GMRES residual tolerance (default 1e-12)");
  run->add_option("--max-iter", settings.max_iter, "GMRES iteration cap (default 100000)");
  run->add_option("--smooth-steps", settings.smooth_steps,
                  "multigrid smoothing steps per phase (default 2)");
  run->add_option("--sor-omega", settings.sor_omega,
                  "relaxation parameter for the elliptic smoother (default 1.0)");
  run->add_option("--disk-level-offset", settings.disk_level_offset,
                  "disk level minus background level (default 0)");
  run->add_option("--csv", csv_path, "CSV output path (default fddlm_results.csv)");
  run->add_option("--plots", plots_dir, "directory for SVG plot panels (omit to skip plots)");
  run->add_flag("--relative", settings.relative,
                "interpret --tol relative to the right-hand side norm");
  run->add_option("--dense-cap", settings.dense_cond_cap,
                  "largest system size for dense condition estimates (default 6000)");
  run->add_flag("--allow-beta2-le-beta", settings.allow_degenerate_contrast,
                "proceed (with a warning) when beta2 <= beta");
  std::string config_path;
  run->add_option("--config", config_path,
                  "plain key=value file; command-line flags override it");

  std::vector<std::string> args;
  try
    {
      args = expand_config(argc, argv);
    }
  catch (const std::exception &e)
    {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  // CLI11 parses the reversed argument list.
  std::reverse(args.begin(), args.end());
  try
    {
      app.parse(args);
    }
  catch (const CLI::ParseError &e)
    {
      return app.exit(e);
    }

  try
    {
      fddlm::MatrixFilter filter;
      if (!element_filter.empty())
        filter.case_id = fddlm::parse_case(element_filter);
      if (!shape_filter.empty())
        filter.shape = fddlm::parse_shape(shape_filter);
      if (!variant_filter.empty())
        filter.variant = fddlm::parse_variant(variant_filter);

      const std::vector<fddlm::ResultRow> rows =
        fddlm::run_matrix(settings, filter, &std::cerr);
      if (rows.empty())
        {
          std::cerr << "warning: the requested filters match no experiment\n";
          return 1;
        }

      fddlm::emit_csv(rows, csv_path);
      std::cerr << "[done] " << rows.size() << " rows -> " << csv_path << '\n';

      if (!plots_dir.empty())
        {
          const auto files = fddlm::emit_plots(rows, plots_dir);
          std::cerr << "[done] " << files.size() << " plot files -> " << plots_dir << '\n';
        }
    }
  catch (const std::exception &e)
    {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  return 0;
}
