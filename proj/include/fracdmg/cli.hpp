#pragma once

// Command-line front end. Exit codes: 0 completed (including in-model
// material failure), 1 usage or configuration error, 2 internal or
// numerical error.

#include <CLI11.hpp>

#include <cmath>
#include <cstddef>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fracdmg/config.hpp"
#include "fracdmg/driver.hpp"
#include "fracdmg/energy.hpp"
#include "fracdmg/errors.hpp"
#include "fracdmg/io.hpp"

namespace fracdmg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInternal = 2;

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot open output file '" + path + "'");
  return out;
}

inline std::string cell(double v) { return std::isfinite(v) ? format_g17(v) : std::string(); }

}  // namespace detail

inline int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const RunReport report = simulate(cfg.material, cfg.grid, cfg.load, cfg.energy_mode);
  {
    auto csv = detail::open_output(cfg.output_path);
    write_history_csv(csv, report.history, cfg.grid);
  }
  const std::string summary_path = cfg.output_path + ".summary.json";
  {
    auto js = detail::open_output(summary_path);
    js << run_summary(report, cfg).dump(2) << '\n';
  }
  if (report.status.completed()) {
    log << "completed " << cfg.grid.N << " steps in " << report.wall_time << " s; final D = "
        << format_g17(report.history.D().back()) << '\n';
  } else {
    log << "material failure at step " << *report.status.failed_at_step << " after " << report.wall_time
        << " s; last D = " << format_g17(report.history.D().back()) << '\n';
  }
  log << "wrote " << cfg.output_path << " and " << summary_path << '\n';
  return kExitOk;
}

struct ConvergeRow {
  std::size_t N = 0;
  double dt = 0.0;
  double err = std::numeric_limits<double>::quiet_NaN();
  double order = std::numeric_limits<double>::quiet_NaN();
  std::optional<std::size_t> failed_at_step;
};

/// Grid sizes of a study: explicit `sizes`, or coarse_n * 2^k for
/// k < levels. Sizes must be strictly increasing.
inline std::vector<std::size_t> study_sizes(const RunConfig& cfg, int levels, const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> ns = sizes;
  if (ns.empty()) {
    if (levels < 2) throw ParameterError("--levels must be >= 2");
    if (cfg.coarse_n == 0) throw ParameterError("converge needs [run] coarse_n or --sizes");
    for (int k = 0; k < levels; ++k) ns.push_back(cfg.coarse_n << k);
  }
  if (ns.size() < 2) throw ParameterError("a convergence study needs at least two grids");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] == 0) throw ParameterError("grid sizes must be >= 1");
    if (i > 0 && ns[i] <= ns[i - 1]) throw ParameterError("grid sizes must be strictly increasing (identical dt rejected)");
  }
  return ns;
}

inline std::vector<ConvergeRow> converge(const RunConfig& cfg, const std::vector<std::size_t>& ns) {
  const bool analytic =
      cfg.observable == Observable::free_energy && std::holds_alternative<QuadraticRamp>(cfg.load);
  if (!analytic) {
    for (std::size_t n : ns) {
      if (n >= cfg.grid.N || cfg.grid.N % n != 0) {
        throw ParameterError("grid N = " + std::to_string(n) + " must be a proper divisor of the reference grid.N = " +
                             std::to_string(cfg.grid.N));
      }
    }
  }

  auto observe = [&cfg](std::size_t N, std::optional<std::size_t>& failed) {
    const TimeGrid grid{cfg.grid.T, N};
    if (cfg.observable == Observable::free_energy) {
      return free_energy_trajectory(cfg.load, grid, cfg.material.beta_E, cfg.material.E_pseudo, cfg.energy_mode);
    }
    RunReport r = simulate(cfg.material, grid, cfg.load, cfg.energy_mode);
    failed = r.status.failed_at_step;
    const auto tau = r.history.tau();
    return std::vector<double>(tau.begin(), tau.end());
  };

  // Slot 0 holds the reference, slots 1.. the study grids.
  std::vector<std::vector<double>> series(ns.size() + 1);
  std::vector<std::optional<std::size_t>> failures(ns.size() + 1);
  parallel_for(ns.size() + 1, [&](std::size_t i) {
    if (i == 0) {
      if (analytic) {
        // Closed form sampled on the finest study grid.
        const TimeGrid grid{cfg.grid.T, ns.back()};
        const double T = std::get<QuadraticRamp>(cfg.load).T;
        std::vector<double> exact(grid.N + 1);
        for (std::size_t k = 0; k <= grid.N; ++k) {
          exact[k] = psi_quadratic_exact(std::min(grid.t(k), T), T, cfg.material.E_pseudo, cfg.material.beta_E);
        }
        series[0] = std::move(exact);
      } else {
        series[0] = observe(cfg.grid.N, failures[0]);
      }
    } else {
      series[i] = observe(ns[i - 1], failures[i]);
    }
  });
  if (failures[0]) {
    throw MaterialFailure("reference run failed at step " + std::to_string(*failures[0]), 0.0);
  }

  std::vector<ConvergeRow> rows;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    ConvergeRow row;
    row.N = ns[i];
    row.dt = cfg.grid.T / static_cast<double>(ns[i]);
    row.failed_at_step = failures[i + 1];
    if (!row.failed_at_step) row.err = relative_error(series[0], series[i + 1]);
    if (i > 0 && std::isfinite(row.err) && std::isfinite(rows.back().err) && row.err > 0.0 && rows.back().err > 0.0) {
      row.order = std::log(rows.back().err / row.err) / std::log(static_cast<double>(ns[i]) / static_cast<double>(ns[i - 1]));
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_converge_table(std::ostream& out, const std::vector<ConvergeRow>& rows) {
  out << "N,dt,err,order,status\n";
  for (const auto& r : rows) {
    out << r.N << ',' << format_g17(r.dt) << ',' << detail::cell(r.err) << ',' << detail::cell(r.order) << ','
        << (r.failed_at_step ? "failed_at_step_" + std::to_string(*r.failed_at_step) : std::string("completed"))
        << '\n';
  }
}

inline int cmd_converge(const RunConfig& cfg, int levels, const std::vector<std::size_t>& sizes,
                        const std::optional<std::string>& out_path, std::ostream& log) {
  const auto rows = converge(cfg, study_sizes(cfg, levels, sizes));
  write_converge_table(log, rows);
  if (out_path) {
    auto out = detail::open_output(*out_path);
    write_converge_table(out, rows);
  }
  return kExitOk;
}

inline void write_bench_table(std::ostream& out, const std::vector<BenchResult>& results) {
  out << "N,mode,median_s,slope\n";
  for (const auto& res : results) {
    for (const auto& row : res.rows) {
      out << row.N << ',' << to_string(res.mode) << ',' << format_g17(row.median_seconds) << ','
          << (res.slope ? format_g17(*res.slope) : std::string()) << '\n';
    }
  }
}

inline int cmd_bench(const std::vector<std::size_t>& sizes, const std::vector<EnergyMode>& modes, int trials,
                     const std::optional<std::string>& out_path, std::ostream& log) {
  if (sizes.empty()) throw ParameterError("--sizes must list at least one N");
  if (modes.empty()) throw ParameterError("--mode must name at least one of direct, fft");
  std::vector<BenchResult> results;
  for (EnergyMode m : modes) {
    results.push_back(benchmark_complexity(sizes, m, trials));
  }
  write_bench_table(log, results);
  if (out_path) {
    auto out = detail::open_output(*out_path);
    write_bench_table(out, results);
  }
  return kExitOk;
}

inline int cmd_energy(const RunConfig& cfg, std::ostream& log) {
  const EnergyMode path = resolve_mode(cfg.energy_mode, cfg.grid.N);
  const std::vector<double> eps = sample(cfg.load, cfg.grid);
  const std::vector<double> psi =
      free_energy_trajectory(cfg.load, cfg.grid, cfg.material.beta_E, cfg.material.E_pseudo, path);
  std::optional<std::vector<double>> exact;
  if (const auto* q = std::get_if<QuadraticRamp>(&cfg.load)) {
    exact.emplace(cfg.grid.N + 1);
    for (std::size_t k = 0; k <= cfg.grid.N; ++k) {
      // Beyond the ramp's own T the closed form does not apply.
      const double t = cfg.grid.t(k);
      (*exact)[k] = t <= q->T ? psi_quadratic_exact(t, q->T, cfg.material.E_pseudo, cfg.material.beta_E)
                              : std::numeric_limits<double>::quiet_NaN();
    }
  }
  auto out = detail::open_output(cfg.output_path);
  std::optional<std::span<const double>> exact_view;
  if (exact) exact_view = std::span<const double>(*exact);
  write_energy_csv(out, path, cfg.grid, eps, psi, exact_view);
  log << "wrote " << cfg.output_path << " (" << cfg.grid.N << " steps, " << to_string(path) << ")\n";
  return kExitOk;
}

/// Parses argv and dispatches. Never throws.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fractional visco-elasto-plastic damage model: simulation, convergence and timing"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_path;
  std::vector<std::string> mode_names;
  int levels = 0;
  std::vector<std::size_t> sizes;
  int trials = 3;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config_path, "run configuration file");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_path, "output path (overrides [run] output_path)");
  };

  auto* simulate_cmd = app.add_subcommand("simulate", "run the return-mapping model and write the state history CSV");
  add_common(simulate_cmd, true);
  simulate_cmd->add_option("--mode", mode_names, "energy evaluation: direct|fft|auto")->expected(1);

  auto* converge_cmd = app.add_subcommand("converge", "error and convergence order against a reference solution");
  add_common(converge_cmd, true);
  converge_cmd->add_option("--mode", mode_names, "energy evaluation: direct|fft|auto")->expected(1);
  converge_cmd->add_option("--levels", levels, "number of grids, coarsest = [run] coarse_n");
  converge_cmd->add_option("--sizes", sizes, "explicit grid sizes (ascending)")->delimiter(',');

  auto* bench_cmd = app.add_subcommand("bench", "time full free-energy trajectories");
  bench_cmd->add_option("--sizes", sizes, "list of N, e.g. 256,512,1024")->delimiter(',')->required();
  bench_cmd->add_option("--mode", mode_names, "direct, fft, or both (repeat or comma-separate)")->delimiter(',');
  bench_cmd->add_option("--trials", trials, "timed trials per N (median reported)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", out_path, "also write the timing table to this CSV file");

  auto* energy_cmd = app.add_subcommand("energy", "free-energy trajectory of a Scott-Blair element");
  add_common(energy_cmd, true);
  energy_cmd->add_option("--mode", mode_names, "energy evaluation: direct|fft|auto")->expected(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (bench_cmd->parsed()) {
      std::vector<EnergyMode> modes;
      if (mode_names.empty()) mode_names = {"direct", "fft"};
      for (const auto& m : mode_names) {
        const EnergyMode mode = parse_energy_mode(m);
        if (mode == EnergyMode::automatic) throw ParameterError("bench --mode must be direct or fft");
        modes.push_back(mode);
      }
      return cmd_bench(sizes, modes, trials, out_path, out);
    }

    RunConfig cfg = load_config(config_path);
    if (!mode_names.empty()) cfg.energy_mode = parse_energy_mode(mode_names.front());
    if (simulate_cmd->parsed()) {
      if (out_path) cfg.output_path = *out_path;
      return cmd_simulate(cfg, out);
    }
    if (energy_cmd->parsed()) {
      if (out_path) cfg.output_path = *out_path;
      return cmd_energy(cfg, out);
    }
    return cmd_converge(cfg, levels, sizes, out_path, out);
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const MaterialFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace fracdmg::cli
