#pragma once

// Strain programs, full-trajectory runs, error metrics and timing harnesses.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "fracdmg/energy.hpp"
#include "fracdmg/errors.hpp"
#include "fracdmg/fracops.hpp"
#include "fracdmg/plasticity.hpp"

namespace fracdmg {

/// eps(t) = rate * t
struct LinearRamp {
  double rate = 0.0;
  friend bool operator==(const LinearRamp&, const LinearRamp&) = default;
};

/// eps(t) = (t / T)^2
struct QuadraticRamp {
  double T = 1.0;
  friend bool operator==(const QuadraticRamp&, const QuadraticRamp&) = default;
};

/// eps(t) = amplitude * sin(omega * t)
struct Sinusoid {
  double amplitude = 0.0;
  double omega = 0.0;
  friend bool operator==(const Sinusoid&, const Sinusoid&) = default;
};

/// eps(t) = (2 amplitude / pi) * asin(sin(2 pi omega t)); constant-rate
/// loading/unloading with |eps'| = 4 amplitude omega.
struct TriangleWave {
  double amplitude = 0.0;
  double omega = 0.0;
  friend bool operator==(const TriangleWave&, const TriangleWave&) = default;
};

using LoadProgram = std::variant<LinearRamp, QuadraticRamp, Sinusoid, TriangleWave>;

inline double strain_at(const LoadProgram& program, double t) {
  using std::numbers::pi;
  return std::visit(
      [t](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearRamp>) {
          return p.rate * t;
        } else if constexpr (std::is_same_v<P, QuadraticRamp>) {
          return (t / p.T) * (t / p.T);
        } else if constexpr (std::is_same_v<P, Sinusoid>) {
          return p.amplitude * std::sin(p.omega * t);
        } else {
          return 2.0 * p.amplitude / pi * std::asin(std::sin(2.0 * pi * p.omega * t));
        }
      },
      program);
}

inline void validate(const LoadProgram& program) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearRamp>) {
          if (!std::isfinite(p.rate)) throw ParameterError("load.rate_per_s must be finite");
        } else if constexpr (std::is_same_v<P, QuadraticRamp>) {
          if (!(p.T > 0.0) || !std::isfinite(p.T)) throw ParameterError("load.T_s must be > 0");
        } else {
          if (!std::isfinite(p.amplitude)) throw ParameterError("load.amplitude must be finite");
          if (!std::isfinite(p.omega)) throw ParameterError("load.omega must be finite");
        }
      },
      program);
}

/// Total strain sampled on the grid, eps_0..eps_N.
inline std::vector<double> sample(const LoadProgram& program, const TimeGrid& grid) {
  std::vector<double> eps(grid.N + 1);
  for (std::size_t n = 0; n <= grid.N; ++n) eps[n] = strain_at(program, grid.t(n));
  return eps;
}

struct RunStatus {
  std::optional<std::size_t> failed_at_step;  // empty on completion

  bool completed() const noexcept { return !failed_at_step.has_value(); }
};

struct RunReport {
  StateHistory history;
  double wall_time = 0.0;  // seconds
  RunStatus status;
};

/// Drives the return mapping over the grid with eps_{n+1} = strain_at(t_{n+1}).
/// On material failure the history stops at the last admissible row.
inline RunReport simulate(const MaterialParams& params, const TimeGrid& grid, const LoadProgram& program,
                          EnergyMode mode = EnergyMode::automatic) {
  params.validate();
  grid.validate();
  validate(program);
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.history.reserve(grid.N + 1);
  ReturnMapper mapper(params, grid.dt(), grid.N, resolve_mode(mode, grid.N));
  for (std::size_t n = 0; n < grid.N; ++n) {
    try {
      mapper.step(report.history, strain_at(program, grid.t(n + 1)));
    } catch (const MaterialFailure&) {
      report.status.failed_at_step = n + 1;
      break;
    }
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

/// psi_0..psi_N of an SB element driven by `program` (psi_0 = 0).
inline std::vector<double> free_energy_trajectory(const LoadProgram& program, const TimeGrid& grid,
                                                  FractionalOrder beta, double E_pseudo, EnergyMode mode) {
  grid.validate();
  validate(program);
  const std::vector<double> eps = sample(program, grid);
  FreeEnergy energy(beta, E_pseudo, grid.dt(), grid.N);
  const EnergyMode path = resolve_mode(mode, grid.N);
  std::vector<double> psi(grid.N + 1, 0.0);
  // Filled from the back so that the live tail is always newest first.
  std::vector<double> increments(grid.N);
  for (std::size_t n = 0; n < grid.N; ++n) {
    const std::size_t head = grid.N - 1 - n;
    increments[head] = eps[n + 1] - eps[n];
    const std::span<const double> x(increments.data() + head, n + 1);
    psi[n + 1] = path == EnergyMode::fft ? energy.fft(x) : energy.direct(x);
  }
  return psi;
}

/// Max-norm error relative to the max-norm of `reference`, taken at the
/// time points shared by a reference grid and its integer coarsening.
inline double relative_error(std::span<const double> reference, std::span<const double> approx) {
  if (reference.size() < 2 || approx.size() < 2) throw ParameterError("series need at least two samples");
  const std::size_t ref_steps = reference.size() - 1;
  const std::size_t app_steps = approx.size() - 1;
  if (app_steps > ref_steps || ref_steps % app_steps != 0) {
    throw ParameterError("approximation grid is not a coarsening of the reference grid");
  }
  const std::size_t stride = ref_steps / app_steps;
  double diff = 0.0;
  for (std::size_t k = 0; k <= app_steps; ++k) diff = std::max(diff, std::abs(reference[k * stride] - approx[k]));
  double norm = 0.0;
  for (double v : reference) norm = std::max(norm, std::abs(v));
  if (norm == 0.0) {
    if (diff == 0.0) return 0.0;
    throw ParameterError("relative error undefined for an identically zero reference");
  }
  return diff / norm;
}

/// log2(err_coarse / err_fine) for a step-size halving.
inline double convergence_order(double err_coarse, double err_fine) {
  if (!(err_coarse > 0.0) || !(err_fine > 0.0)) {
    throw ParameterError("convergence order needs positive errors (exact match or invalid input)");
  }
  return std::log2(err_coarse / err_fine);
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("slope fit needs two or more paired samples");
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ParameterError("slope fit needs positive samples");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) throw ParameterError("slope fit needs distinct abscissae");
  return (m * sxy - sx * sy) / denom;
}

struct BenchRow {
  std::size_t N = 0;
  double median_seconds = 0.0;
};

struct BenchResult {
  EnergyMode mode = EnergyMode::direct;
  std::vector<BenchRow> rows;
  std::optional<double> slope;  // absent for a single size
};

/// Median wall time of a full free-energy trajectory (eps = t^2 on [0, 1],
/// beta = 0.5, E = 100) per N, after one discarded warm-up run.
inline BenchResult benchmark_complexity(std::span<const std::size_t> sizes, EnergyMode mode, int trials = 3) {
  if (sizes.empty()) throw ParameterError("benchmark needs at least one size");
  if (trials < 1) throw ParameterError("benchmark needs at least one trial");
  if (!std::is_sorted(sizes.begin(), sizes.end())) throw ParameterError("benchmark sizes must be ascending");
  if (mode == EnergyMode::automatic) throw ParameterError("benchmark mode must be direct or fft");

  BenchResult result{mode, {}, std::nullopt};
  const LoadProgram load = QuadraticRamp{1.0};
  const FractionalOrder beta(0.5);
  volatile double sink = 0.0;
  for (std::size_t N : sizes) {
    if (N < 1) throw ParameterError("benchmark sizes must be >= 1");
    const TimeGrid grid{1.0, N};
    sink = sink + free_energy_trajectory(load, grid, beta, 100.0, mode).back();
    std::vector<double> times;
    for (int k = 0; k < trials; ++k) {
      const auto start = std::chrono::steady_clock::now();
      sink = sink + free_energy_trajectory(load, grid, beta, 100.0, mode).back();
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    std::sort(times.begin(), times.end());
    const std::size_t mid = times.size() / 2;
    const double median = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
    result.rows.push_back({N, median});
  }
  if (result.rows.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& r : result.rows) {
      xs.push_back(static_cast<double>(r.N));
      ys.push_back(r.median_seconds);
    }
    result.slope = loglog_slope(xs, ys);
  }
  return result;
}

/// Worker count for independent sweep runs: FRACDMG_WORKERS if set to a
/// positive integer, else the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("FRACDMG_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, count) on up to `workers` threads. The first
/// exception thrown by any task is rethrown after all workers join.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, unsigned workers = worker_count()) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::jthread> pool;
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace fracdmg
