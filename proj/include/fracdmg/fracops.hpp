#pragma once

// L1 finite-difference kernels for Caputo derivatives on uniform grids.
//
// A series u_0..u_{n+1} sampled at t_k = k*dt has the L1 approximation
//
//   D^beta u(t_{n+1}) ~ [u_{n+1} - u_n + H(u)] / (dt^beta * Gamma(2 - beta))
//
// with d_j = (j+1)^(1-beta) - j^(1-beta) and the history term
// H(u) = sum_{j=1..n} d_j (u_{n+1-j} - u_{n-j}).

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fracdmg/errors.hpp"

namespace fracdmg {

/// Fractional order beta. Construction accepts the closed interval [0, 1] so
/// weight generators can be exercised at the Hookean/Newtonian endpoints;
/// simulation-facing code calls require_open().
class FractionalOrder {
public:
  constexpr FractionalOrder() = default;

  explicit FractionalOrder(double beta) : beta_(beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
      throw ParameterError("fractional order must lie in [0, 1], got " + std::to_string(beta));
    }
  }

  constexpr double value() const noexcept { return beta_; }

  const FractionalOrder& require_open(const char* name = "beta") const {
    if (!(beta_ > 0.0 && beta_ < 1.0)) {
      throw ParameterError(std::string(name) + " must lie in (0, 1), got " + std::to_string(beta_));
    }
    return *this;
  }

  friend constexpr bool operator==(FractionalOrder, FractionalOrder) = default;

private:
  double beta_ = 0.5;
};

/// Uniform grid t_n = n*dt on [0, T] with dt = T/N.
struct TimeGrid {
  double T = 1.0;
  std::size_t N = 1;

  double dt() const noexcept { return T / static_cast<double>(N); }
  double t(std::size_t n) const noexcept { return static_cast<double>(n) * dt(); }

  void validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("grid.T_s must be a positive finite time");
    if (N < 1) throw ParameterError("grid.N must be >= 1");
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

struct L1Weights {
  FractionalOrder beta;
  std::vector<double> d;  // d_0..d_n
};

/// d_0..d_n of the L1 scheme.
inline L1Weights l1_weights(FractionalOrder beta, std::size_t n) {
  const double p = 1.0 - beta.value();
  L1Weights w{beta, std::vector<double>(n + 1)};
  // d_0 = 1 for every beta, including beta = 1 where 0^0 would be ambiguous.
  w.d[0] = 1.0;
  // j^p ((1 + 1/j)^p - 1) avoids the cancellation of the plain difference.
  for (std::size_t j = 1; j <= n; ++j) {
    const double jd = static_cast<double>(j);
    w.d[j] = p == 1.0 ? 1.0 : std::pow(jd, p) * std::expm1(p * std::log1p(1.0 / jd));
  }
  return w;
}

namespace detail {

// sum_{j=1..n} d_j (u_{n+1-j} - u_{n-j}) for u = u_0..u_n, oldest term first.
inline double lagged_sum(std::span<const double> u, std::span<const double> d) {
  if (u.size() < 2) return 0.0;
  const std::size_t n = u.size() - 1;
  if (d.size() < n + 1) throw ParameterError("L1 weight table shorter than the series history");
  double acc = 0.0;
  for (std::size_t j = n; j >= 1; --j) {
    acc += d[j] * (u[n + 1 - j] - u[n - j]);
  }
  return acc;
}

}  // namespace detail

/// History term H(u) for u_0..u_{n+1}; zero when n = 0.
inline double history_term(std::span<const double> u, const L1Weights& weights) {
  if (u.size() < 2) throw ParameterError("history_term needs at least two samples");
  return detail::lagged_sum(u.first(u.size() - 1), weights.d);
}

/// 1 / (dt^beta * Gamma(2 - beta)).
inline double l1_scale(FractionalOrder beta, double dt) {
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  return 1.0 / (std::pow(dt, beta.value()) * std::tgamma(2.0 - beta.value()));
}

/// Precomputed L1 weights and prefactor for one (beta, dt) pair, valid for
/// series of up to capacity+2 samples. Immutable once built.
class CaputoL1 {
public:
  CaputoL1(FractionalOrder beta, double dt, std::size_t capacity)
      : weights_(l1_weights(beta, capacity)), scale_(l1_scale(beta, dt)) {}

  FractionalOrder beta() const noexcept { return weights_.beta; }
  double scale() const noexcept { return scale_; }
  const L1Weights& weights() const noexcept { return weights_; }

  /// L1 Caputo derivative at the newest sample of u_0..u_{n+1}.
  double derivative(std::span<const double> u) const {
    if (u.size() < 2) throw ParameterError("caputo_l1 needs at least two samples");
    const std::size_t n = u.size() - 2;
    return (u[n + 1] - u[n] + detail::lagged_sum(u.first(n + 1), weights_.d)) * scale_;
  }

  /// Derivative at t_{n+1} of the series u_0..u_n extended by u_{n+1} = next.
  double derivative_with_next(std::span<const double> u, double next) const {
    if (u.empty()) throw ParameterError("series must be nonempty");
    return (next - u.back() + detail::lagged_sum(u, weights_.d)) * scale_;
  }

  /// Trial-state derivative: the frozen series u_0..u_n with u_{n+1} = u_n.
  double trial(std::span<const double> u) const {
    if (u.empty()) throw ParameterError("series must be nonempty");
    return detail::lagged_sum(u, weights_.d) * scale_;
  }

private:
  L1Weights weights_;
  double scale_;
};

inline double caputo_l1(std::span<const double> u, FractionalOrder beta, double dt) {
  if (u.size() < 2) throw ParameterError("caputo_l1 needs at least two samples");
  return CaputoL1(beta, dt, u.size() - 2).derivative(u);
}

inline double caputo_trial(std::span<const double> u, FractionalOrder beta, double dt) {
  if (u.empty()) throw ParameterError("caputo_trial needs at least one sample");
  return CaputoL1(beta, dt, u.size() - 1).trial(u);
}

/// Exact Caputo derivative of t^p: Gamma(p+1)/Gamma(p+1-beta) * t^(p-beta).
inline double caputo_analytic_power(double t, double p, FractionalOrder beta) {
  if (!(p > 0.0)) throw ParameterError("power p must be positive");
  if (t < 0.0) throw ParameterError("t must be nonnegative");
  if (t == 0.0) return 0.0;
  return std::tgamma(p + 1.0) / std::tgamma(p + 1.0 - beta.value()) * std::pow(t, p - beta.value());
}

}  // namespace fracdmg
