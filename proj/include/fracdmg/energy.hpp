#pragma once

// Discrete fractional Helmholtz free-energy density of a Scott-Blair element
// and the damage energy release rate derived from it.
//
// For strain increments x_i = eps_{n+1-i} - eps_{n-i}, i = 0..n (newest
// first), the free energy at t_{n+1} is the Hankel quadratic form
//
//   psi = E / (2 dt^beta Gamma(3 - beta)) * sum_{i,j} b_{i+j} x_i x_j,
//   b_k = k^(2-beta) - 2 (k+1)^(2-beta) + (k+2)^(2-beta).
//
// The FFT path writes B = T J (T Toeplitz, J the reversal), embeds T in a
// circulant of power-of-two length L >= 2(n+1) and evaluates T (J x) with
// three real transforms.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fracdmg/errors.hpp"
#include "fracdmg/fft.hpp"
#include "fracdmg/fracops.hpp"

namespace fracdmg {

enum class EnergyMode { direct, fft, automatic };

/// Path used by `automatic` for a run of N steps.
inline EnergyMode resolve_mode(EnergyMode mode, std::size_t N) {
  if (mode != EnergyMode::automatic) return mode;
  return N > 256 ? EnergyMode::fft : EnergyMode::direct;
}

struct HankelWeights {
  FractionalOrder beta;
  std::vector<double> b;  // b_0..b_{2n}
};

namespace detail {

// Second difference f(k) - 2 f(k+1) + f(k+2) of f(x) = x^p. Far from the
// origin the three terms nearly cancel, so expand about k+1:
//   2 * sum_{m>=1} C(p, 2m) (k+1)^(p-2m).
inline double second_difference_power(std::size_t k, double p) {
  const double kd = static_cast<double>(k);
  if (k < 8) {
    return std::pow(kd, p) - 2.0 * std::pow(kd + 1.0, p) + std::pow(kd + 2.0, p);
  }
  const double center = kd + 1.0;
  const double h2 = 1.0 / (center * center);
  double binom = p * (p - 1.0) / 2.0;  // C(p, 2)
  double power = std::pow(center, p - 2.0);
  double sum = 0.0;
  for (int j = 2; j < 200; j += 2) {
    const double term = binom * power;
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    binom *= (p - j) * (p - j - 1.0) / ((j + 1.0) * (j + 2.0));
    if (binom == 0.0) break;
    power *= h2;
  }
  return 2.0 * sum;
}

}  // namespace detail

/// The 2n+1 distinct entries of the (n+1)x(n+1) Hankel weight matrix.
inline HankelWeights hankel_weights(FractionalOrder beta, std::size_t n) {
  const double p = 2.0 - beta.value();
  HankelWeights w{beta, std::vector<double>(2 * n + 1)};
  for (std::size_t k = 0; k < w.b.size(); ++k) w.b[k] = detail::second_difference_power(k, p);
  return w;
}

/// Increments of eps_0..eps_{n+1}, newest first.
inline std::vector<double> increments_newest_first(std::span<const double> series) {
  if (series.size() < 2) throw ParameterError("need at least two samples to form increments");
  std::vector<double> x(series.size() - 1);
  const std::size_t last = series.size() - 1;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = series[last - i] - series[last - i - 1];
  return x;
}

/// Free-energy evaluator for one (beta, E, dt) triple and increment vectors
/// of up to capacity+1 entries. The weight table is shared between copies;
/// the FFT workspace is per instance, so use one instance per thread.
class FreeEnergy {
public:
  FreeEnergy(FractionalOrder beta, double E_pseudo, double dt, std::size_t capacity)
      : weights_(std::make_shared<const HankelWeights>(hankel_weights(beta, capacity))) {
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    if (!(E_pseudo > 0.0)) throw ParameterError("E_pseudo must be positive");
    prefactor_ = E_pseudo / (2.0 * std::pow(dt, beta.value()) * std::tgamma(3.0 - beta.value()));
  }

  FreeEnergy(const FreeEnergy& other) : weights_(other.weights_), prefactor_(other.prefactor_) {}
  FreeEnergy& operator=(const FreeEnergy& other) {
    weights_ = other.weights_;
    prefactor_ = other.prefactor_;
    workspace_.reset();
    return *this;
  }
  FreeEnergy(FreeEnergy&&) noexcept = default;
  FreeEnergy& operator=(FreeEnergy&&) noexcept = default;

  const HankelWeights& weights() const noexcept { return *weights_; }
  double prefactor() const noexcept { return prefactor_; }
  std::size_t capacity() const noexcept { return (weights_->b.size() - 1) / 2; }

  /// O(n^2) Hankel quadratic form.
  double direct(std::span<const double> x) const {
    check_length(x.size());
    const double* b = weights_->b.data();
    const std::size_t m = x.size();
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = b + i;
      // Four partial sums so the compiler can pipeline the reduction.
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t j = 0;
      for (; j + 4 <= m; j += 4) {
        s0 += row[j] * x[j];
        s1 += row[j + 1] * x[j + 1];
        s2 += row[j + 2] * x[j + 2];
        s3 += row[j + 3] * x[j + 3];
      }
      for (; j < m; ++j) s0 += row[j] * x[j];
      total += x[i] * ((s0 + s1) + (s2 + s3));
    }
    return std::max(0.0, prefactor_ * total);
  }

  /// O(n log n) evaluation through the circulant embedding.
  double fft(std::span<const double> x) {
    check_length(x.size());
    const std::size_t m = x.size();
    const auto& b = weights_->b;
    if (m == 1) return std::max(0.0, prefactor_ * b[0] * x[0] * x[0]);

    const std::size_t n = m - 1;
    Workspace& ws = workspace(std::bit_ceil(2 * m));
    const std::size_t L = ws.transform.length();
    double* c = ws.c.get();
    double* xf = ws.xf.get();

    // First circulant column: [b_n .. b_2n, 0 .., b_0 .. b_{n-1}].
    std::fill(c, c + L, 0.0);
    std::copy(b.begin() + static_cast<std::ptrdiff_t>(n), b.begin() + static_cast<std::ptrdiff_t>(2 * n + 1), c);
    std::copy(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n), c + (L - n));
    // Reflected, zero-padded increments (oldest first).
    std::fill(xf, xf + L, 0.0);
    for (std::size_t i = 0; i <= n; ++i) xf[i] = x[n - i];

    ws.transform.forward(c, ws.c_hat.get());
    ws.transform.forward(xf, ws.x_hat.get());
    fftw_complex* ch = ws.c_hat.get();
    const fftw_complex* xh = ws.x_hat.get();
    for (std::size_t k = 0; k < ws.transform.bins(); ++k) {
      const double re = ch[k][0] * xh[k][0] - ch[k][1] * xh[k][1];
      const double im = ch[k][0] * xh[k][1] + ch[k][1] * xh[k][0];
      ch[k][0] = re;
      ch[k][1] = im;
    }
    double* y = ws.y.get();
    ws.transform.inverse(ch, y);

    double total = 0.0;
    for (std::size_t i = 0; i <= n; ++i) total += x[i] * y[i];
    return std::max(0.0, prefactor_ * total / static_cast<double>(L));
  }

  double evaluate(std::span<const double> x, EnergyMode mode) {
    return resolve_mode(mode, x.size()) == EnergyMode::fft ? fft(x) : direct(x);
  }

private:
  struct Workspace {
    explicit Workspace(std::size_t L)
        : transform(L),
          c(transform.make_real()),
          xf(transform.make_real()),
          y(transform.make_real()),
          c_hat(transform.make_complex()),
          x_hat(transform.make_complex()) {}

    RealFft transform;
    RealFft::RealBuffer c, xf, y;
    RealFft::ComplexBuffer c_hat, x_hat;
  };

  void check_length(std::size_t m) const {
    if (m == 0) throw ParameterError("increment vector must be nonempty");
    if (m > capacity() + 1) {
      throw ParameterError("increment vector of length " + std::to_string(m) + " exceeds evaluator capacity " +
                           std::to_string(capacity() + 1));
    }
  }

  Workspace& workspace(std::size_t L) {
    if (!workspace_ || workspace_->transform.length() != L) workspace_ = std::make_unique<Workspace>(L);
    return *workspace_;
  }

  std::shared_ptr<const HankelWeights> weights_;
  double prefactor_ = 0.0;
  std::unique_ptr<Workspace> workspace_;
};

inline double free_energy_direct(std::span<const double> delta_eps, FractionalOrder beta, double E_pseudo, double dt) {
  if (delta_eps.empty()) throw ParameterError("increment vector must be nonempty");
  return FreeEnergy(beta, E_pseudo, dt, delta_eps.size() - 1).direct(delta_eps);
}

inline double free_energy_fft(std::span<const double> delta_eps, FractionalOrder beta, double E_pseudo, double dt) {
  if (delta_eps.empty()) throw ParameterError("increment vector must be nonempty");
  return FreeEnergy(beta, E_pseudo, dt, delta_eps.size() - 1).fft(delta_eps);
}

/// Y^ve = -psi evaluated on visco-elastic strain increments (newest first).
inline double damage_energy_release(std::span<const double> delta_eps_ve, FractionalOrder beta_E, double E_pseudo,
                                    double dt, EnergyMode mode) {
  if (delta_eps_ve.empty()) throw ParameterError("increment vector must be nonempty");
  FreeEnergy energy(beta_E, E_pseudo, dt, delta_eps_ve.size() - 1);
  return -energy.evaluate(delta_eps_ve, mode);
}

/// Closed-form free energy of an SB element under eps(t) = (t/T)^2.
/// Test oracle only.
inline double psi_quadratic_exact(double t, double T, double E_pseudo, FractionalOrder beta) {
  if (!(T > 0.0)) throw ParameterError("T must be positive");
  if (t < 0.0 || t > T) throw ParameterError("t must lie in [0, T]");
  const double b = beta.value();
  const double eps = (t / T) * (t / T);
  const double coeff = std::pow(2.0, 2.0 - b) * (8.0 + std::pow(2.0, b) * (b - 5.0)) / std::tgamma(5.0 - b);
  return coeff * E_pseudo * std::pow(eps, 2.0 - 0.5 * b) * std::pow(T, -b);
}

}  // namespace fracdmg
