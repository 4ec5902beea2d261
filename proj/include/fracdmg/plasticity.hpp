#pragma once

// Damaged fractional visco-elasto-plastic constitutive update (1-D).
//
// Stress:   tau   = (1 - D) E  D^{beta_E}(eps - eps_vp)
// Yield:    f     = |tau| - (1 - D) [tau_Y + K D^{beta_K}(alpha) + H alpha]
// Flow:     eps_vp' = sign(tau) gamma',  alpha' = gamma'
// Damage:   D'    = gamma' / (1 - D) * (-Y_ve / S)^s,  Y_ve = -psi(eps_ve)
//
// Time integration is backward Euler with D held at its previous value in
// the stress and yield function. All fractional derivatives use the L1
// scheme, so a Caputo derivative of the slip increment (zero up to t_n)
// reduces to its newest-weight term: D^beta(dgamma) = dgamma * scale_beta.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fracdmg/energy.hpp"
#include "fracdmg/errors.hpp"
#include "fracdmg/fracops.hpp"

namespace fracdmg {

/// D at or above 1 - kFailureMargin is treated as material failure.
inline constexpr double kFailureMargin = 1e-8;

struct MaterialParams {
  double E_pseudo = 1.0;  // Pa s^beta_E
  FractionalOrder beta_E{0.5};
  double K_pseudo = 1.0;  // Pa s^beta_K
  FractionalOrder beta_K{0.5};
  double H = 0.0;      // Pa
  double tau_Y = 1.0;  // Pa
  double S = 1.0;      // Pa
  double s_exp = 1.0;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string("material.") + name + " must be > 0");
    };
    positive(E_pseudo, "E_pseudo_pa_s_betaE");
    positive(K_pseudo, "K_pseudo_pa_s_betaK");
    positive(tau_Y, "tau_Y_pa");
    positive(S, "S_pa");
    positive(s_exp, "s_exp");
    if (!(H >= 0.0) || !std::isfinite(H)) throw ParameterError("material.H_pa must be >= 0");
    beta_E.require_open("material.beta_E");
    beta_K.require_open("material.beta_K");
  }

  friend bool operator==(const MaterialParams&, const MaterialParams&) = default;
};

struct StateRow {
  double eps_total = 0.0;
  double eps_vp = 0.0;
  double eps_ve = 0.0;
  double alpha = 0.0;
  double gamma_increment = 0.0;
  double D = 0.0;
  double tau = 0.0;
  double Y_ve = 0.0;
  double f_trial = 0.0;
};

/// Per-step state series, starting from the homogeneous row at t_0.
class StateHistory {
public:
  StateHistory() { append(StateRow{}); }

  std::size_t size() const noexcept { return eps_total_.size(); }
  std::size_t steps() const noexcept { return size() - 1; }

  void reserve(std::size_t rows) {
    for (auto* v : columns()) v->reserve(rows);
  }

  void append(const StateRow& r) {
    eps_total_.push_back(r.eps_total);
    eps_vp_.push_back(r.eps_vp);
    eps_ve_.push_back(r.eps_ve);
    alpha_.push_back(r.alpha);
    gamma_increments_.push_back(r.gamma_increment);
    D_.push_back(r.D);
    tau_.push_back(r.tau);
    Y_ve_.push_back(r.Y_ve);
    f_trial_.push_back(r.f_trial);
  }

  StateRow row(std::size_t k) const {
    return {eps_total_.at(k), eps_vp_.at(k), eps_ve_.at(k), alpha_.at(k), gamma_increments_.at(k),
            D_.at(k),         tau_.at(k),    Y_ve_.at(k),   f_trial_.at(k)};
  }
  StateRow back() const { return row(size() - 1); }

  std::span<const double> eps_total() const noexcept { return eps_total_; }
  std::span<const double> eps_vp() const noexcept { return eps_vp_; }
  std::span<const double> eps_ve() const noexcept { return eps_ve_; }
  std::span<const double> alpha() const noexcept { return alpha_; }
  std::span<const double> gamma_increments() const noexcept { return gamma_increments_; }
  std::span<const double> D() const noexcept { return D_; }
  std::span<const double> tau() const noexcept { return tau_; }
  std::span<const double> Y_ve() const noexcept { return Y_ve_; }
  std::span<const double> f_trial() const noexcept { return f_trial_; }

  friend bool operator==(const StateHistory&, const StateHistory&) = default;

private:
  std::vector<std::vector<double>*> columns() {
    return {&eps_total_, &eps_vp_, &eps_ve_, &alpha_, &gamma_increments_, &D_, &tau_, &Y_ve_, &f_trial_};
  }

  std::vector<double> eps_total_, eps_vp_, eps_ve_, alpha_, gamma_increments_, D_, tau_, Y_ve_, f_trial_;
};

struct TrialState {
  double tau_trial = 0.0;
  double f_trial = 0.0;
};

struct DamageSolution {
  double D = 0.0;
  int iterations = 0;  // residual evaluations
};

struct DamageOptions {
  double tol = 1e-12;
  int max_iter = 100;
};

/// Newton solve of P(D) = D - D_n - dgamma / (1 - D) * (-Y_ve / S)^s = 0,
/// started from D_n. P is concave and increasing up to its root, so the
/// iterates approach the smaller root monotonically from below.
inline DamageSolution damage_newton(double D_n, double delta_gamma, double Y_ve_next, double S, double s_exp,
                                    double tol = 1e-12, int max_iter = 100) {
  if (!(D_n >= 0.0 && D_n < 1.0)) throw ParameterError("D_n must lie in [0, 1)");
  if (!(delta_gamma >= 0.0)) throw ParameterError("delta_gamma must be >= 0");
  if (!(Y_ve_next <= 0.0)) throw ParameterError("Y_ve must be <= 0");
  if (!(S > 0.0) || !(s_exp > 0.0)) throw ParameterError("S and s must be positive");

  const double drive = delta_gamma * std::pow(-Y_ve_next / S, s_exp);
  double D = D_n;
  for (int k = 1; k <= max_iter; ++k) {
    const double one_minus = 1.0 - D;
    const double P = D - D_n - drive / one_minus;
    const double dP = 1.0 - drive / (one_minus * one_minus);
    // Past the maximum of a concave residual that is still negative: no root.
    if (!(dP > 0.0)) throw MaterialFailure("damage equation has no admissible root", D);
    const double delta = P / dP;
    D -= delta;
    if (D >= 1.0 - kFailureMargin) throw MaterialFailure("damage reached the failure cutoff", D);
    // Near a double root dP is small, so a tiny residual alone does not pin D down.
    if (std::abs(P) <= tol && std::abs(delta) <= tol) return {D, k};
  }
  throw NumericalError("damage Newton iteration did not converge", D);
}

/// Smaller root of (D - D_n)(1 - D) = drive in cancellation-free form.
/// Throws MaterialFailure when the discriminant is negative.
inline double damage_quadratic_root(double D_n, double drive) {
  const double disc = (1.0 - D_n) * (1.0 - D_n) - 4.0 * drive;
  if (disc < 0.0) throw MaterialFailure("damage equation has no admissible root", D_n);
  return D_n + 2.0 * drive / ((1.0 - D_n) + std::sqrt(disc));
}

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Algorithm state for one material and step size: L1 kernels for both
/// fractional orders and the free-energy evaluator for Y_ve.
class ReturnMapper {
public:
  struct StepInfo {
    bool plastic = false;
    double delta_gamma = 0.0;
    int newton_iterations = 0;
    bool quadratic_fallback = false;
  };

  ReturnMapper(const MaterialParams& params, double dt, std::size_t capacity,
               EnergyMode mode = EnergyMode::automatic, DamageOptions damage = {})
      : params_(checked(params)),
        dt_(dt),
        mode_(resolve_mode(mode, capacity)),
        damage_(damage),
        elastic_(params.beta_E, dt, capacity),
        hardening_(params.beta_K, dt, capacity),
        energy_(params.beta_E, params.E_pseudo, dt, capacity) {}

  const MaterialParams& params() const noexcept { return params_; }
  double dt() const noexcept { return dt_; }
  EnergyMode energy_mode() const noexcept { return mode_; }
  double elastic_scale() const noexcept { return elastic_.scale(); }
  double hardening_scale() const noexcept { return hardening_.scale(); }

  TrialState trial(const StateHistory& h, double eps_next) {
    ensure_capacity(h.size());
    const double D_n = h.D().back();
    const double vp_n = h.eps_vp().back();
    const double alpha_n = h.alpha().back();
    const double tau_trial = (1.0 - D_n) * params_.E_pseudo * elastic_.derivative_with_next(h.eps_ve(), eps_next - vp_n);
    const double resist = params_.tau_Y + params_.K_pseudo * hardening_.trial(h.alpha()) + params_.H * alpha_n;
    return {tau_trial, std::abs(tau_trial) - (1.0 - D_n) * resist};
  }

  /// Discrete yield function for stress tau and hardening series
  /// alpha_0..alpha_{n+1}, with damage D.
  double yield(double tau, std::span<const double> alpha, double D) {
    if (alpha.size() < 2) throw ParameterError("alpha series needs at least two samples");
    ensure_capacity(alpha.size() - 1);
    const double resist = params_.tau_Y + params_.K_pseudo * hardening_.derivative(alpha) + params_.H * alpha.back();
    return std::abs(tau) - (1.0 - D) * resist;
  }

  /// Advances `h` by one row. Throws MaterialFailure (leaving `h` unchanged)
  /// when damage cannot be updated admissibly.
  StepInfo step(StateHistory& h, double eps_next) {
    const TrialState tr = trial(h, eps_next);
    const StateRow prev = h.back();
    StateRow next = prev;
    next.eps_total = eps_next;
    next.f_trial = tr.f_trial;
    next.gamma_increment = 0.0;
    StepInfo info;

    if (tr.f_trial <= 0.0) {
      next.tau = tr.tau_trial;
    } else {
      if (tr.tau_trial == 0.0) throw ContractViolation("plastic branch reached with zero trial stress");
      const double one_minus = 1.0 - prev.D;
      const double dg = tr.f_trial / (one_minus * slip_stiffness());
      next.tau = tr.tau_trial - sign_of(tr.tau_trial) * one_minus * params_.E_pseudo * elastic_.scale() * dg;
      next.eps_vp = prev.eps_vp + sign_of(next.tau) * dg;
      next.alpha = prev.alpha + dg;
      next.gamma_increment = dg;
      info.plastic = true;
      info.delta_gamma = dg;
    }
    next.eps_ve = eps_next - next.eps_vp;
    next.Y_ve = -energy_release_magnitude(h.eps_ve(), next.eps_ve);

    if (info.plastic) {
      try {
        const DamageSolution sol =
            damage_newton(prev.D, info.delta_gamma, next.Y_ve, params_.S, params_.s_exp, damage_.tol, damage_.max_iter);
        next.D = sol.D;
        info.newton_iterations = sol.iterations;
      } catch (const NumericalError&) {
        next.D = damage_quadratic_root(prev.D, info.delta_gamma * std::pow(-next.Y_ve / params_.S, params_.s_exp));
        if (next.D >= 1.0 - kFailureMargin) throw MaterialFailure("damage reached the failure cutoff", next.D);
        info.newton_iterations = damage_.max_iter;
        info.quadratic_fallback = true;
      }
    }
    h.append(next);
    return info;
  }

  /// E/(dt^bE G(2-bE)) + K/(dt^bK G(2-bK)) + H: the coefficient of dgamma
  /// in the discrete consistency condition.
  double slip_stiffness() const noexcept {
    return params_.E_pseudo * elastic_.scale() + params_.K_pseudo * hardening_.scale() + params_.H;
  }

private:
  static const MaterialParams& checked(const MaterialParams& p) {
    p.validate();
    return p;
  }

  void ensure_capacity(std::size_t n) {
    if (n <= elastic_.weights().d.size() - 1) return;
    const std::size_t grown = std::max<std::size_t>(2 * n, 16);
    elastic_ = CaputoL1(params_.beta_E, dt_, grown);
    hardening_ = CaputoL1(params_.beta_K, dt_, grown);
    energy_ = FreeEnergy(params_.beta_E, params_.E_pseudo, dt_, grown);
  }

  // psi of the visco-elastic series extended by `newest`.
  double energy_release_magnitude(std::span<const double> eps_ve, double newest) {
    const std::size_t m = eps_ve.size();
    increments_.resize(m);
    increments_[0] = newest - eps_ve[m - 1];
    for (std::size_t i = 1; i < m; ++i) increments_[i] = eps_ve[m - i] - eps_ve[m - i - 1];
    return mode_ == EnergyMode::fft ? energy_.fft(increments_) : energy_.direct(increments_);
  }

  MaterialParams params_;
  double dt_;
  EnergyMode mode_;
  DamageOptions damage_;
  CaputoL1 elastic_;
  CaputoL1 hardening_;
  FreeEnergy energy_;
  std::vector<double> increments_;
};

inline TrialState trial_state(const StateHistory& history, const MaterialParams& params, double eps_next, double dt) {
  return ReturnMapper(params, dt, history.size()).trial(history, eps_next);
}

/// Slip increment closing the discrete consistency condition f_{n+1} = 0.
inline double plastic_slip_increment(double f_trial, double D_n, const MaterialParams& params, double dt) {
  if (!(f_trial > 0.0)) throw ContractViolation("plastic_slip_increment requires f_trial > 0");
  if (D_n >= 1.0) throw MaterialFailure("material already failed", D_n);
  if (D_n < 0.0) throw ParameterError("D_n must be >= 0");
  params.validate();
  const double stiffness = params.E_pseudo * l1_scale(params.beta_E, dt) +
                           params.K_pseudo * l1_scale(params.beta_K, dt) + params.H;
  return f_trial / ((1.0 - D_n) * stiffness);
}

inline double stress_update(double tau_trial, double delta_gamma, double D_n, const MaterialParams& params, double dt) {
  if (!(delta_gamma >= 0.0)) throw ParameterError("delta_gamma must be >= 0");
  if (delta_gamma > 0.0 && tau_trial == 0.0) throw ContractViolation("plastic correction of a zero trial stress");
  return tau_trial - sign_of(tau_trial) * (1.0 - D_n) * params.E_pseudo * l1_scale(params.beta_E, dt) * delta_gamma;
}

/// f = |tau| - (1 - D)[tau_Y + K D^{beta_K}(alpha) + H alpha_{n+1}] for the
/// series alpha_0..alpha_{n+1}.
inline double yield_function(double tau, std::span<const double> alpha, double D, const MaterialParams& params,
                             double dt) {
  if (alpha.size() < 2) throw ParameterError("alpha series needs at least two samples");
  const double resist = params.tau_Y + params.K_pseudo * caputo_l1(alpha, params.beta_K, dt) + params.H * alpha.back();
  return std::abs(tau) - (1.0 - D) * resist;
}

/// One return-mapping step on a copy of `history`.
inline StateHistory step(StateHistory history, double eps_next, const MaterialParams& params, double dt) {
  ReturnMapper(params, dt, history.size()).step(history, eps_next);
  return history;
}

}  // namespace fracdmg
