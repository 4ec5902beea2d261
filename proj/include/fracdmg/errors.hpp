#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fracdmg {

/// Invalid argument or configuration value.
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke an operation's precondition (e.g. plastic corrector on an
/// elastic trial state).
class ContractViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Iterative solver did not converge; carries the last iterate.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string& what, double last_iterate)
      : std::runtime_error(what), last_iterate_(last_iterate) {}

  double last_iterate() const noexcept { return last_iterate_; }

private:
  double last_iterate_;
};

/// Damage reached the failure cutoff or the damage equation lost its root.
/// This is a physical outcome of the model, not a program error.
class MaterialFailure : public std::runtime_error {
public:
  MaterialFailure(const std::string& what, double last_damage)
      : std::runtime_error(what), last_damage_(last_damage) {}

  double last_damage() const noexcept { return last_damage_; }

private:
  double last_damage_;
};

}  // namespace fracdmg
