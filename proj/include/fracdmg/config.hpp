#pragma once

// Run configuration files: INI-style sections [material], [grid], [load],
// [run] with unit-suffixed keys. See docs in README.md for the full schema.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <array>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "fracdmg/driver.hpp"
#include "fracdmg/energy.hpp"
#include "fracdmg/errors.hpp"
#include "fracdmg/plasticity.hpp"

namespace fracdmg {

enum class Observable { stress, free_energy };

struct RunConfig {
  MaterialParams material;
  TimeGrid grid;
  LoadProgram load = LinearRamp{};
  EnergyMode energy_mode = EnergyMode::automatic;
  std::string output_path = "out.csv";
  Observable observable = Observable::stress;
  std::size_t coarse_n = 0;  // coarsest grid of a convergence study; 0 = unset

  void validate() const {
    material.validate();
    grid.validate();
    fracdmg::validate(load);
    if (output_path.empty()) throw ParameterError("run.output_path must not be empty");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Shortest representation that parses back to the same double.
inline std::string format_shortest(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

/// 17 significant digits, locale independent.
inline std::string format_g17(double v) {
  std::array<char, 40> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), end);
}

inline std::string to_string(EnergyMode m) {
  switch (m) {
    case EnergyMode::direct: return "direct";
    case EnergyMode::fft: return "fft";
    case EnergyMode::automatic: return "auto";
  }
  return "auto";
}

inline EnergyMode parse_energy_mode(std::string_view s) {
  if (s == "direct") return EnergyMode::direct;
  if (s == "fft") return EnergyMode::fft;
  if (s == "auto") return EnergyMode::automatic;
  throw ParameterError("energy mode must be direct, fft or auto, got '" + std::string(s) + "'");
}

inline std::string to_string(Observable o) { return o == Observable::stress ? "stress" : "free_energy"; }

namespace detail {

class Section {
public:
  Section(const boost::property_tree::ptree& root, std::string name) : name_(std::move(name)) {
    const auto child = root.get_child_optional(name_);
    if (!child) throw ParameterError("config: missing section [" + name_ + "]");
    node_ = &*child;
  }

  std::string text(const std::string& key) {
    const auto v = node_->get_optional<std::string>(key);
    if (!v) throw ParameterError("config: [" + name_ + "] missing key '" + key + "'");
    used_.insert(key);
    return *v;
  }

  std::string text_or(const std::string& key, const std::string& fallback) {
    if (!node_->get_optional<std::string>(key)) return fallback;
    return text(key);
  }

  bool has(const std::string& key) const { return node_->get_optional<std::string>(key).has_value(); }

  double number(const std::string& key) {
    const std::string s = text(key);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) {
      throw ParameterError("config: [" + name_ + "] " + key + " is not a number: '" + s + "'");
    }
    return v;
  }

  std::size_t count(const std::string& key) {
    const std::string s = text(key);
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) {
      throw ParameterError("config: [" + name_ + "] " + key + " is not a nonnegative integer: '" + s + "'");
    }
    return v;
  }

  FractionalOrder order(const std::string& key) {
    try {
      return FractionalOrder(number(key));
    } catch (const ParameterError& e) {
      throw ParameterError("config: [" + name_ + "] " + key + ": " + e.what());
    }
  }

  void reject_unknown() const {
    for (const auto& [key, _] : *node_) {
      if (!used_.contains(key)) throw ParameterError("config: [" + name_ + "] unknown key '" + key + "'");
    }
  }

private:
  std::string name_;
  const boost::property_tree::ptree* node_ = nullptr;
  std::set<std::string> used_;
};

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree root;
  try {
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  for (const auto& [name, _] : root) {
    if (name != "material" && name != "grid" && name != "load" && name != "run") {
      throw ParameterError("config: unknown section [" + name + "]");
    }
  }

  RunConfig cfg;
  detail::Section mat(root, "material");
  cfg.material.E_pseudo = mat.number("E_pseudo_pa_s_betaE");
  cfg.material.beta_E = mat.order("beta_E");
  cfg.material.K_pseudo = mat.number("K_pseudo_pa_s_betaK");
  cfg.material.beta_K = mat.order("beta_K");
  cfg.material.H = mat.number("H_pa");
  cfg.material.tau_Y = mat.number("tau_Y_pa");
  cfg.material.S = mat.number("S_pa");
  cfg.material.s_exp = mat.number("s_exp");
  mat.reject_unknown();

  detail::Section grid(root, "grid");
  cfg.grid.T = grid.number("T_s");
  cfg.grid.N = grid.count("N");
  grid.reject_unknown();

  detail::Section load(root, "load");
  const std::string type = load.text("type");
  if (type == "linear_ramp") {
    cfg.load = LinearRamp{load.number("rate_per_s")};
  } else if (type == "quadratic_ramp") {
    cfg.load = QuadraticRamp{load.number("T_s")};
  } else if (type == "sinusoid") {
    cfg.load = Sinusoid{load.number("amplitude"), load.number("omega_rad_per_s")};
  } else if (type == "triangle_wave") {
    cfg.load = TriangleWave{load.number("amplitude"), load.number("omega_per_s")};
  } else {
    throw ParameterError("config: [load] type must be linear_ramp, quadratic_ramp, sinusoid or triangle_wave, got '" +
                         type + "'");
  }
  load.reject_unknown();

  if (root.get_child_optional("run")) {
    detail::Section run(root, "run");
    try {
      cfg.energy_mode = parse_energy_mode(run.text_or("energy_mode", "auto"));
    } catch (const ParameterError& e) {
      throw ParameterError(std::string("config: [run] energy_mode: ") + e.what());
    }
    cfg.output_path = run.text_or("output_path", cfg.output_path);
    const std::string obs = run.text_or("observable", "stress");
    if (obs == "stress") {
      cfg.observable = Observable::stress;
    } else if (obs == "free_energy") {
      cfg.observable = Observable::free_energy;
    } else {
      throw ParameterError("config: [run] observable must be stress or free_energy, got '" + obs + "'");
    }
    if (run.has("coarse_n")) cfg.coarse_n = run.count("coarse_n");
    run.reject_unknown();
  }

  cfg.validate();
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("config: cannot open '" + path + "'");
  return parse_config(in);
}

inline std::string write_config(const RunConfig& cfg) {
  std::ostringstream out;
  const auto& m = cfg.material;
  out << "[material]\n"
      << "E_pseudo_pa_s_betaE = " << format_shortest(m.E_pseudo) << "\n"
      << "beta_E = " << format_shortest(m.beta_E.value()) << "\n"
      << "K_pseudo_pa_s_betaK = " << format_shortest(m.K_pseudo) << "\n"
      << "beta_K = " << format_shortest(m.beta_K.value()) << "\n"
      << "H_pa = " << format_shortest(m.H) << "\n"
      << "tau_Y_pa = " << format_shortest(m.tau_Y) << "\n"
      << "S_pa = " << format_shortest(m.S) << "\n"
      << "s_exp = " << format_shortest(m.s_exp) << "\n\n";
  out << "[grid]\n"
      << "T_s = " << format_shortest(cfg.grid.T) << "\n"
      << "N = " << cfg.grid.N << "\n\n";
  out << "[load]\n";
  std::visit(
      [&out](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearRamp>) {
          out << "type = linear_ramp\nrate_per_s = " << format_shortest(p.rate) << "\n";
        } else if constexpr (std::is_same_v<P, QuadraticRamp>) {
          out << "type = quadratic_ramp\nT_s = " << format_shortest(p.T) << "\n";
        } else if constexpr (std::is_same_v<P, Sinusoid>) {
          out << "type = sinusoid\namplitude = " << format_shortest(p.amplitude)
              << "\nomega_rad_per_s = " << format_shortest(p.omega) << "\n";
        } else {
          out << "type = triangle_wave\namplitude = " << format_shortest(p.amplitude)
              << "\nomega_per_s = " << format_shortest(p.omega) << "\n";
        }
      },
      cfg.load);
  out << "\n[run]\n"
      << "energy_mode = " << to_string(cfg.energy_mode) << "\n"
      << "output_path = " << cfg.output_path << "\n"
      << "observable = " << to_string(cfg.observable) << "\n";
  if (cfg.coarse_n != 0) out << "coarse_n = " << cfg.coarse_n << "\n";
  return out.str();
}

}  // namespace fracdmg
