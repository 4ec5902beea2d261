#pragma once

// CSV and summary writers. Floats use 17 significant digits, "." as the
// decimal point and LF line endings regardless of the global locale.

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracdmg/config.hpp"
#include "fracdmg/driver.hpp"
#include "fracdmg/plasticity.hpp"

namespace fracdmg {

inline constexpr const char* kHistoryCsvHeader = "step,t,eps,eps_ve,eps_vp,alpha,tau,D,Y_ve,f_trial";

inline void write_history_csv(std::ostream& out, const StateHistory& h, const TimeGrid& grid) {
  out << kHistoryCsvHeader << '\n';
  for (std::size_t k = 0; k < h.size(); ++k) {
    const StateRow r = h.row(k);
    out << k << ',' << format_g17(grid.t(k)) << ',' << format_g17(r.eps_total) << ',' << format_g17(r.eps_ve) << ','
        << format_g17(r.eps_vp) << ',' << format_g17(r.alpha) << ',' << format_g17(r.tau) << ',' << format_g17(r.D)
        << ',' << format_g17(r.Y_ve) << ',' << format_g17(r.f_trial) << '\n';
  }
}

inline nlohmann::json run_summary(const RunReport& report, const RunConfig& cfg) {
  nlohmann::json j;
  j["status"] = report.status.completed() ? "completed" : "failed_at_step";
  j["failed_at_step"] = report.status.failed_at_step ? nlohmann::json(*report.status.failed_at_step) : nlohmann::json();
  j["steps_completed"] = report.history.steps();
  j["N"] = cfg.grid.N;
  j["dt_s"] = cfg.grid.dt();
  j["energy_mode"] = to_string(resolve_mode(cfg.energy_mode, cfg.grid.N));
  j["wall_time_s"] = report.wall_time;
  j["final_D"] = report.history.D().back();
  return j;
}

/// Energy CSV header; the psi column is named after the evaluation path.
inline std::string energy_csv_header(EnergyMode path) {
  return "step,t,eps,psi_" + to_string(path) + ",psi_exact,abs_err";
}

inline void write_energy_csv(std::ostream& out, EnergyMode path, const TimeGrid& grid, std::span<const double> eps,
                             std::span<const double> psi, std::optional<std::span<const double>> exact) {
  out << energy_csv_header(path) << '\n';
  for (std::size_t k = 0; k < psi.size(); ++k) {
    out << k << ',' << format_g17(grid.t(k)) << ',' << format_g17(eps[k]) << ',' << format_g17(psi[k]) << ',';
    if (exact) {
      out << format_g17((*exact)[k]) << ',' << format_g17(std::abs(psi[k] - (*exact)[k]));
    } else {
      out << ',';
    }
    out << '\n';
  }
}

}  // namespace fracdmg
