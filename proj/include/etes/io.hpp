#pragma once

// File output: trajectory and event CSVs, key/value metrics, config loading.
//
// trajectory.csv  t,theta,y,g_hat,h_hat,gamma,u,e,xi
// events.csv      k,t_k,tau_k      (tau_k = t_{k+1} - t_k, empty on the last row)
// metrics.csv     key,value
//
// Reals are printed with 17 significant digits, so reading a file back
// reproduces every double exactly.

#include <array>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "etes/config.hpp"
#include "etes/sim.hpp"

namespace etes {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kTrajectoryHeader = "t,theta,y,g_hat,h_hat,gamma,u,e,xi";
inline constexpr const char* kEventsHeader = "k,t_k,tau_k";
inline constexpr const char* kMetricsHeader = "key,value";

inline std::string format_real(double v) { return fmt::format("{:.17g}", v); }

inline void write_trajectory(std::ostream& out, const Trajectory& traj) {
  out << kTrajectoryHeader << '\n';
  for (const Sample& s : traj.samples) {
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                       s.t, s.theta, s.y, s.g_hat, s.h_hat, s.gamma, s.u, s.e, s.xi);
  }
}

/// Inverse of write_trajectory. The dither probe is not stored in the file.
inline Trajectory read_trajectory(std::istream& in, std::optional<Dither> probe = std::nullopt) {
  Trajectory traj;
  traj.probe = probe;
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader) {
    throw IoError("trajectory CSV: missing or unexpected header");
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::array<double, 9> v{};
    std::stringstream ss(line);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(ss, cell, ',')) {
      if (i >= v.size()) throw IoError(fmt::format("trajectory CSV row {}: too many fields", row));
      try {
        v[i++] = std::stod(cell);
      } catch (const std::exception&) {
        throw IoError(fmt::format("trajectory CSV row {}: bad number '{}'", row, cell));
      }
    }
    if (i != v.size()) throw IoError(fmt::format("trajectory CSV row {}: expected 9 fields", row));
    traj.samples.push_back(Sample{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  return traj;
}

inline void write_events(std::ostream& out, const EventLog& log) {
  out << kEventsHeader << '\n';
  for (std::size_t k = 0; k < log.times.size(); ++k) {
    out << k << ',' << format_real(log.times[k]) << ',';
    if (k + 1 < log.times.size()) out << format_real(log.times[k + 1] - log.times[k]);
    out << '\n';
  }
}

using MetricRows = std::vector<std::pair<std::string, std::string>>;

inline void write_metrics(std::ostream& out, const MetricRows& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& [k, v] : rows) out << k << ',' << v << '\n';
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

inline ExperimentSpec load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path), path.string());
}

}  // namespace etes
