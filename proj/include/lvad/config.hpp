#pragma once

/**
 * @file config.hpp
 * @brief Run configuration and its flat `key = value` text format.
 *
 * Keys are namespaced (cvs.*, pump.*, detector.*, controller.*, protocol.*).
 * A file must set every key exactly once; unknown keys are rejected. Numbers
 * are written in shortest round-trip form so load -> save is the identity.
 */

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lvad/experiment.hpp"

namespace lvad {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfiguration {
  CvsParameters cvs;
  PumpParameters pump;
  DetectorConfig detector;
  ControllerKind controller = ControllerKind::Mfac;
  MfacConfig mfac;
  PidConfig pid;
  ProtocolConfig protocol;
  ScenarioKind scenario = ScenarioKind::RestToExercise;
  std::uint64_t seed = 1;
  std::uint64_t patients = 20;
  std::string output_dir = "out";

  ProtocolInputs inputs() const { return {cvs, pump, detector, mfac, pid, protocol}; }
  /// Throws ConfigError naming the offending section.
  void validate() const;
  bool operator==(const RunConfiguration&) const = default;
};

/// Every key in canonical order.
std::vector<std::string> config_keys();

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string to_config_text(const RunConfiguration& c);
RunConfiguration parse_config_text(std::string_view text);

RunConfiguration load_config(const std::filesystem::path& path);
void save_config(const RunConfiguration& c, const std::filesystem::path& path);

/// Assigns one key from its textual value; throws ConfigError for unknown keys or bad values.
void set_config_value(RunConfiguration& c, std::string_view key, std::string_view value);

}  // namespace lvad
