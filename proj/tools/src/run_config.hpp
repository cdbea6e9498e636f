#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oamspdc/detector.hpp"
#include "oamspdc/spectrum.hpp"

namespace oamspdc::cli {

struct SweepSpec {
  SweepAxis axis = SweepAxis::thickness;
  std::vector<double> values;  ///< internal units (um or radians)
  ModeSelection modes = ModeSelection::all_p;
};

struct DetectorSpec {
  double step_deg = 0.9;
  InterferometerParams params;
  ExtremaMethod extrema = ExtremaMethod::two_shot;
  int scan_steps = 40;
  bool four_shot = false;
  std::optional<std::filesystem::path> psi_signal_csv;
  std::optional<std::filesystem::path> psi_idler_csv;
  std::optional<std::filesystem::path> input_spectrum_csv;
};

/// Everything one invocation needs, in internal units.
struct RunConfig {
  SpdcConfig spdc;
  int n_max = 40;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::filesystem::path output_dir = "out";
  ModeSelection spectrum_modes = ModeSelection::all_p;
  std::optional<SweepSpec> sweep;
  DetectorSpec detector;
  NoiseModel noise;
  std::string sellmeier_ref = "bbo_eimerl1987";

  /// Propagates `threads` to the engines.
  void apply_threads();
  /// The configuration in its on-disk form (degrees, millimetres), with every
  /// default filled in.
  nlohmann::json to_json() const;
};

/// Parses the on-disk JSON form. Unknown keys and out-of-range values throw
/// ConfigError naming the dotted field path. Relative file references are
/// resolved against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Reads and parses a config file. Unreadable files and JSON syntax errors
/// throw ConfigError with field "config".
RunConfig load_run_config(const std::filesystem::path& path);

const char* to_string(SweepAxis axis);
const char* to_string(ModeSelection modes);
SweepAxis parse_sweep_axis(const std::string& s, const std::string& field);
ModeSelection parse_mode_selection(const std::string& s, const std::string& field);

}  // namespace oamspdc::cli
