#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "layercode/simulator.hpp"

namespace layercode::cli {

/// Bad or inconsistent configuration; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { Simulate, SweepOmega, SweepDeadline, Bounds, VerifyCodec };
enum class Format { Csv, Json };

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

struct ExperimentSpec {
  Mode mode = Mode::Simulate;
  SimConfig sim;
  std::vector<double> omega_grid{1.0, 1.01, 1.02, 1.03, 1.04, 1.05, 1.06, 1.07, 1.08, 1.09, 1.1};
  std::vector<double> deadline_grid{5, 7.5, 10, 12.5, 15, 17.5, 20, 22.5, 25, 27.5, 30, 35, 40};
  std::string out_path;            // empty: standard output
  std::string hist_path;           // simulate: optional histogram sidecar
  Format format = Format::Csv;
  std::size_t hist_bins = 40;
  std::optional<double> cs2;       // bounds: override the empirical c_s^2
  std::size_t trials = 100;        // verify-codec
  unsigned threads = 1;

  /// Applies one `key = value` setting. Throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Canonical `key=value` lines of every setting that affects results.
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string config_hash() const;
  void validate() const;
};

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

/// Parses flat `key = value` text with `#` comments. Throws ConfigError with the line number.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::string& path);

/// Version string stamped into every output.
std::string version_string();

/// Runs the experiment and writes its primary output to `out`. Returns the
/// process exit code; verify-codec returns kExitRuntimeError when any check fails.
int run_experiment(const ExperimentSpec& spec, std::ostream& out);

/// Opens spec.out_path (or uses stdout) and runs. Throws std::runtime_error if unwritable.
int run_experiment(const ExperimentSpec& spec);

/// Per-layer summary used by several modes.
struct LayerSummary {
  unsigned layer = 0;
  std::size_t samples = 0;
  double mean_delay = 0.0;
  double mean_compute = 0.0;
  double variance_delay = 0.0;
  double success_rate = 0.0;
};

std::vector<LayerSummary> summarize(const SimResult& result, unsigned layers);

/// fixed-point with 6 decimals
std::string format_time(double t);

}  // namespace layercode::cli
