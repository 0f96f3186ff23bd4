#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tanglesim/simulation.hpp"

namespace tanglesim::cli {

enum class Format { csv, json, dot };

std::string_view format_name(Format format) noexcept;

struct RunConfig {
  SimScenario scenario = default_scenario();
  std::string out_dir = ".";
  Format format = Format::csv;
  /// Runs behind the end-of-run report.json.
  std::uint64_t final_report_samples = 10'000;
  unsigned workers = 1;
  /// Alpha values visited by fairness-sweep.
  std::vector<double> sweep_alphas{0.1, 0.3, 0.5, 0.7};

  static SimScenario default_scenario();

  /// Throws Errc::invalid_config or Errc::invalid_scenario.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

/// Applies one key=value setting. Unknown keys and malformed values throw
/// Errc::invalid_config.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Applies every non-blank, non-comment line of a key=value file.
void apply_text(RunConfig& config, std::string_view text);

/// Every key, one per line, in a stable order; parse(serialize(c)) == c.
std::string serialize(const RunConfig& config);
RunConfig parse(std::string_view text);

std::vector<std::string_view> preset_names();
/// Throws Errc::invalid_config for an unknown name.
RunConfig preset(std::string_view name);

}  // namespace tanglesim::cli
