#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tanglesim/cli/run_config.hpp"

namespace tanglesim::cli {

struct FairnessRow {
  double alpha = 0.0;
  Issuer algo = Issuer::iota;
  double cf = 1.0;
  double lb_fraction = 0.0;
  std::size_t n_tx = 0;
};

/// Share of final tips that are left behind although issuers already saw
/// them left behind; excludes tips that only just crossed the threshold.
double stale_tip_fraction(const SimResult& result, LeftBehindThreshold threshold);

std::vector<FairnessRow> fairness_sweep(const RunConfig& config);
void write_fairness_csv(std::ostream& out, std::span<const FairnessRow> rows);

/// Each command writes its artifacts under config.out_dir and returns the
/// list of files written.
std::vector<std::string> cmd_simulate(const RunConfig& config);
std::vector<std::string> cmd_attack(const RunConfig& config);
std::vector<std::string> cmd_fairness_sweep(const RunConfig& config);
std::vector<std::string> cmd_export_dot(const RunConfig& config);

/// Full command line driver: returns 0, 2 (invalid config) or 3 (runtime
/// failure); diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tanglesim::cli
