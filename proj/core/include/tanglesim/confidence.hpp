#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tanglesim/tangle.hpp"
#include "tanglesim/tip_selection.hpp"

namespace tanglesim {

struct TipHits {
  TxId id = 0;
  std::uint64_t hits = 0;

  bool operator==(const TipHits&) const = default;
};

/// Confidence of every transaction of one snapshot, estimated from n
/// tip-selection runs: C_s is the share of runs whose tip approves s directly
/// or indirectly (or is s).
class ConfidenceReport {
 public:
  ConfidenceReport(std::size_t snapshot_len, std::uint64_t samples, std::vector<TipHits> tip_hits,
                   std::vector<double> confidence, WalkConfig selector);

  std::size_t snapshot_len() const noexcept { return snapshot_len_; }
  std::uint64_t samples() const noexcept { return samples_; }
  /// Tips hit at least once, ascending by id.
  std::span<const TipHits> tip_hits() const noexcept { return tip_hits_; }
  std::uint64_t hits(TxId tip) const;
  /// Throws Errc::unknown_tx for ids outside the snapshot.
  double confidence(TxId id) const;
  std::span<const double> confidences() const noexcept { return confidence_; }
  const WalkConfig& selector() const noexcept { return selector_; }

  bool operator==(const ConfidenceReport&) const = default;

 private:
  std::size_t snapshot_len_;
  std::uint64_t samples_;
  std::vector<TipHits> tip_hits_;
  std::vector<double> confidence_;
  WalkConfig selector_;
};

struct ConfirmationRule {
  double threshold = 1.0;

  static ConfirmationRule stranger() { return {1.0}; }
  static ConfirmationRule friend_grade() { return {0.8}; }

  void validate() const;
};

/// Runs n single-walker selections and aggregates the tip hits. Runs are split
/// into fixed chunks with derived seeds, so the result does not depend on the
/// number of workers.
ConfidenceReport estimate_confidence(const Tangle& tangle, const WalkConfig& cfg, std::uint64_t n,
                                     std::uint64_t seed, unsigned workers = 1);

/// C_s = (sum of hits over tips whose path contains s) / n, for every s.
std::vector<double> confidence_from_hits(const Tangle& tangle, std::span<const TipHits> hits,
                                         std::uint64_t n);

bool is_confirmed(const ConfidenceReport& report, TxId id, const ConfirmationRule& rule);

/// Left-behind tips plus every transaction all of whose approving tips are
/// left behind. Ascending.
std::vector<TxId> left_behind_closure(const Tangle& tangle, LeftBehindThreshold threshold);

/// 1 - |left-behind closure| / |all transactions|. Higher is fairer.
double confidence_fairness(const Tangle& tangle, LeftBehindThreshold threshold);

/// Exact single-walk absorption probability of every tip (0 for non-tips),
/// using the same start interval and transition law as the estimator.
std::vector<double> exact_tip_distribution(const Tangle& tangle, const WalkConfig& cfg);

/// Exact expected confidence of every transaction. Throws Errc::too_large above
/// 200 edges.
std::vector<double> exact_confidence_oracle(const Tangle& tangle, const WalkConfig& cfg);

inline constexpr std::size_t kOracleMaxEdges = 200;

std::string report_to_json(const ConfidenceReport& report);
ConfidenceReport report_from_json(const std::string& text);

}  // namespace tanglesim
