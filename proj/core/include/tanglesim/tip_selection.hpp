#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tanglesim/rng.hpp"
#include "tanglesim/tangle.hpp"

namespace tanglesim {

class ConfidenceReport;
struct ConfirmationRule;

struct WalkConfig {
  /// Weight bias; 0 turns the weighted walk into the unweighted one.
  double alpha = 0.0;
  /// Walkers launched per selection round.
  std::uint32_t particles = 10;
  /// Walkers start on transactions with depth in [D - 2W, D - W].
  std::uint32_t interval_w = 10;
  /// Walks reaching a tip in fewer steps are discarded. Empty disables the filter.
  std::optional<std::uint32_t> lazy_max_steps;
  std::uint64_t rng_seed = 0;
  /// On a conflict between two candidate tips keep the one whose path holds
  /// more protective (three-parent) transactions.
  bool incentive_tiebreak = false;
  /// Relaunch rounds before giving up on a compatible pair.
  std::uint32_t relaunch_rounds = 16;

  /// Config with the default lazy filter of W/2 steps.
  static WalkConfig weighted(double alpha, std::uint32_t particles = 10,
                             std::uint32_t interval_w = 10, std::uint64_t seed = 0);
  /// Weighted walk with alpha = 0.
  static WalkConfig unweighted(std::uint32_t particles = 10, std::uint32_t interval_w = 10,
                               std::uint64_t seed = 0);

  /// Throws Errc::invalid_config on bad values.
  void validate() const;

  bool operator==(const WalkConfig&) const = default;
};

struct Selection {
  TxId tip1 = 0;
  TxId tip2 = 0;
  std::optional<TxId> tip3;
  std::uint32_t discarded_walks = 0;

  /// Parent list for the transaction built from this selection.
  std::vector<TxId> parents() const;

  bool operator==(const Selection&) const = default;
};

/// Inclusive depth range walkers start from, clamped at the genesis.
struct StartInterval {
  std::uint32_t low = 0;
  std::uint32_t high = 0;
};

StartInterval start_interval(const Tangle& tangle, std::uint32_t interval_w);
/// Transactions walkers may start on, ascending.
std::vector<TxId> start_candidates(const Tangle& tangle, std::uint32_t interval_w);

/// P(current -> y) for every approver y of current, in children order.
/// Proportional to exp(alpha * cumulative_weight(y)).
std::vector<double> transition_probabilities(const Tangle& tangle, TxId current, double alpha);

/// One step of the walk toward the tips. Throws Errc::at_tip on a tip.
TxId walk_step(const Tangle& tangle, TxId current, double alpha, Rng& rng);

struct WalkResult {
  TxId tip = 0;
  std::uint32_t steps = 0;
};

/// Single walker from a uniform start in the start interval to a tip.
WalkResult single_walk(const Tangle& tangle, const WalkConfig& cfg,
                       std::span<const TxId> starts, Rng& rng);

/// Two distinct tips drawn uniformly; a conflicting second draw is replaced.
Selection uniform_select(const Tangle& tangle, const WalkConfig& cfg);
Selection uniform_select(const Tangle& tangle, Rng& rng);

/// The first two distinct, non-conflicting tips reached by N interleaved walkers.
Selection weighted_walk_select(const Tangle& tangle, const WalkConfig& cfg);
Selection weighted_walk_select(const Tangle& tangle, const WalkConfig& cfg, Rng& rng);

/// Left-behind tip with the smallest average confidence over the non-confirmed
/// transactions of its verification path whose path does not conflict with any
/// of `excluded`. Equal averages go to the lower id.
std::optional<TxId> select_left_behind_candidate(const Tangle& tangle,
                                                 LeftBehindThreshold threshold,
                                                 const ConfidenceReport& report,
                                                 std::span<const TxId> excluded,
                                                 const ConfirmationRule& rule);
std::optional<TxId> select_left_behind_candidate(const Tangle& tangle,
                                                 LeftBehindThreshold threshold,
                                                 const ConfidenceReport& report,
                                                 std::span<const TxId> excluded);
/// As above; candidates with equal averages are ordered uniformly at random
/// by `ties` instead of by id.
std::optional<TxId> select_left_behind_candidate(const Tangle& tangle,
                                                 LeftBehindThreshold threshold,
                                                 const ConfidenceReport& report,
                                                 std::span<const TxId> excluded,
                                                 const ConfirmationRule& rule, Rng* ties);

/// Weighted-walk pair plus an optional protected left-behind third tip. Equal
/// candidate averages are broken with the selection's generator.
Selection g_iota_select(const Tangle& tangle, const WalkConfig& cfg, LeftBehindThreshold threshold,
                        const ConfidenceReport& report);
Selection g_iota_select(const Tangle& tangle, const WalkConfig& cfg, LeftBehindThreshold threshold,
                        const ConfidenceReport& report, Rng& rng);
/// As above; `make_report` is only invoked when left-behind tips exist.
Selection g_iota_select(const Tangle& tangle, const WalkConfig& cfg, LeftBehindThreshold threshold,
                        const std::function<ConfidenceReport()>& make_report, Rng& rng);

/// Of two conflicting tips, the one whose verification path holds strictly more
/// three-parent transactions; ties go to the lower id.
TxId prefer_protective_path(const Tangle& tangle, TxId a, TxId b);

}  // namespace tanglesim
