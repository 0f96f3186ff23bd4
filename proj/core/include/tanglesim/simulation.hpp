#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tanglesim/confidence.hpp"
#include "tanglesim/rng.hpp"
#include "tanglesim/supervision.hpp"
#include "tanglesim/tangle.hpp"
#include "tanglesim/tip_selection.hpp"

namespace tanglesim {

/// Share of arrivals handled by each agent type. Must sum to 1.
struct AgentMix {
  double iota = 1.0;
  double giota = 0.0;
  double lazy = 0.0;
  double speculative = 0.0;

  bool operator==(const AgentMix&) const = default;
};

struct AttackerConfig {
  /// Tick at which the conflicting pair is planted.
  Tick start_tick = 20;
  /// mu: spam transactions per tick.
  std::uint32_t budget = 5;
  /// Spam is issued only while |branch weight difference| exceeds this.
  std::uint32_t balance_band = 1;

  bool operator==(const AttackerConfig&) const = default;
};

struct SimScenario {
  Tick duration = 400;
  /// lambda: expected arrivals per tick.
  double arrival_rate = 5.0;
  AgentMix mix;
  std::optional<AttackerConfig> attacker;
  WalkConfig walk = WalkConfig::weighted(0.7);
  std::uint32_t d_s = 5;
  /// h: a transaction issued at tick t is visible from tick t + h on; with h = 0
  /// later arrivals of the same tick already see it.
  Tick reveal_delay = 0;
  std::uint64_t seed = 1;
  Tick sample_interval = 10;
  /// Runs behind the confidence estimate each G-IOTA issuer computes.
  std::uint64_t giota_confidence_samples = 32;
  /// m: walks used to estimate each branch's selection probability.
  std::uint64_t branch_walks = 200;
  /// When set, every revealed transaction is audited.
  std::optional<SupervisionConfig> supervision;
  /// Ticks between full confidence reports; 0 disables them.
  Tick report_interval = 0;
  std::uint64_t report_samples = 1000;

  /// Throws Errc::invalid_scenario.
  void validate() const;

  bool operator==(const SimScenario&) const = default;
};

struct TraceEvent {
  Tick tick = 0;
  TxId tx = 0;
  Issuer issuer = Issuer::iota;
  TxId tip1 = 0;
  std::optional<TxId> tip2;
  std::optional<TxId> tip3;

  bool operator==(const TraceEvent&) const = default;
};

struct MetricsSample {
  Tick tick = 0;
  std::size_t n_tx = 0;
  std::size_t n_tips = 0;
  std::size_t n_left_behind = 0;
  double cf = 1.0;
  std::uint32_t depth = 0;
  std::uint32_t branch1_w = 0;
  std::uint32_t branch2_w = 0;

  bool operator==(const MetricsSample&) const = default;
};

struct BranchSample {
  Tick tick = 0;
  std::uint32_t branch1_w = 0;
  std::uint32_t branch2_w = 0;
  double p1 = 0.0;
  double p2 = 0.0;

  bool operator==(const BranchSample&) const = default;
};

/// When a transaction was first seen left behind and when it was first approved.
struct TipFate {
  std::optional<Tick> discovered;
  std::optional<Tick> approved;
  /// D - d_t in the approving issuer's view at first approval.
  std::uint32_t approval_lag = 0;
};

/// Per-tick arrival count and how many tips were first seen left behind.
struct TickLoad {
  Tick tick = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t discoveries = 0;
  std::uint64_t left_behind = 0;
};

struct SimStats {
  std::uint64_t arrivals = 0;
  std::array<std::uint64_t, 5> issued{};  // indexed by Issuer
  std::uint64_t skipped = 0;              // lazy/speculative arrivals with no stale target
  std::uint64_t fallbacks = 0;            // honest arrivals that could not run a full selection
};

/// Conflict pair planted by the splitting attacker.
struct AttackState {
  std::optional<std::array<TxId, 2>> variants;
  std::uint32_t conflict_set = 1;
};

struct SimResult {
  Tangle tangle;
  std::vector<TraceEvent> trace;
  std::vector<MetricsSample> metrics;
  std::vector<BranchSample> branches;
  std::vector<AuditVerdict> verdicts;
  std::vector<TimedReport> reports;
  std::vector<TipFate> fates;
  std::vector<TickLoad> loads;
  SimStats stats;
  AttackState attack;
};

/// Which side of the split a transaction descends from: 0, 1, or none.
std::optional<int> branch_of(const Tangle& tangle, TxId id, const AttackState& attack);

struct BranchWeights {
  std::uint32_t first = 0;
  std::uint32_t second = 0;
};
BranchWeights branch_weights(const Tangle& tangle, const AttackState& attack);

/// Share of m single walks ending on each branch.
std::array<double, 2> branch_probabilities(const Tangle& tangle, const AttackState& attack,
                                           const WalkConfig& cfg, std::uint64_t walks, Rng& rng);

/// Appends two conflicting transactions approving the same two tips.
std::array<TxId, 2> plant_conflict_pair(Tangle& tangle, const WalkConfig& cfg, Tick tick,
                                        Tick reveal_delay, std::uint32_t conflict_set, Rng& rng);

/// Spam transactions (parent lists) that rebalance the lighter branch: none
/// while |weight difference| <= band, otherwise min(mu, difference).
std::vector<std::vector<TxId>> splitting_attacker_policy(const Tangle& view,
                                                         const AttackerConfig& cfg,
                                                         const AttackState& attack, Rng& rng);

/// Two old, already buried transactions (depth <= D - d_S with an approved
/// approver). Empty when fewer than two exist.
std::optional<std::vector<TxId>> lazy_policy(const Tangle& view, LeftBehindThreshold threshold,
                                             Rng& rng);

/// An honest weighted-walk pair plus an already buried, non-left-behind third
/// parent. Empty when no such transaction or no compatible pair exists.
std::optional<Selection> speculative_policy(const Tangle& view, const WalkConfig& cfg, Rng& rng);

/// True when id has an approver that is itself approved.
bool is_buried(const Tangle& view, TxId id);

SimResult run_scenario(const SimScenario& scenario);

void write_trace_csv(std::ostream& out, std::span<const TraceEvent> trace);
void write_metrics_csv(std::ostream& out, std::span<const MetricsSample> metrics);
void write_branches_csv(std::ostream& out, std::span<const BranchSample> branches);

/// First sample tick at which one branch, or the traffic reaching neither
/// branch, holds selection probability above `level`.
std::optional<Tick> collapse_tick(std::span<const BranchSample> branches, double level = 0.99);

}  // namespace tanglesim
