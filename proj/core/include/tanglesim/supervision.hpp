#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tanglesim/confidence.hpp"
#include "tanglesim/tangle.hpp"

namespace tanglesim {

enum class AuditStatus : std::uint8_t { honest, suspicious };

struct AuditReason {
  TxId parent = 0;
  /// Longest forward path from the parent to a tip of the auditor's view.
  std::uint32_t len = 0;

  bool operator==(const AuditReason&) const = default;
};

struct AuditVerdict {
  TxId tx = 0;
  AuditStatus status = AuditStatus::honest;
  std::vector<AuditReason> reasons;

  bool operator==(const AuditVerdict&) const = default;
};

struct SupervisionConfig {
  /// L: forward path length at which an approved parent counts as stale.
  std::uint32_t path_tolerance = 2;
  /// T: ticks a transaction must stay below low_conf before it is suspected.
  Tick punishment_horizon = 20;
  double low_conf = 0.1;

  /// Requires L >= 1, T >= 4 * d_S and low_conf in (0, 1).
  void validate(LeftBehindThreshold threshold) const;

  bool operator==(const SupervisionConfig&) const = default;
};

/// Longest path from id forward to any tip of the view; 0 for a tip.
std::uint32_t forward_path_length(const Tangle& view, TxId id);

/// Audits an incoming transaction against the receiver's local view. A parent
/// that already has a forward path of length >= L, and was not a left-behind
/// tip, was picked stale.
AuditVerdict audit_incoming(const Tangle& local_view, const Transaction& tx,
                            const SupervisionConfig& cfg, LeftBehindThreshold threshold);

struct TimedReport {
  Tick tick = 0;
  ConfidenceReport report;
};

/// Transactions at least T ticks old whose confidence stayed below low_conf
/// in every report of the last T ticks. Reports must be in tick order.
std::vector<TxId> detect_suspects(const Tangle& tangle, std::span<const TimedReport> history,
                                  const SupervisionConfig& cfg, LeftBehindThreshold threshold);

std::string verdict_to_json(const AuditVerdict& verdict);
void write_verdicts_jsonl(std::ostream& out, std::span<const AuditVerdict> verdicts);

}  // namespace tanglesim
