#include "tanglesim/supervision.hpp"

#include <algorithm>
#include <ostream>

#include <json.hpp>

#include "tanglesim/error.hpp"

namespace tanglesim {

void SupervisionConfig::validate(LeftBehindThreshold threshold) const {
  if (path_tolerance < 1) throw Error(Errc::invalid_config, "L must be >= 1");
  if (punishment_horizon < 4ULL * threshold.value()) {
    throw Error(Errc::invalid_config, "T must be >= 4 * d_S");
  }
  if (!(low_conf > 0.0 && low_conf < 1.0)) {
    throw Error(Errc::invalid_config, "low_conf must lie in (0, 1)");
  }
}

std::uint32_t forward_path_length(const Tangle& view, TxId id) {
  if (!view.contains(id)) throw Error(Errc::unknown_tx, "unknown transaction " + std::to_string(id));
  // Descendants all have larger ids; heights are filled from the newest down.
  const std::size_t span = view.size() - id;
  std::vector<bool> reach(span, false);
  std::vector<std::uint32_t> height(span, 0);
  reach[0] = true;
  for (std::size_t i = 0; i < span; ++i) {
    if (!reach[i]) continue;
    for (TxId c : view.children(static_cast<TxId>(id + i))) reach[c - id] = true;
  }
  for (std::size_t i = span; i-- > 0;) {
    if (!reach[i]) continue;
    for (TxId c : view.children(static_cast<TxId>(id + i))) {
      height[i] = std::max(height[i], height[c - id] + 1);
    }
  }
  return height[0];
}

AuditVerdict audit_incoming(const Tangle& local_view, const Transaction& tx,
                            const SupervisionConfig& cfg, LeftBehindThreshold threshold) {
  AuditVerdict verdict;
  verdict.tx = tx.id();
  for (TxId p : tx.parents()) {
    if (!local_view.contains(p)) {
      throw Error(Errc::unknown_parent, "parent " + std::to_string(p) + " not in local view");
    }
  }
  for (TxId p : tx.parents()) {
    if (local_view.is_left_behind(p, threshold)) continue;
    const auto len = forward_path_length(local_view, p);
    if (len >= cfg.path_tolerance) verdict.reasons.push_back({p, len});
  }
  verdict.status = verdict.reasons.empty() ? AuditStatus::honest : AuditStatus::suspicious;
  return verdict;
}

std::vector<TxId> detect_suspects(const Tangle& tangle, std::span<const TimedReport> history,
                                  const SupervisionConfig& cfg, LeftBehindThreshold threshold) {
  cfg.validate(threshold);
  if (history.size() < 2 ||
      history.back().tick - history.front().tick < cfg.punishment_horizon) {
    throw Error(Errc::insufficient_history, "need >= 2 reports spanning >= T ticks");
  }
  const Tick last = history.back().tick;
  const Tick window_start = last - cfg.punishment_horizon;
  std::vector<const ConfidenceReport*> window;
  for (const auto& r : history) {
    if (r.tick >= window_start) window.push_back(&r.report);
  }
  std::vector<TxId> out;
  for (TxId id = 0; id < tangle.size(); ++id) {
    if (tangle.tx(id).arrival_time() > window_start) continue;
    const bool low = std::ranges::all_of(window, [&](const ConfidenceReport* r) {
      return id < r->snapshot_len() && r->confidence(id) < cfg.low_conf;
    });
    if (low) out.push_back(id);
  }
  return out;
}

std::string verdict_to_json(const AuditVerdict& verdict) {
  nlohmann::ordered_json j;
  j["tx"] = verdict.tx;
  j["status"] = verdict.status == AuditStatus::suspicious ? "suspicious" : "honest";
  j["reasons"] = nlohmann::ordered_json::array();
  for (const auto& r : verdict.reasons) j["reasons"].push_back({{"parent", r.parent}, {"len", r.len}});
  return j.dump();
}

void write_verdicts_jsonl(std::ostream& out, std::span<const AuditVerdict> verdicts) {
  for (const auto& v : verdicts) out << verdict_to_json(v) << '\n';
}

}  // namespace tanglesim
