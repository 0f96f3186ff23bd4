#include "tanglesim/tangle.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "tanglesim/error.hpp"

namespace tanglesim {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::unknown_parent: return "UnknownParent";
    case Errc::duplicate_parent: return "DuplicateParent";
    case Errc::bad_parent_count: return "BadParentCount";
    case Errc::invalid_timing: return "InvalidTiming";
    case Errc::unknown_tx: return "UnknownTx";
    case Errc::not_enough_tips: return "NotEnoughTips";
    case Errc::no_compatible_pair: return "NoCompatiblePair";
    case Errc::at_tip: return "AtTip";
    case Errc::not_conflicting: return "NotConflicting";
    case Errc::too_large: return "TooLarge";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::invalid_scenario: return "InvalidScenario";
    case Errc::insufficient_history: return "InsufficientHistory";
  }
  return "Unknown";
}

std::string_view issuer_name(Issuer issuer) noexcept {
  switch (issuer) {
    case Issuer::iota: return "iota";
    case Issuer::giota: return "giota";
    case Issuer::lazy: return "lazy";
    case Issuer::speculative: return "speculative";
    case Issuer::attacker: return "attacker";
  }
  return "iota";
}

std::optional<Issuer> parse_issuer(std::string_view name) noexcept {
  for (auto issuer : {Issuer::iota, Issuer::giota, Issuer::lazy, Issuer::speculative,
                      Issuer::attacker}) {
    if (issuer_name(issuer) == name) return issuer;
  }
  return std::nullopt;
}

LeftBehindThreshold::LeftBehindThreshold(std::uint32_t lag) : lag_(lag) {
  if (lag < 1) throw Error(Errc::invalid_config, "left-behind threshold d_S must be >= 1");
}

Transaction::Transaction(TxId id, std::span<const TxId> parents,
                         std::optional<ConflictLabel> conflict, Issuer issuer, Tick arrival_time,
                         Tick reveal_time)
    : id_(id),
      parent_count_(static_cast<std::uint8_t>(parents.size())),
      conflict_(conflict),
      issuer_(issuer),
      arrival_time_(arrival_time),
      reveal_time_(reveal_time) {
  std::copy(parents.begin(), parents.end(), parents_.begin());
}

bool Transaction::operator==(const Transaction& other) const noexcept {
  return id_ == other.id_ && std::ranges::equal(parents(), other.parents()) &&
         conflict_ == other.conflict_ && issuer_ == other.issuer_ &&
         arrival_time_ == other.arrival_time_ && reveal_time_ == other.reveal_time_;
}

Tangle::Tangle(Tick genesis_time) {
  txs_.emplace_back(kGenesis, std::span<const TxId>{}, std::nullopt, Issuer::iota, genesis_time,
                    genesis_time);
  children_.emplace_back();
  depth_.push_back(0);
  cum_weight_.push_back(0);
  labels_.emplace_back();
  by_depth_.push_back({kGenesis});
  tips_.push_back(kGenesis);
}

void Tangle::check(TxId id) const {
  if (!contains(id)) throw Error(Errc::unknown_tx, "unknown transaction " + std::to_string(id));
}

TxId Tangle::append(std::span<const TxId> parents, std::optional<ConflictLabel> conflict,
                    Issuer issuer, Tick arrival_time, std::optional<Tick> reveal_time) {
  const Tick reveal = reveal_time.value_or(arrival_time);
  if (parents.empty() || parents.size() > Transaction::kMaxParents) {
    throw Error(Errc::bad_parent_count, "a transaction approves 2 or 3 parents");
  }
  for (std::size_t i = 0; i < parents.size(); ++i) {
    if (!contains(parents[i])) {
      throw Error(Errc::unknown_parent, "unknown parent " + std::to_string(parents[i]));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (parents[i] == parents[j]) {
        throw Error(Errc::duplicate_parent, "parent listed twice: " + std::to_string(parents[i]));
      }
    }
  }
  // Bootstrap: depth-1 transactions may approve the genesis alone.
  if (parents.size() == 1 && parents[0] != kGenesis) {
    throw Error(Errc::bad_parent_count, "only the genesis may be approved alone");
  }
  if (reveal < arrival_time) throw Error(Errc::invalid_timing, "reveal_time < arrival_time");

  const auto id = static_cast<TxId>(txs_.size());
  std::uint32_t d = 0;
  std::vector<ConflictLabel> labels;
  for (TxId p : parents) {
    d = std::max(d, depth_[p] + 1);
    labels.insert(labels.end(), labels_[p].begin(), labels_[p].end());
  }
  if (conflict) labels.push_back(*conflict);
  std::ranges::sort(labels);
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());

  // Every ancestor gains exactly one approver.
  std::vector<bool> seen(txs_.size(), false);
  std::vector<TxId> stack(parents.begin(), parents.end());
  for (TxId p : parents) seen[p] = true;
  while (!stack.empty()) {
    const TxId cur = stack.back();
    stack.pop_back();
    ++cum_weight_[cur];
    for (TxId p : txs_[cur].parents()) {
      if (!seen[p]) {
        seen[p] = true;
        stack.push_back(p);
      }
    }
  }

  for (TxId p : parents) {
    if (children_[p].empty()) {
      auto it = std::ranges::lower_bound(tips_, p);
      tips_.erase(it);
    }
    children_[p].push_back(id);
  }
  txs_.emplace_back(id, parents, conflict, issuer, arrival_time, reveal);
  children_.emplace_back();
  depth_.push_back(d);
  cum_weight_.push_back(0);
  labels_.push_back(std::move(labels));
  if (by_depth_.size() <= d) by_depth_.resize(d + 1);
  by_depth_[d].push_back(id);
  tips_.push_back(id);
  max_depth_ = std::max(max_depth_, d);
  edges_ += parents.size();
  return id;
}

const Transaction& Tangle::tx(TxId id) const {
  check(id);
  return txs_[id];
}

std::span<const TxId> Tangle::children(TxId id) const {
  check(id);
  return children_[id];
}

std::uint32_t Tangle::depth(TxId id) const {
  check(id);
  return depth_[id];
}

std::uint32_t Tangle::cumulative_weight(TxId id) const {
  check(id);
  return cum_weight_[id];
}

bool Tangle::is_tip(TxId id) const {
  check(id);
  return children_[id].empty();
}

std::span<const TxId> Tangle::at_depth(std::uint32_t d) const {
  if (d >= by_depth_.size()) return {};
  return by_depth_[d];
}

std::vector<TxId> Tangle::verification_path(TxId id) const {
  check(id);
  std::vector<bool> seen(txs_.size(), false);
  std::vector<TxId> out{id};
  seen[id] = true;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (TxId p : txs_[out[i]].parents()) {
      if (!seen[p]) {
        seen[p] = true;
        out.push_back(p);
      }
    }
  }
  std::ranges::sort(out);
  return out;
}

std::span<const ConflictLabel> Tangle::path_labels(TxId id) const {
  check(id);
  return labels_[id];
}

bool Tangle::conflicts(TxId a, TxId b) const {
  check(a);
  check(b);
  const auto& la = labels_[a];
  const auto& lb = labels_[b];
  // Both lists are sorted by (set, variant): walk them set by set.
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < la.size() && j < lb.size()) {
    if (la[i].set < lb[j].set) {
      ++i;
    } else if (lb[j].set < la[i].set) {
      ++j;
    } else {
      const auto set = la[i].set;
      std::size_t i_end = i;
      std::size_t j_end = j;
      while (i_end < la.size() && la[i_end].set == set) ++i_end;
      while (j_end < lb.size() && lb[j_end].set == set) ++j_end;
      for (std::size_t x = i; x < i_end; ++x) {
        for (std::size_t y = j; y < j_end; ++y) {
          if (la[x].variant != lb[y].variant) return true;
        }
      }
      i = i_end;
      j = j_end;
    }
  }
  return false;
}

bool Tangle::is_left_behind(TxId id, LeftBehindThreshold threshold) const {
  check(id);
  return children_[id].empty() && max_depth_ - depth_[id] > threshold.value();
}

std::vector<TxId> Tangle::left_behind_tips(LeftBehindThreshold threshold) const {
  std::vector<TxId> out;
  for (TxId t : tips_) {
    if (max_depth_ - depth_[t] > threshold.value()) out.push_back(t);
  }
  return out;
}

std::size_t Tangle::protective_count(TxId id) const {
  std::size_t n = 0;
  for (TxId s : verification_path(id)) {
    if (txs_[s].is_protective()) ++n;
  }
  return n;
}

Snapshot Tangle::snapshot() const { return Snapshot(std::make_shared<const Tangle>(*this)); }

void write_dot(std::ostream& out, const Tangle& tangle, LeftBehindThreshold threshold) {
  out << "digraph tangle {\n";
  for (TxId id = 0; id < tangle.size(); ++id) {
    const auto& t = tangle.tx(id);
    out << "  t" << id << " [depth=" << tangle.depth(id) << ", w=" << tangle.cumulative_weight(id)
        << ", tip=" << (tangle.is_tip(id) ? 1 : 0)
        << ", lb=" << (tangle.is_left_behind(id, threshold) ? 1 : 0) << ", conflict=\"";
    if (t.conflict()) out << t.conflict()->set << ':' << t.conflict()->variant;
    out << "\"]\n";
  }
  for (TxId id = 0; id < tangle.size(); ++id) {
    for (TxId p : tangle.parents(id)) out << "  t" << id << " -> t" << p << "\n";
  }
  out << "}\n";
}

std::string to_dot(const Tangle& tangle, LeftBehindThreshold threshold) {
  std::ostringstream out;
  write_dot(out, tangle, threshold);
  return out.str();
}

}  // namespace tanglesim
