#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tanglesim {

/// Transaction id. Ids are dense and follow issuance order; the genesis is 0.
using TxId = std::uint32_t;
using Tick = std::uint64_t;

inline constexpr TxId kGenesis = 0;

enum class Issuer : std::uint8_t { iota, giota, lazy, speculative, attacker };

std::string_view issuer_name(Issuer issuer) noexcept;
std::optional<Issuer> parse_issuer(std::string_view name) noexcept;

/// Mutually-exclusive marker: two transactions with the same set and different
/// variants can never both sit in one verification path.
struct ConflictLabel {
  std::uint32_t set = 0;
  std::uint32_t variant = 0;

  auto operator<=>(const ConflictLabel&) const = default;
};

/// Depth lag after which an unapproved tip counts as left behind.
class LeftBehindThreshold {
 public:
  explicit LeftBehindThreshold(std::uint32_t lag);

  std::uint32_t value() const noexcept { return lag_; }

 private:
  std::uint32_t lag_;
};

class Transaction {
 public:
  static constexpr std::size_t kMaxParents = 3;

  Transaction() = default;
  Transaction(TxId id, std::span<const TxId> parents, std::optional<ConflictLabel> conflict,
              Issuer issuer, Tick arrival_time, Tick reveal_time);

  TxId id() const noexcept { return id_; }
  std::span<const TxId> parents() const noexcept { return {parents_.data(), parent_count_}; }
  const std::optional<ConflictLabel>& conflict() const noexcept { return conflict_; }
  Issuer issuer() const noexcept { return issuer_; }
  Tick arrival_time() const noexcept { return arrival_time_; }
  Tick reveal_time() const noexcept { return reveal_time_; }

  /// True when the transaction carried out left-behind protection (three parents).
  bool is_protective() const noexcept { return parent_count_ == 3; }

  bool operator==(const Transaction& other) const noexcept;

 private:
  TxId id_ = 0;
  std::array<TxId, kMaxParents> parents_{};
  std::uint8_t parent_count_ = 0;
  std::optional<ConflictLabel> conflict_;
  Issuer issuer_ = Issuer::iota;
  Tick arrival_time_ = 0;
  Tick reveal_time_ = 0;
};

class Snapshot;

/// Append-only DAG ledger. Depth, cumulative weight, tip set and the conflict
/// labels of every verification path are maintained incrementally.
///
/// Cumulative weight counts the transactions approving a transaction directly
/// or indirectly, excluding itself, so every tip has weight 0.
class Tangle {
 public:
  /// Creates a tangle holding only the genesis.
  explicit Tangle(Tick genesis_time = 0);

  /// Appends a transaction and returns its id. Takes 2 or 3 distinct existing
  /// parents; a single parent is accepted only when it is the genesis.
  TxId append(std::span<const TxId> parents, std::optional<ConflictLabel> conflict = std::nullopt,
              Issuer issuer = Issuer::iota, Tick arrival_time = 0,
              std::optional<Tick> reveal_time = std::nullopt);
  TxId append(std::initializer_list<TxId> parents,
              std::optional<ConflictLabel> conflict = std::nullopt, Issuer issuer = Issuer::iota,
              Tick arrival_time = 0, std::optional<Tick> reveal_time = std::nullopt) {
    return append(std::span<const TxId>(parents.begin(), parents.size()), conflict, issuer,
                  arrival_time, reveal_time);
  }

  std::size_t size() const noexcept { return txs_.size(); }
  bool contains(TxId id) const noexcept { return id < txs_.size(); }

  const Transaction& tx(TxId id) const;
  std::span<const TxId> parents(TxId id) const { return tx(id).parents(); }
  std::span<const TxId> children(TxId id) const;

  std::uint32_t depth(TxId id) const;
  std::uint32_t max_depth() const noexcept { return max_depth_; }
  std::uint32_t cumulative_weight(TxId id) const;

  /// Tips in ascending id order.
  std::span<const TxId> tips() const noexcept { return tips_; }
  bool is_tip(TxId id) const;

  /// Transactions at exactly depth d, ascending.
  std::span<const TxId> at_depth(std::uint32_t d) const;

  /// S_t: t plus all of its ancestors, ascending.
  std::vector<TxId> verification_path(TxId id) const;

  /// Sorted conflict labels present in the verification path of id.
  std::span<const ConflictLabel> path_labels(TxId id) const;

  /// True when the verification paths of a and b hold labels with the same
  /// conflict set and different variants.
  bool conflicts(TxId a, TxId b) const;

  bool is_left_behind(TxId id, LeftBehindThreshold threshold) const;
  /// Tips t with D - d_t > d_S, ascending.
  std::vector<TxId> left_behind_tips(LeftBehindThreshold threshold) const;

  /// Number of three-parent transactions in the verification path of id.
  std::size_t protective_count(TxId id) const;

  std::size_t edge_count() const noexcept { return edges_; }

  Snapshot snapshot() const;

  bool operator==(const Tangle& other) const noexcept { return txs_ == other.txs_; }

 private:
  void check(TxId id) const;

  std::vector<Transaction> txs_;
  std::vector<std::vector<TxId>> children_;
  std::vector<std::uint32_t> depth_;
  std::vector<std::uint32_t> cum_weight_;
  std::vector<std::vector<ConflictLabel>> labels_;
  std::vector<std::vector<TxId>> by_depth_;
  std::vector<TxId> tips_;
  std::uint32_t max_depth_ = 0;
  std::size_t edges_ = 0;
};

/// Frozen, shareable read-only view of a tangle at one length. Later appends
/// to the source tangle are not visible through it.
class Snapshot {
 public:
  explicit Snapshot(std::shared_ptr<const Tangle> tangle) : tangle_(std::move(tangle)) {}

  const Tangle& operator*() const noexcept { return *tangle_; }
  const Tangle* operator->() const noexcept { return tangle_.get(); }
  const Tangle& tangle() const noexcept { return *tangle_; }

  bool operator==(const Snapshot& other) const noexcept { return *tangle_ == *other.tangle_; }

 private:
  std::shared_ptr<const Tangle> tangle_;
};

/// Graphviz export, one node line per transaction and one edge per approval.
void write_dot(std::ostream& out, const Tangle& tangle, LeftBehindThreshold threshold);
std::string to_dot(const Tangle& tangle, LeftBehindThreshold threshold);

}  // namespace tanglesim
