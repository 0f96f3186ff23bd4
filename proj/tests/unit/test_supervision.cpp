#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "tanglesim/error.hpp"
#include "tanglesim/simulation.hpp"
#include "tanglesim/supervision.hpp"

using namespace tanglesim;

namespace {

Tangle chain(std::size_t len) {
  Tangle t;
  t.append({0});
  TxId older = 0, newer = 1;
  while (t.size() < len) {
    const TxId next = t.append({newer, older}, std::nullopt, Issuer::iota, t.size());
    older = newer;
    newer = next;
  }
  return t;
}

Transaction incoming(const Tangle& view, std::vector<TxId> parents, Issuer issuer = Issuer::iota) {
  return Transaction(static_cast<TxId>(view.size()), parents, std::nullopt, issuer, 0, 0);
}

TimedReport at(Tick tick, std::vector<double> c) {
  const auto len = c.size();
  return {tick, ConfidenceReport(len, 100, {}, std::move(c), WalkConfig{})};
}

}  // namespace

TEST_CASE("supervision config validation") {
  const LeftBehindThreshold ds(5);
  CHECK_NOTHROW(SupervisionConfig{2, 20, 0.1}.validate(ds));
  CHECK_THROWS_AS(SupervisionConfig({0, 20, 0.1}).validate(ds), Error);
  CHECK_THROWS_AS(SupervisionConfig({2, 19, 0.1}).validate(ds), Error);
  CHECK_THROWS_AS(SupervisionConfig({2, 20, 0.0}).validate(ds), Error);
  CHECK_THROWS_AS(SupervisionConfig({2, 20, 1.0}).validate(ds), Error);
}

TEST_CASE("forward path length") {
  const auto t = chain(10);
  CHECK(forward_path_length(t, 9) == 0);
  CHECK(forward_path_length(t, 8) == 1);
  CHECK(forward_path_length(t, 0) == 9);
  CHECK_THROWS_AS(forward_path_length(t, 10), Error);
}

TEST_CASE("audit of incoming transactions") {
  auto t = chain(12);
  t.append({10, 9});  // second tip, 12
  const LeftBehindThreshold ds(3);
  const SupervisionConfig cfg{2, 12, 0.1};

  const auto fresh = audit_incoming(t, incoming(t, {11, 12}), cfg, ds);
  CHECK(fresh.status == AuditStatus::honest);
  CHECK(fresh.reasons.empty());
  CHECK(fresh.tx == t.size());

  // Both parents have forward paths of L + 3 = 5 or more.
  REQUIRE(forward_path_length(t, 5) >= 5);
  REQUIRE(forward_path_length(t, 4) >= 5);
  const auto lazy = audit_incoming(t, incoming(t, {4, 5}, Issuer::lazy), cfg, ds);
  CHECK(lazy.status == AuditStatus::suspicious);
  REQUIRE(lazy.reasons.size() == 2);
  CHECK(lazy.reasons[0] == AuditReason{4, forward_path_length(t, 4)});
  CHECK(lazy.reasons[1] == AuditReason{5, forward_path_length(t, 5)});

  // Below the tolerance: one step behind the front is fine.
  CHECK(audit_incoming(t, incoming(t, {10, 12}), cfg, ds).reasons.size() == 0);
  CHECK(audit_incoming(t, incoming(t, {9, 12}), cfg, ds).reasons.size() == 1);

  // A protected left-behind tip is exempt.
  const TxId grey = t.append({2, 1});
  const TxId top = t.append({12, 11});
  REQUIRE(t.is_left_behind(grey, ds));
  const auto protector = audit_incoming(t, incoming(t, {top, 12, grey}, Issuer::giota), cfg, ds);
  CHECK(protector.status == AuditStatus::honest);

  CHECK_THROWS_AS(audit_incoming(t, incoming(t, {top, 99}), cfg, ds), Error);
}

TEST_CASE("verdict JSON lines") {
  const AuditVerdict v{7, AuditStatus::suspicious, {{3, 4}, {2, 5}}};
  CHECK(verdict_to_json(v) ==
        R"({"tx":7,"status":"suspicious","reasons":[{"parent":3,"len":4},{"parent":2,"len":5}]})");
  const AuditVerdict h{8, AuditStatus::honest, {}};
  std::ostringstream out;
  const AuditVerdict both[] = {v, h};
  write_verdicts_jsonl(out, both);
  CHECK(out.str() == verdict_to_json(v) + "\n" + verdict_to_json(h) + "\n");
}

TEST_CASE("suspect detection over a report window") {
  const auto t = chain(6);  // tx k arrives at tick k - 1 for k >= 2
  const LeftBehindThreshold ds(1);
  const SupervisionConfig cfg{2, 4, 0.1};

  const TimedReport one[] = {at(0, {1, 1, 1, 1, 1, 1})};
  try {
    detect_suspects(t, one, cfg, ds);
    FAIL("expected InsufficientHistory");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_history);
  }
  const TimedReport short_span[] = {at(0, {1, 1, 1, 1, 1, 1}), at(3, {1, 1, 1, 1, 1, 1})};
  CHECK_THROWS_AS(detect_suspects(t, short_span, cfg, ds), Error);

  // tx 2 stays below 0.1 throughout; tx 3 recovers once; tx 5 is too young.
  const std::vector<TimedReport> history = {
      at(2, {1, 1, 0.05, 0.05, 1, 0.0}),
      at(4, {1, 1, 0.02, 0.5, 1, 0.0}),
      at(6, {1, 1, 0.0, 0.01, 1, 0.0}),
  };
  CHECK(detect_suspects(t, history, cfg, ds) == std::vector<TxId>{2});

  // Remains flagged while its confidence stays low.
  auto longer = history;
  longer.push_back(at(8, {1, 1, 0.03, 0.01, 1, 0.0}));
  const auto later = detect_suspects(t, longer, cfg, ds);
  CHECK(std::ranges::binary_search(later, TxId{2}));

  // Reaching the confirmation threshold inside the window clears it.
  auto cleared = longer;
  cleared.push_back(at(10, {1, 1, 1.0, 0.01, 1, 0.0}));
  const auto after = detect_suspects(t, cleared, cfg, ds);
  CHECK_FALSE(std::ranges::binary_search(after, TxId{2}));
}
