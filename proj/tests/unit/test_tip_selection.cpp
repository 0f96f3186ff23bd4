#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "oracles.hpp"
#include "stats.hpp"
#include "tanglesim/confidence.hpp"
#include "tanglesim/error.hpp"
#include "tanglesim/tip_selection.hpp"

using namespace tanglesim;

namespace {

std::pair<TxId, TxId> unordered(const Selection& s) {
  return {std::min(s.tip1, s.tip2), std::max(s.tip1, s.tip2)};
}

bool is_tip_of(const Tangle& t, TxId id) { return std::ranges::binary_search(t.tips(), id); }

void check_valid(const Tangle& t, const Selection& s) {
  CHECK(s.tip1 != s.tip2);
  CHECK(is_tip_of(t, s.tip1));
  CHECK(is_tip_of(t, s.tip2));
  CHECK_FALSE(t.conflicts(s.tip1, s.tip2));
  if (s.tip3) {
    CHECK(*s.tip3 != s.tip1);
    CHECK(*s.tip3 != s.tip2);
    CHECK(is_tip_of(t, *s.tip3));
    CHECK_FALSE(t.conflicts(*s.tip3, s.tip1));
    CHECK_FALSE(t.conflicts(*s.tip3, s.tip2));
  }
}

// Node 1 with two approvers: 2 (weight 5) and 3 (weight 2).
Tangle weighted_fork() {
  Tangle t;
  t.append({0});
  t.append({0, 1});  // 2
  t.append({0, 1});  // 3
  TxId a = t.append({2, 0}), b = 2;
  for (int i = 0; i < 4; ++i) {
    const TxId next = t.append({a, b});
    b = a;
    a = next;
  }
  const TxId c = t.append({3, 0});
  t.append({c, 3});
  return t;
}

// A chain of `len` transactions, each approving its two predecessors.
Tangle chain(std::size_t len) {
  Tangle t;
  t.append({0});
  TxId older = 0, newer = 1;
  while (t.size() < len) {
    const TxId next = t.append({newer, older});
    older = newer;
    newer = next;
  }
  return t;
}

}  // namespace

TEST_CASE("walk configuration validation") {
  CHECK_NOTHROW(WalkConfig::weighted(0.7).validate());
  auto bad = WalkConfig::weighted(-0.1);
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = WalkConfig::weighted(0.5, 1);
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = WalkConfig::weighted(0.5, 10, 0);
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(WalkConfig::weighted(0.5, 10, 10).lazy_max_steps == 5u);
  CHECK(WalkConfig::unweighted().alpha == 0.0);
}

TEST_CASE("start interval is measured back from the front") {
  const auto t = chain(30);  // D = 29
  const auto r = start_interval(t, 10);
  CHECK(r.low == 9);
  CHECK(r.high == 19);
  const auto clamped = start_interval(t, 20);
  CHECK(clamped.low == 0);
  CHECK(clamped.high == 9);
  const auto starts = start_candidates(t, 10);
  CHECK(starts.front() == 9);
  CHECK(starts.back() == 19);
}

TEST_CASE("uniform selection") {
  Tangle two;
  two.append({0});
  two.append({0, 1});
  two.append({0, 1});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto s = uniform_select(two, rng);
    CHECK(unordered(s) == std::pair<TxId, TxId>{2, 3});
    CHECK_FALSE(s.tip3);
  }

  Tangle clash;
  clash.append({0});
  clash.append({0, 1}, ConflictLabel{1, 0});
  clash.append({0, 1}, ConflictLabel{1, 1});
  const TxId c = clash.append({0, 1});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto s = uniform_select(clash, rng);
    CHECK((s.tip1 == c || s.tip2 == c));
    check_valid(clash, s);
  }

  Tangle lone;
  Rng rng(1);
  CHECK_THROWS_AS(uniform_select(lone, rng), Error);
}

TEST_CASE("uniform pair frequencies over ten tips") {
  Tangle t;
  t.append({0});
  for (int i = 0; i < 10; ++i) t.append({0, 1});
  REQUIRE(t.tips().size() == 10);
  constexpr std::uint64_t n = 100'000;
  std::map<std::pair<TxId, TxId>, std::uint64_t> freq;
  Rng rng(20240601);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto s = uniform_select(t, rng);
    ++freq[unordered(s)];
  }
  CHECK(freq.size() == 45);
  for (const auto& [pair, count] : freq) CHECK(stats::within_sigma(count, n, 1.0 / 45.0));
}

TEST_CASE("walk step") {
  Tangle single;
  single.append({0});
  single.append({0, 1});
  Rng rng(3);
  for (int i = 0; i < 10; ++i) CHECK(walk_step(single, 1, 0.7, rng) == 2);
  CHECK_THROWS_AS(walk_step(single, 2, 0.7, rng), Error);

  const auto fork = weighted_fork();
  REQUIRE(fork.cumulative_weight(2) == 5);
  REQUIRE(fork.cumulative_weight(3) == 2);
  const auto flat = transition_probabilities(fork, 1, 0.0);
  CHECK(flat == std::vector<double>{0.5, 0.5});

  const auto p = transition_probabilities(fork, 1, 0.7);
  const double want = std::exp(3.5) / (std::exp(3.5) + std::exp(1.4));
  CHECK(p[0] == doctest::Approx(want).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.8909).epsilon(1e-4));

  constexpr std::uint64_t n = 100'000;
  std::uint64_t heavy = 0;
  Rng walk(77);
  for (std::uint64_t i = 0; i < n; ++i) heavy += walk_step(fork, 1, 0.7, walk) == 2 ? 1 : 0;
  CHECK(stats::within_sigma(heavy, n, want));
}

TEST_CASE("alpha zero gives exactly uniform transitions") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = oracle::random_tangle(40, seed, 0.2);
    for (TxId id = 0; id < t.size(); ++id) {
      const auto kids = t.children(id);
      if (kids.empty()) continue;
      const auto p = transition_probabilities(t, id, 0.0);
      for (double x : p) CHECK(x == 1.0 / static_cast<double>(kids.size()));
    }
  }
}

TEST_CASE("larger alpha moves probability toward the heavier approver") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = oracle::random_tangle(40, seed);
    for (TxId id = 0; id < t.size(); ++id) {
      const auto kids = t.children(id);
      if (kids.size() != 2) continue;
      const auto w0 = t.cumulative_weight(kids[0]);
      const auto w1 = t.cumulative_weight(kids[1]);
      if (w0 == w1) continue;
      const std::size_t heavy = w0 > w1 ? 0 : 1;
      double last = 0.5;
      for (double alpha : {0.05, 0.1, 0.3, 0.7, 1.0}) {
        const double p = transition_probabilities(t, id, alpha)[heavy];
        CHECK(p > last);
        last = p;
      }
    }
  }
}

TEST_CASE("weighted walk selection") {
  Tangle two;
  two.append({0});
  two.append({0, 1});
  two.append({0, 1});
  for (double alpha : {0.0, 0.7, 3.0}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = weighted_walk_select(two, WalkConfig::weighted(alpha, 10, 10, seed));
      CHECK(unordered(s) == std::pair<TxId, TxId>{2, 3});
    }
  }

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto t = oracle::random_tangle(60, seed, 0.1, true);
    Rng rng(seed);
    for (int i = 0; i < 50; ++i) check_valid(t, weighted_walk_select(t, WalkConfig::weighted(0.5, 10, 3), rng));
  }

  Tangle lone;
  lone.append({0});
  CHECK_THROWS_AS(weighted_walk_select(lone, WalkConfig::weighted(0.5)), Error);

  Tangle split;
  split.append({0}, ConflictLabel{1, 0});
  split.append({0}, ConflictLabel{1, 1});
  try {
    weighted_walk_select(split, WalkConfig::weighted(0.5));
    FAIL("expected NoCompatiblePair");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_compatible_pair);
  }
}

TEST_CASE("seeded selection is reproducible") {
  const auto t = oracle::random_tangle(80, 9, 0.0, true);
  const auto cfg = WalkConfig::weighted(0.5, 10, 4, 1234);
  CHECK(weighted_walk_select(t, cfg) == weighted_walk_select(t, cfg));
}

TEST_CASE("single walk absorption matches path enumeration on a 12-tx tangle") {
  const auto t = oracle::random_tangle(12, 42);
  const auto cfg = WalkConfig::weighted(0.7, 10, 2);
  const auto want = oracle::tip_distribution(oracle::Dag(t), 0.7, 2);
  const auto exact = exact_tip_distribution(t, cfg);
  for (TxId id = 0; id < t.size(); ++id) CHECK(exact[id] == doctest::Approx(want[id]).epsilon(1e-12));

  constexpr std::uint64_t n = 100'000;
  std::vector<std::uint64_t> hits(t.size(), 0);
  const auto starts = start_candidates(t, cfg.interval_w);
  Rng rng(5150);
  for (std::uint64_t i = 0; i < n; ++i) ++hits[single_walk(t, cfg, starts, rng).tip];
  for (TxId id = 0; id < t.size(); ++id) CHECK(stats::within_sigma(hits[id], n, want[id]));
}

namespace {

// Chain to depth 12 plus two stale side tips: 13 off tx 1 and 14 off tx 2.
struct StaleFixture {
  Tangle t = chain(13);
  TxId lb1 = 0, lb2 = 0;
  LeftBehindThreshold ds{3};

  explicit StaleFixture(bool conflict = false) {
    lb1 = t.append({1, 0}, conflict ? std::optional(ConflictLabel{4, 0}) : std::nullopt);
    lb2 = t.append({2, 1});
  }

  ConfidenceReport report(double c1, double c2) const {
    std::vector<double> c(t.size(), 1.0);
    c[lb1] = c1;
    c[lb2] = c2;
    return {t.size(), 100, {}, c, WalkConfig::weighted(0.7)};
  }
};

}  // namespace

TEST_CASE("left-behind candidate") {
  const auto fresh = chain(8);
  const ConfidenceReport none(fresh.size(), 1, {}, std::vector<double>(fresh.size(), 1.0), {});
  CHECK_FALSE(select_left_behind_candidate(fresh, LeftBehindThreshold(3), none, {}));

  StaleFixture f;
  REQUIRE(f.t.left_behind_tips(f.ds) == std::vector<TxId>{f.lb1, f.lb2});
  CHECK(select_left_behind_candidate(f.t, f.ds, f.report(0.05, 0.30), {}) == f.lb1);
  CHECK(select_left_behind_candidate(f.t, f.ds, f.report(0.30, 0.05), {}) == f.lb2);
  CHECK(select_left_behind_candidate(f.t, f.ds, f.report(0.2, 0.2), {}) == f.lb1);
  const TxId skip[] = {f.lb1};
  CHECK(select_left_behind_candidate(f.t, f.ds, f.report(0.05, 0.30), skip) == f.lb2);

  // The cheaper candidate conflicts with tip1's path: the runner-up is used.
  StaleFixture g(true);
  const TxId tip1 = g.t.append({12, 11}, ConflictLabel{4, 1});
  const TxId excluded[] = {tip1};
  CHECK(select_left_behind_candidate(g.t, g.ds, g.report(0.05, 0.30), excluded) == g.lb2);
}

TEST_CASE("random tie order among equal candidates") {
  StaleFixture f;
  const auto report = f.report(0.2, 0.2);
  std::map<TxId, int> picks;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    ++picks[*select_left_behind_candidate(f.t, f.ds, report, {}, ConfirmationRule::stranger(), &rng)];
  }
  CHECK(picks[f.lb1] > 50);
  CHECK(picks[f.lb2] > 50);
}

TEST_CASE("G-IOTA without left-behind tips equals the weighted walk") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = chain(30);
    auto grown = t;
    grown.append({28, 27});
    const auto cfg = WalkConfig::weighted(0.7, 10, 5, seed);
    const auto report = estimate_confidence(grown, cfg, 100, seed);
    REQUIRE(grown.left_behind_tips(LeftBehindThreshold(5)).empty());
    const auto g = g_iota_select(grown, cfg, LeftBehindThreshold(5), report);
    const auto w = weighted_walk_select(grown, cfg);
    CHECK(g == w);
    CHECK_FALSE(g.tip3);
  }
}

TEST_CASE("G-IOTA protects a left-behind tip") {
  auto t = chain(20);
  const TxId grey = t.append({2, 1});
  t.append({19, 18});
  t.append({18, 17});
  const LeftBehindThreshold ds(5);
  REQUIRE(t.left_behind_tips(ds) == std::vector<TxId>{grey});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto cfg = WalkConfig::weighted(0.7, 10, 5, seed);
    const auto report = estimate_confidence(t, cfg, 200, seed);
    const auto s = g_iota_select(t, cfg, ds, report);
    check_valid(t, s);
    CHECK(s.tip3 == grey);
    CHECK(s.parents().size() == 3);
  }
}

TEST_CASE("protective path tie-break") {
  Tangle t;
  t.append({0});
  t.append({0, 1});
  t.append({0, 1, 2});
  const TxId a = t.append({3, 2}, ConflictLabel{1, 0});
  const TxId b = t.append({1, 0}, ConflictLabel{1, 1});
  TxId pa = a, pb = b;
  // Four protective txs above a, one above b.
  for (int i = 0; i < 3; ++i) pa = t.append({pa, 3, 2});
  pb = t.append({pb, 1, 0});
  REQUIRE(t.protective_count(pa) == 4);
  REQUIRE(t.protective_count(pb) == 1);
  CHECK(prefer_protective_path(t, pa, pb) == pa);
  CHECK(prefer_protective_path(t, pb, pa) == pa);

  Tangle even;
  even.append({0});
  const TxId x = even.append({0, 1}, ConflictLabel{2, 0});
  const TxId y = even.append({0, 1}, ConflictLabel{2, 1});
  CHECK(prefer_protective_path(even, y, x) == x);
  CHECK_THROWS_AS(prefer_protective_path(even, x, 1), Error);
}

TEST_CASE("the protective branch wins every conflict encounter") {
  // Two equally heavy conflicting branches above a fork; only branch A holds
  // three-parent transactions.
  Tangle t;
  t.append({0});
  t.append({0, 1});
  const TxId a = t.append({1, 2}, ConflictLabel{1, 0});
  const TxId b = t.append({1, 2}, ConflictLabel{1, 1});
  const TxId a1 = t.append({a, 1, 2});
  const TxId b1 = t.append({b, 1});
  const TxId a2 = t.append({a1, a}), a3 = t.append({a1, a});
  const TxId b2 = t.append({b1, b}), b3 = t.append({b1, b});
  auto on = WalkConfig::weighted(0.0, 10, 10);
  on.lazy_max_steps.reset();
  on.incentive_tiebreak = true;
  auto off = on;
  off.incentive_tiebreak = false;
  auto in_a = [&](TxId tip) { return tip == a2 || tip == a3; };
  int differ = 0, a_wins = 0, total_a_on = 0, total_a_off = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    Rng r1(seed), r2(seed);
    const auto with = weighted_walk_select(t, on, r1);
    const auto without = weighted_walk_select(t, off, r2);
    total_a_on += in_a(with.tip1) ? 1 : 0;
    total_a_off += in_a(without.tip1) ? 1 : 0;
    if (with == without) continue;
    ++differ;
    a_wins += in_a(with.tip1) && in_a(with.tip2) ? 1 : 0;
  }
  (void)b2;
  (void)b3;
  CHECK(differ > 100);
  CHECK(static_cast<double>(a_wins) / differ > 0.95);
  CHECK(total_a_on > total_a_off);
}
