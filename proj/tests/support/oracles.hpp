#pragma once

// Brute-force reference computations. They only read the edge list of a
// tangle and recompute everything else from scratch, so they share no code
// with the incremental indexes under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <set>
#include <vector>

#include "tanglesim/rng.hpp"
#include "tanglesim/tangle.hpp"

namespace oracle {

using tanglesim::TxId;

struct Dag {
  std::vector<std::vector<TxId>> parents;

  explicit Dag(const tanglesim::Tangle& t) {
    for (TxId id = 0; id < t.size(); ++id) {
      const auto p = t.parents(id);
      parents.emplace_back(p.begin(), p.end());
    }
  }

  std::size_t size() const { return parents.size(); }

  std::vector<std::vector<TxId>> children() const {
    std::vector<std::vector<TxId>> out(size());
    for (TxId c = 0; c < size(); ++c) {
      for (TxId p : parents[c]) out[p].push_back(c);
    }
    return out;
  }
};

/// Random DAG: tx 1 approves the genesis, every later tx approves 2 (or with
/// probability p3, 3) distinct uniformly chosen earlier txs. With tips_only
/// the choice is restricted to the tips of a view lagging three txs behind,
/// which gives a tangle-shaped DAG with several concurrent tips.
inline tanglesim::Tangle random_tangle(std::size_t n, std::uint64_t seed, double p3 = 0.0,
                                       bool tips_only = false) {
  tanglesim::Tangle t;
  tanglesim::Rng rng(seed);
  if (n < 2) return t;
  t.append({0});
  while (t.size() < n) {
    std::vector<TxId> pool;
    if (tips_only) {
      const std::size_t seen = t.size() > 3 ? t.size() - 3 : t.size();
      for (TxId id = 0; id < seen; ++id) {
        const auto ch = t.children(id);
        if (std::none_of(ch.begin(), ch.end(), [&](TxId c) { return c < seen; })) pool.push_back(id);
      }
    }
    if (pool.size() < 2) {
      pool.clear();
      for (TxId id = 0; id < t.size(); ++id) pool.push_back(id);
    }
    std::size_t k = (pool.size() >= 3 && rng.uniform() < p3) ? 3 : 2;
    std::vector<TxId> chosen;
    while (chosen.size() < k) {
      TxId c = pool[rng.index(pool.size())];
      if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) chosen.push_back(c);
    }
    t.append(chosen);
  }
  return t;
}

/// Ancestors of t plus t, by breadth-first search over parent edges.
inline std::set<TxId> bfs_path(const Dag& g, TxId t) {
  std::set<TxId> seen{t};
  std::deque<TxId> q{t};
  while (!q.empty()) {
    TxId x = q.front();
    q.pop_front();
    for (TxId p : g.parents[x]) {
      if (seen.insert(p).second) q.push_back(p);
    }
  }
  return seen;
}

/// Longest edge count from the genesis, by memoised recursion.
inline std::uint32_t depth(const Dag& g, TxId t, std::vector<long>& memo) {
  if (memo[t] >= 0) return static_cast<std::uint32_t>(memo[t]);
  std::uint32_t best = 0;
  for (TxId p : g.parents[t]) best = std::max(best, depth(g, p, memo) + 1);
  memo[t] = best;
  return best;
}

inline std::vector<std::uint32_t> depths(const Dag& g) {
  std::vector<long> memo(g.size(), -1);
  std::vector<std::uint32_t> out;
  for (TxId t = 0; t < g.size(); ++t) out.push_back(depth(g, t, memo));
  return out;
}

/// Number of q != t whose verification path contains t.
inline std::vector<std::uint32_t> cumulative_weights(const Dag& g) {
  std::vector<std::uint32_t> out(g.size(), 0);
  for (TxId q = 0; q < g.size(); ++q) {
    for (TxId s : bfs_path(g, q)) {
      if (s != q) ++out[s];
    }
  }
  return out;
}

inline std::vector<TxId> tips(const Dag& g) {
  const auto ch = g.children();
  std::vector<TxId> out;
  for (TxId t = 0; t < g.size(); ++t) {
    if (ch[t].empty()) out.push_back(t);
  }
  return out;
}

inline std::vector<TxId> left_behind(const Dag& g, std::uint32_t d_s) {
  const auto d = depths(g);
  const auto top = *std::max_element(d.begin(), d.end());
  std::vector<TxId> out;
  for (TxId t : tips(g)) {
    if (top - d[t] > d_s) out.push_back(t);
  }
  return out;
}

/// Txs reachable only from left-behind tips: no fresh tip approves them.
inline std::vector<TxId> closure(const Dag& g, std::uint32_t d_s) {
  const auto lb = left_behind(g, d_s);
  std::set<TxId> fresh_reach;
  for (TxId t : tips(g)) {
    if (std::find(lb.begin(), lb.end(), t) != lb.end()) continue;
    const auto s = bfs_path(g, t);
    fresh_reach.insert(s.begin(), s.end());
  }
  std::vector<TxId> out;
  for (TxId t = 0; t < g.size(); ++t) {
    if (!fresh_reach.count(t)) out.push_back(t);
  }
  return out;
}

/// Absorption probability of each tip for one walker: uniform start on
/// depths [D - 2W, D - W], softmax steps exp(alpha * weight). Enumerates every
/// path explicitly, so it is exponential and only fit for tiny DAGs.
inline std::vector<double> tip_distribution(const Dag& g, double alpha, std::uint32_t w) {
  const auto d = depths(g);
  const auto cw = cumulative_weights(g);
  const auto ch = g.children();
  const long top = *std::max_element(d.begin(), d.end());
  const long lo = std::max(0L, top - 2L * w);
  const long hi = std::max(0L, top - static_cast<long>(w));
  std::vector<TxId> starts;
  for (TxId t = 0; t < g.size(); ++t) {
    if (d[t] >= lo && d[t] <= hi) starts.push_back(t);
  }
  std::vector<double> out(g.size(), 0.0);
  auto walk = [&](auto&& self, TxId at, double prob) -> void {
    if (ch[at].empty()) {
      out[at] += prob;
      return;
    }
    double z = 0.0;
    for (TxId y : ch[at]) z += std::exp(alpha * cw[y]);
    for (TxId y : ch[at]) self(self, y, prob * std::exp(alpha * cw[y]) / z);
  };
  for (TxId s : starts) walk(walk, s, 1.0 / starts.size());
  return out;
}

/// C_s: probability that the reached tip has s in its verification path.
inline std::vector<double> confidence(const Dag& g, double alpha, std::uint32_t w) {
  const auto pi = tip_distribution(g, alpha, w);
  std::vector<double> out(g.size(), 0.0);
  for (TxId t = 0; t < g.size(); ++t) {
    if (pi[t] == 0.0) continue;
    for (TxId s : bfs_path(g, t)) out[s] += pi[t];
  }
  return out;
}

}  // namespace oracle
