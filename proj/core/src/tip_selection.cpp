#include "tanglesim/tip_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tanglesim/confidence.hpp"
#include "tanglesim/error.hpp"

namespace tanglesim {

WalkConfig WalkConfig::weighted(double alpha, std::uint32_t particles, std::uint32_t interval_w,
                                std::uint64_t seed) {
  WalkConfig cfg;
  cfg.alpha = alpha;
  cfg.particles = particles;
  cfg.interval_w = interval_w;
  cfg.rng_seed = seed;
  if (interval_w / 2 > 0) cfg.lazy_max_steps = interval_w / 2;
  return cfg;
}

WalkConfig WalkConfig::unweighted(std::uint32_t particles, std::uint32_t interval_w,
                                  std::uint64_t seed) {
  return weighted(0.0, particles, interval_w, seed);
}

void WalkConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(Errc::invalid_config, "alpha must be a finite value >= 0");
  }
  if (particles < 2) throw Error(Errc::invalid_config, "particles must be >= 2");
  if (interval_w < 1) throw Error(Errc::invalid_config, "interval_w must be >= 1");
  if (lazy_max_steps && *lazy_max_steps < 1) {
    throw Error(Errc::invalid_config, "lazy_max_steps must be positive when set");
  }
}

std::vector<TxId> Selection::parents() const {
  std::vector<TxId> out{tip1, tip2};
  if (tip3) out.push_back(*tip3);
  return out;
}

StartInterval start_interval(const Tangle& tangle, std::uint32_t interval_w) {
  const std::uint64_t d = tangle.max_depth();
  const std::uint64_t w = interval_w;
  StartInterval out;
  out.low = d >= 2 * w ? static_cast<std::uint32_t>(d - 2 * w) : 0;
  out.high = d >= w ? static_cast<std::uint32_t>(d - w) : 0;
  return out;
}

std::vector<TxId> start_candidates(const Tangle& tangle, std::uint32_t interval_w) {
  const auto range = start_interval(tangle, interval_w);
  std::vector<TxId> out;
  for (std::uint32_t d = range.low; d <= range.high; ++d) {
    const auto layer = tangle.at_depth(d);
    out.insert(out.end(), layer.begin(), layer.end());
  }
  std::ranges::sort(out);
  return out;
}

std::vector<double> transition_probabilities(const Tangle& tangle, TxId current, double alpha) {
  const auto kids = tangle.children(current);
  if (kids.empty()) throw Error(Errc::at_tip, "transaction " + std::to_string(current) + " is a tip");
  double top = -std::numeric_limits<double>::infinity();
  for (TxId y : kids) top = std::max(top, alpha * tangle.cumulative_weight(y));
  std::vector<double> p;
  p.reserve(kids.size());
  double sum = 0.0;
  for (TxId y : kids) {
    p.push_back(std::exp(alpha * tangle.cumulative_weight(y) - top));
    sum += p.back();
  }
  for (double& x : p) x /= sum;
  return p;
}

TxId walk_step(const Tangle& tangle, TxId current, double alpha, Rng& rng) {
  const auto kids = tangle.children(current);
  if (kids.empty()) throw Error(Errc::at_tip, "transaction " + std::to_string(current) + " is a tip");
  if (kids.size() == 1) return kids.front();
  // Same softmax as transition_probabilities, without the allocation.
  double top = -std::numeric_limits<double>::infinity();
  for (TxId y : kids) top = std::max(top, alpha * tangle.cumulative_weight(y));
  double sum = 0.0;
  for (TxId y : kids) sum += std::exp(alpha * tangle.cumulative_weight(y) - top);
  double u = rng.uniform() * sum;
  for (TxId y : kids) {
    u -= std::exp(alpha * tangle.cumulative_weight(y) - top);
    if (u < 0.0) return y;
  }
  return kids.back();
}

WalkResult single_walk(const Tangle& tangle, const WalkConfig& cfg, std::span<const TxId> starts,
                       Rng& rng) {
  WalkResult out;
  out.tip = starts[rng.index(starts.size())];
  while (!tangle.children(out.tip).empty()) {
    out.tip = walk_step(tangle, out.tip, cfg.alpha, rng);
    ++out.steps;
  }
  return out;
}

Selection uniform_select(const Tangle& tangle, const WalkConfig& cfg) {
  Rng rng(cfg.rng_seed);
  return uniform_select(tangle, rng);
}

Selection uniform_select(const Tangle& tangle, Rng& rng) {
  const auto tips = tangle.tips();
  if (tips.size() < 2) throw Error(Errc::not_enough_tips, "uniform selection needs >= 2 tips");
  std::vector<TxId> first(tips.begin(), tips.end());
  while (!first.empty()) {
    const auto i = rng.index(first.size());
    const TxId tip1 = first[i];
    std::vector<TxId> rest;
    for (TxId t : tips) {
      if (t != tip1) rest.push_back(t);
    }
    while (!rest.empty()) {
      const auto j = rng.index(rest.size());
      if (!tangle.conflicts(tip1, rest[j])) return Selection{tip1, rest[j], std::nullopt, 0};
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(j));
    }
    first.erase(first.begin() + static_cast<std::ptrdiff_t>(i));
  }
  throw Error(Errc::no_compatible_pair, "every pair of tips conflicts");
}

namespace {

struct Finished {
  TxId tip;
  std::uint32_t steps;
};

// Walkers advance round-robin, one step per turn, so the finish order is
// (steps, particle index).
std::vector<Finished> launch_round(const Tangle& tangle, const WalkConfig& cfg,
                                   std::span<const TxId> starts, Rng& rng) {
  struct Walker {
    TxId at;
    std::uint32_t steps = 0;
    bool done = false;
  };
  std::vector<Walker> walkers;
  walkers.reserve(cfg.particles);
  for (std::uint32_t i = 0; i < cfg.particles; ++i) {
    walkers.push_back({starts[rng.index(starts.size())]});
  }
  std::vector<Finished> finished;
  finished.reserve(cfg.particles);
  std::size_t active = walkers.size();
  while (active > 0) {
    for (auto& w : walkers) {
      if (w.done) continue;
      if (tangle.children(w.at).empty()) {
        w.done = true;
        --active;
        finished.push_back({w.at, w.steps});
      } else {
        w.at = walk_step(tangle, w.at, cfg.alpha, rng);
        ++w.steps;
      }
    }
  }
  return finished;
}

std::optional<std::pair<TxId, TxId>> first_compatible_pair(const Tangle& tangle,
                                                           std::span<const TxId> order,
                                                           bool tiebreak) {
  if (order.empty()) return std::nullopt;
  TxId tip1 = order.front();
  for (std::size_t i = 1; i < order.size(); ++i) {
    const TxId c = order[i];
    if (c == tip1) continue;
    if (!tangle.conflicts(tip1, c)) return std::pair{tip1, c};
    if (tiebreak && prefer_protective_path(tangle, tip1, c) == c) tip1 = c;
  }
  return std::nullopt;
}

}  // namespace

Selection weighted_walk_select(const Tangle& tangle, const WalkConfig& cfg) {
  Rng rng(cfg.rng_seed);
  return weighted_walk_select(tangle, cfg, rng);
}

Selection weighted_walk_select(const Tangle& tangle, const WalkConfig& cfg, Rng& rng) {
  cfg.validate();
  if (tangle.tips().size() < 2) throw Error(Errc::not_enough_tips, "selection needs >= 2 tips");
  const auto starts = start_candidates(tangle, cfg.interval_w);
  std::vector<TxId> order;
  std::uint32_t discarded = 0;
  for (std::uint32_t round = 0; round <= cfg.relaunch_rounds; ++round) {
    auto finished = launch_round(tangle, cfg, starts, rng);
    if (cfg.lazy_max_steps) {
      const auto limit = *cfg.lazy_max_steps;
      const auto survivors = std::ranges::count_if(finished, [&](const Finished& f) {
        return f.steps >= limit;
      });
      if (survivors >= 2) {
        discarded += static_cast<std::uint32_t>(finished.size()) - static_cast<std::uint32_t>(survivors);
        std::erase_if(finished, [&](const Finished& f) { return f.steps < limit; });
      }
    }
    for (const auto& f : finished) order.push_back(f.tip);
    if (auto pair = first_compatible_pair(tangle, order, cfg.incentive_tiebreak)) {
      return Selection{pair->first, pair->second, std::nullopt, discarded};
    }
  }
  throw Error(Errc::no_compatible_pair, "no compatible tip pair after relaunch rounds");
}

std::optional<TxId> select_left_behind_candidate(const Tangle& tangle,
                                                 LeftBehindThreshold threshold,
                                                 const ConfidenceReport& report,
                                                 std::span<const TxId> excluded) {
  return select_left_behind_candidate(tangle, threshold, report, excluded,
                                      ConfirmationRule::stranger());
}

std::optional<TxId> select_left_behind_candidate(const Tangle& tangle,
                                                 LeftBehindThreshold threshold,
                                                 const ConfidenceReport& report,
                                                 std::span<const TxId> excluded,
                                                 const ConfirmationRule& rule) {
  return select_left_behind_candidate(tangle, threshold, report, excluded, rule, nullptr);
}

std::optional<TxId> select_left_behind_candidate(const Tangle& tangle,
                                                 LeftBehindThreshold threshold,
                                                 const ConfidenceReport& report,
                                                 std::span<const TxId> excluded,
                                                 const ConfirmationRule& rule, Rng* ties) {
  struct Ranked {
    double average;
    std::uint64_t key;
    TxId tip;
  };
  std::vector<Ranked> ranked;
  std::vector<bool> seen(tangle.size(), false);
  std::vector<TxId> touched;
  std::vector<TxId> stack;
  for (TxId tip : tangle.left_behind_tips(threshold)) {
    if (std::ranges::find(excluded, tip) != excluded.end()) continue;
    // Ancestors of a confirmed transaction are confirmed as well, so the
    // search stops at the first confirmed transaction on every branch.
    double sum = 0.0;
    std::size_t count = 0;
    stack.assign(1, tip);
    seen[tip] = true;
    touched.assign(1, tip);
    while (!stack.empty()) {
      const TxId s = stack.back();
      stack.pop_back();
      const double c = report.confidence(s);
      if (c >= rule.threshold) continue;
      sum += c;
      ++count;
      for (TxId p : tangle.parents(s)) {
        if (!seen[p]) {
          seen[p] = true;
          touched.push_back(p);
          stack.push_back(p);
        }
      }
    }
    for (TxId s : touched) seen[s] = false;
    const std::uint64_t key = ties != nullptr ? ties->engine()() : tip;
    ranked.push_back({count == 0 ? 1.0 : sum / static_cast<double>(count), key, tip});
  }
  std::ranges::sort(ranked, [](const Ranked& a, const Ranked& b) {
    if (a.average != b.average) return a.average < b.average;
    return a.key != b.key ? a.key < b.key : a.tip < b.tip;
  });
  for (const auto& r : ranked) {
    const bool clash = std::ranges::any_of(excluded, [&](TxId e) { return tangle.conflicts(r.tip, e); });
    if (!clash) return r.tip;
  }
  return std::nullopt;
}

Selection g_iota_select(const Tangle& tangle, const WalkConfig& cfg, LeftBehindThreshold threshold,
                        const ConfidenceReport& report) {
  Rng rng(cfg.rng_seed);
  return g_iota_select(tangle, cfg, threshold, report, rng);
}

Selection g_iota_select(const Tangle& tangle, const WalkConfig& cfg, LeftBehindThreshold threshold,
                        const ConfidenceReport& report, Rng& rng) {
  return g_iota_select(
      tangle, cfg, threshold, [&report] { return report; }, rng);
}

Selection g_iota_select(const Tangle& tangle, const WalkConfig& cfg, LeftBehindThreshold threshold,
                        const std::function<ConfidenceReport()>& make_report, Rng& rng) {
  Selection sel = weighted_walk_select(tangle, cfg, rng);
  if (tangle.left_behind_tips(threshold).empty()) return sel;
  const ConfidenceReport report = make_report();
  const TxId chosen[] = {sel.tip1, sel.tip2};
  sel.tip3 = select_left_behind_candidate(tangle, threshold, report, chosen,
                                          ConfirmationRule::stranger(), &rng);
  return sel;
}

TxId prefer_protective_path(const Tangle& tangle, TxId a, TxId b) {
  if (!tangle.conflicts(a, b)) {
    throw Error(Errc::not_conflicting, "tie-break applies to conflicting tips only");
  }
  const auto ca = tangle.protective_count(a);
  const auto cb = tangle.protective_count(b);
  if (ca != cb) return ca > cb ? a : b;
  return std::min(a, b);
}

}  // namespace tanglesim
