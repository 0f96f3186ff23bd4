#include "tanglesim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "tanglesim/error.hpp"

namespace tanglesim {

namespace {

// Independent RNG streams derived from the scenario seed.
enum Stream : std::uint64_t {
  kArrivals = 1,
  kAgents = 2,
  kAttacker = 3,
  kBranches = 4,
  kReports = 5,
  kIssuerReports = 0x1000,
};

void scenario_error(const std::string& what) { throw Error(Errc::invalid_scenario, what); }

std::size_t issuer_index(Issuer issuer) { return static_cast<std::size_t>(issuer); }

}  // namespace

void SimScenario::validate() const {
  if (duration < 1) scenario_error("duration must be >= 1 tick");
  if (!(arrival_rate > 0.0) || !std::isfinite(arrival_rate)) scenario_error("arrival_rate must be > 0");
  const double parts[] = {mix.iota, mix.giota, mix.lazy, mix.speculative};
  double sum = 0.0;
  for (double p : parts) {
    if (!(p >= 0.0) || !std::isfinite(p)) scenario_error("agent mix fractions must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) scenario_error("agent mix fractions must sum to 1");
  if (d_s < 1) scenario_error("d_s must be >= 1");
  if (sample_interval < 1) scenario_error("sample_interval must be >= 1");
  if (giota_confidence_samples < 1) scenario_error("giota_confidence_samples must be >= 1");
  if (branch_walks < 1) scenario_error("branch_walks must be >= 1");
  if (report_interval > 0 && report_samples < 1) scenario_error("report_samples must be >= 1");
  if (attacker && attacker->start_tick < 1) scenario_error("attacker start_tick must be >= 1");
  try {
    walk.validate();
    if (supervision) supervision->validate(LeftBehindThreshold(d_s));
  } catch (const Error& e) {
    scenario_error(e.what());
  }
}

std::optional<int> branch_of(const Tangle& tangle, TxId id, const AttackState& attack) {
  if (!attack.variants) return std::nullopt;
  for (const auto& label : tangle.path_labels(id)) {
    if (label.set == attack.conflict_set) return static_cast<int>(label.variant);
  }
  return std::nullopt;
}

BranchWeights branch_weights(const Tangle& tangle, const AttackState& attack) {
  if (!attack.variants) return {};
  return {tangle.cumulative_weight((*attack.variants)[0]),
          tangle.cumulative_weight((*attack.variants)[1])};
}

std::array<double, 2> branch_probabilities(const Tangle& tangle, const AttackState& attack,
                                           const WalkConfig& cfg, std::uint64_t walks, Rng& rng) {
  std::array<double, 2> p{0.0, 0.0};
  if (!attack.variants || walks == 0) return p;
  const auto starts = start_candidates(tangle, cfg.interval_w);
  std::array<std::uint64_t, 2> hits{0, 0};
  for (std::uint64_t i = 0; i < walks; ++i) {
    const auto end = single_walk(tangle, cfg, starts, rng);
    if (auto b = branch_of(tangle, end.tip, attack)) ++hits[static_cast<std::size_t>(*b)];
  }
  for (std::size_t b = 0; b < 2; ++b) p[b] = static_cast<double>(hits[b]) / static_cast<double>(walks);
  return p;
}

std::array<TxId, 2> plant_conflict_pair(Tangle& tangle, const WalkConfig& cfg, Tick tick,
                                        Tick reveal_delay, std::uint32_t conflict_set, Rng& rng) {
  std::vector<TxId> base;
  if (tangle.tips().size() >= 2) {
    try {
      base = weighted_walk_select(tangle, cfg, rng).parents();
    } catch (const Error&) {
      base = uniform_select(tangle, rng).parents();
    }
  } else {
    const TxId tip = tangle.tips().front();
    base = tip == kGenesis ? std::vector<TxId>{kGenesis}
                           : std::vector<TxId>{tip, tangle.parents(tip).front()};
  }
  std::array<TxId, 2> out{};
  for (std::uint32_t v = 0; v < 2; ++v) {
    out[v] = tangle.append(base, ConflictLabel{conflict_set, v}, Issuer::attacker, tick,
                           tick + reveal_delay);
  }
  return out;
}

std::vector<std::vector<TxId>> splitting_attacker_policy(const Tangle& view,
                                                         const AttackerConfig& cfg,
                                                         const AttackState& attack, Rng& rng) {
  std::vector<std::vector<TxId>> out;
  if (!attack.variants) return out;
  const auto w = branch_weights(view, attack);
  const std::uint32_t delta = w.first > w.second ? w.first - w.second : w.second - w.first;
  if (delta <= cfg.balance_band) return out;
  const int lighter = w.first < w.second ? 0 : 1;
  const TxId variant = (*attack.variants)[static_cast<std::size_t>(lighter)];

  std::vector<TxId> tips;
  for (TxId t : view.tips()) {
    if (branch_of(view, t, attack) == lighter) tips.push_back(t);
  }
  const std::uint32_t n = std::min(cfg.budget, delta);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (tips.size() >= 2) {
      const auto a = rng.index(tips.size());
      auto b = rng.index(tips.size() - 1);
      if (b >= a) ++b;
      out.push_back({tips[a], tips[b]});
    } else if (tips.front() != variant) {
      out.push_back({tips.front(), variant});
    } else {
      out.push_back({variant, view.parents(variant).front()});
    }
  }
  return out;
}

bool is_buried(const Tangle& view, TxId id) {
  return std::ranges::any_of(view.children(id), [&](TxId c) { return !view.is_tip(c); });
}

std::optional<std::vector<TxId>> lazy_policy(const Tangle& view, LeftBehindThreshold threshold,
                                             Rng& rng) {
  const std::uint32_t d = view.max_depth();
  if (d < threshold.value()) return std::nullopt;
  std::vector<TxId> pool;
  for (std::uint32_t depth = 0; depth <= d - threshold.value(); ++depth) {
    for (TxId id : view.at_depth(depth)) {
      if (is_buried(view, id)) pool.push_back(id);
    }
  }
  if (pool.size() < 2) return std::nullopt;
  std::ranges::sort(pool);
  const TxId first = pool[rng.index(pool.size())];
  std::erase_if(pool, [&](TxId id) { return id == first || view.conflicts(first, id); });
  if (pool.empty()) return std::nullopt;
  return std::vector<TxId>{first, pool[rng.index(pool.size())]};
}

std::optional<Selection> speculative_policy(const Tangle& view, const WalkConfig& cfg, Rng& rng) {
  if (view.tips().size() < 2) return std::nullopt;
  Selection sel;
  try {
    sel = weighted_walk_select(view, cfg, rng);
  } catch (const Error& e) {
    if (e.code() != Errc::no_compatible_pair) throw;
    try {
      sel = uniform_select(view, rng);
    } catch (const Error& u) {
      if (u.code() != Errc::no_compatible_pair) throw;
      return std::nullopt;
    }
  }
  std::vector<TxId> pool;
  for (TxId id = 0; id < view.size(); ++id) {
    if (is_buried(view, id) && !view.conflicts(id, sel.tip1) && !view.conflicts(id, sel.tip2)) {
      pool.push_back(id);
    }
  }
  if (pool.empty()) return std::nullopt;
  sel.tip3 = pool[rng.index(pool.size())];
  return sel;
}

namespace {

// Parents for an honest transaction when fewer than two tips are visible.
std::vector<TxId> bootstrap_parents(const Tangle& view) {
  const TxId tip = view.tips().front();
  if (tip == kGenesis) return {kGenesis};
  return {tip, view.parents(tip).front()};
}

class Simulator {
 public:
  explicit Simulator(const SimScenario& sc)
      : sc_(sc),
        threshold_(sc.d_s),
        arrivals_(derive_seed(sc.seed, kArrivals)),
        agents_(derive_seed(sc.seed, kAgents)),
        attacker_(derive_seed(sc.seed, kAttacker)),
        branches_(derive_seed(sc.seed, kBranches)) {
    giota_cfg_ = sc.walk;
    giota_cfg_.incentive_tiebreak = true;
    result_.fates.resize(1);
  }

  SimResult run() {
    for (Tick tick = 1; tick <= sc_.duration; ++tick) step(tick);
    result_.tangle = truth_;
    return std::move(result_);
  }

 private:
  void step(Tick tick) {
    TickLoad load{tick, 0, 0, 0};
    reveal(tick);
    load.left_behind = view_.left_behind_tips(threshold_).size();
    discover(tick, load);

    if (sc_.attacker && tick >= sc_.attacker->start_tick) attack(tick);

    const std::uint64_t n = arrivals_.poisson(sc_.arrival_rate);
    load.arrivals = n;
    result_.stats.arrivals += n;
    for (std::uint64_t i = 0; i < n; ++i) {
      reveal(tick);
      discover(tick, load);
      arrive(tick);
    }
    reveal(tick);
    result_.loads.push_back(load);

    if (tick % sc_.sample_interval == 0 || tick == sc_.duration) sample(tick);
    if (sc_.report_interval > 0 && tick % sc_.report_interval == 0) {
      result_.reports.push_back(
          {tick, estimate_confidence(truth_, sc_.walk, sc_.report_samples,
                                     derive_seed(sc_.seed, kReports * 1'000'003 + tick))});
    }
  }

  void discover(Tick tick, TickLoad& load) {
    for (TxId t : view_.left_behind_tips(threshold_)) {
      if (!result_.fates[t].discovered) {
        result_.fates[t].discovered = tick;
        ++load.discoveries;
      }
    }
  }

  void attack(Tick tick) {
    auto& state = result_.attack;
    if (!state.variants) {
      const auto pair = plant_conflict_pair(truth_, sc_.walk, tick, sc_.reveal_delay,
                                            state.conflict_set, attacker_);
      state.variants = pair;
      for (TxId v : pair) record(tick, v, truth_.max_depth());
      return;
    }
    // The attacker sees the true tangle, revealed or not.
    for (const auto& parents : splitting_attacker_policy(truth_, *sc_.attacker, state, attacker_)) {
      const TxId id = truth_.append(parents, std::nullopt, Issuer::attacker, tick,
                                    tick + sc_.reveal_delay);
      record(tick, id, truth_.max_depth());
    }
  }

  Issuer draw_agent() {
    const std::pair<double, Issuer> shares[] = {{sc_.mix.iota, Issuer::iota},
                                                {sc_.mix.giota, Issuer::giota},
                                                {sc_.mix.lazy, Issuer::lazy},
                                                {sc_.mix.speculative, Issuer::speculative}};
    double u = agents_.uniform();
    Issuer last = Issuer::iota;
    for (const auto& [share, issuer] : shares) {
      if (share <= 0.0) continue;
      if (u < share) return issuer;
      u -= share;
      last = issuer;
    }
    return last;
  }

  std::vector<TxId> honest_parents(Issuer issuer) {
    if (view_.tips().size() < 2) {
      ++result_.stats.fallbacks;
      return bootstrap_parents(view_);
    }
    const std::uint64_t report_seed =
        derive_seed(sc_.seed, kIssuerReports + result_.fates.size());
    auto make_report = [&] {
      return estimate_confidence(view_, sc_.walk, sc_.giota_confidence_samples, report_seed);
    };
    Selection sel;
    try {
      if (issuer == Issuer::giota) return g_iota_select(view_, giota_cfg_, threshold_, make_report, agents_).parents();
      return weighted_walk_select(view_, sc_.walk, agents_).parents();
    } catch (const Error& e) {
      if (e.code() != Errc::no_compatible_pair) throw;
    }
    ++result_.stats.fallbacks;
    try {
      sel = uniform_select(view_, agents_);
    } catch (const Error& e) {
      if (e.code() != Errc::no_compatible_pair) throw;
      return {view_.tips().front(), view_.parents(view_.tips().front()).front()};
    }
    if (issuer == Issuer::giota && !view_.left_behind_tips(threshold_).empty()) {
      const TxId chosen[] = {sel.tip1, sel.tip2};
      sel.tip3 = select_left_behind_candidate(view_, threshold_, make_report(), chosen,
                                              ConfirmationRule::stranger(), &agents_);
    }
    return sel.parents();
  }

  void arrive(Tick tick) {
    const Issuer issuer = draw_agent();
    std::vector<TxId> parents;
    if (issuer == Issuer::lazy) {
      auto p = lazy_policy(view_, threshold_, agents_);
      if (!p) {
        ++result_.stats.skipped;
        return;
      }
      parents = std::move(*p);
    } else if (issuer == Issuer::speculative) {
      auto sel = speculative_policy(view_, sc_.walk, agents_);
      if (!sel) {
        ++result_.stats.skipped;
        return;
      }
      parents = sel->parents();
    } else {
      parents = honest_parents(issuer);
    }
    const TxId id = truth_.append(parents, std::nullopt, issuer, tick, tick + sc_.reveal_delay);
    record(tick, id, view_.max_depth());
  }

  // Trace row plus first-approval bookkeeping; `seen_depth` is D in the
  // issuer's view.
  void record(Tick tick, TxId id, std::uint32_t seen_depth) {
    const auto& tx = truth_.tx(id);
    const auto parents = tx.parents();
    TraceEvent ev{tick, id, tx.issuer(), parents[0], std::nullopt, std::nullopt};
    if (parents.size() > 1) ev.tip2 = parents[1];
    if (parents.size() > 2) ev.tip3 = parents[2];
    result_.trace.push_back(ev);
    ++result_.stats.issued[issuer_index(tx.issuer())];
    result_.fates.resize(truth_.size());
    for (TxId p : parents) {
      auto& fate = result_.fates[p];
      if (!fate.approved) {
        fate.approved = tick;
        const std::uint32_t d = truth_.depth(p);
        fate.approval_lag = seen_depth > d ? seen_depth - d : 0;
      }
    }
  }

  void reveal(Tick tick) {
    while (view_.size() < truth_.size()) {
      const auto& tx = truth_.tx(static_cast<TxId>(view_.size()));
      if (tx.reveal_time() > tick) break;
      if (sc_.supervision) {
        result_.verdicts.push_back(audit_incoming(view_, tx, *sc_.supervision, threshold_));
      }
      view_.append(tx.parents(), tx.conflict(), tx.issuer(), tx.arrival_time(), tx.reveal_time());
    }
  }

  void sample(Tick tick) {
    const auto w = branch_weights(truth_, result_.attack);
    result_.metrics.push_back({tick, truth_.size(), truth_.tips().size(),
                               truth_.left_behind_tips(threshold_).size(),
                               confidence_fairness(truth_, threshold_), truth_.max_depth(),
                               w.first, w.second});
    if (result_.attack.variants) {
      const auto p = branch_probabilities(truth_, result_.attack, sc_.walk, sc_.branch_walks, branches_);
      result_.branches.push_back({tick, w.first, w.second, p[0], p[1]});
    }
  }

  const SimScenario& sc_;
  LeftBehindThreshold threshold_;
  WalkConfig giota_cfg_;
  Rng arrivals_;
  Rng agents_;
  Rng attacker_;
  Rng branches_;
  Tangle truth_;
  Tangle view_;
  SimResult result_;
};

}  // namespace

SimResult run_scenario(const SimScenario& scenario) {
  scenario.validate();
  return Simulator(scenario).run();
}

void write_trace_csv(std::ostream& out, std::span<const TraceEvent> trace) {
  out << "tick,tx,issuer,tip1,tip2,tip3\n";
  for (const auto& e : trace) {
    out << e.tick << ',' << e.tx << ',' << issuer_name(e.issuer) << ',' << e.tip1 << ',';
    if (e.tip2) out << *e.tip2;
    out << ',';
    if (e.tip3) out << *e.tip3;
    out << '\n';
  }
}

namespace {

void put_real(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  out << buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, std::span<const MetricsSample> metrics) {
  out << "tick,n_tx,n_tips,n_left_behind,cf,depth,branch1_w,branch2_w\n";
  for (const auto& m : metrics) {
    out << m.tick << ',' << m.n_tx << ',' << m.n_tips << ',' << m.n_left_behind << ',';
    put_real(out, m.cf);
    out << ',' << m.depth << ',' << m.branch1_w << ',' << m.branch2_w << '\n';
  }
}

void write_branches_csv(std::ostream& out, std::span<const BranchSample> branches) {
  out << "tick,branch1_w,branch2_w,p1,p2\n";
  for (const auto& b : branches) {
    out << b.tick << ',' << b.branch1_w << ',' << b.branch2_w << ',';
    put_real(out, b.p1);
    out << ',';
    put_real(out, b.p2);
    out << '\n';
  }
}

std::optional<Tick> collapse_tick(std::span<const BranchSample> branches, double level) {
  for (const auto& b : branches) {
    // Traffic that reaches neither branch has settled on a history without
    // the double spend: the split is dead as well.
    if (b.p1 > level || b.p2 > level || 1.0 - b.p1 - b.p2 > level) return b.tick;
  }
  return std::nullopt;
}

}  // namespace tanglesim
