#include "tanglesim/confidence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <thread>

#include <json.hpp>

#include "tanglesim/error.hpp"

namespace tanglesim {

ConfidenceReport::ConfidenceReport(std::size_t snapshot_len, std::uint64_t samples,
                                   std::vector<TipHits> tip_hits, std::vector<double> confidence,
                                   WalkConfig selector)
    : snapshot_len_(snapshot_len),
      samples_(samples),
      tip_hits_(std::move(tip_hits)),
      confidence_(std::move(confidence)),
      selector_(selector) {}

std::uint64_t ConfidenceReport::hits(TxId tip) const {
  auto it = std::ranges::lower_bound(tip_hits_, tip, {}, &TipHits::id);
  return it != tip_hits_.end() && it->id == tip ? it->hits : 0;
}

double ConfidenceReport::confidence(TxId id) const {
  if (id >= confidence_.size()) {
    throw Error(Errc::unknown_tx, "transaction " + std::to_string(id) + " not in report");
  }
  return confidence_[id];
}

void ConfirmationRule::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(Errc::invalid_config, "confirmation threshold must lie in (0, 1]");
  }
}

namespace {

constexpr std::uint64_t kChunk = 4096;

void run_chunk(const Tangle& tangle, const WalkConfig& cfg, std::span<const TxId> starts,
               std::uint64_t seed, std::uint64_t chunk, std::uint64_t n,
               std::vector<std::uint64_t>& hits) {
  Rng rng(derive_seed(seed, chunk));
  const std::uint64_t begin = chunk * kChunk;
  const std::uint64_t end = std::min(n, begin + kChunk);
  for (std::uint64_t r = begin; r < end; ++r) ++hits[single_walk(tangle, cfg, starts, rng).tip];
}

}  // namespace

ConfidenceReport estimate_confidence(const Tangle& tangle, const WalkConfig& cfg, std::uint64_t n,
                                     std::uint64_t seed, unsigned workers) {
  if (n < 1) throw Error(Errc::invalid_config, "confidence needs n >= 1 runs");
  if (tangle.tips().empty()) throw Error(Errc::not_enough_tips, "tangle has no tips");
  if (!(cfg.alpha >= 0.0)) throw Error(Errc::invalid_config, "alpha must be >= 0");
  const auto starts = start_candidates(tangle, cfg.interval_w);
  const std::uint64_t chunks = (n + kChunk - 1) / kChunk;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(chunks)));

  std::vector<std::vector<std::uint64_t>> partial(workers,
                                                  std::vector<std::uint64_t>(tangle.size(), 0));
  auto work = [&](unsigned w) {
    for (std::uint64_t c = w; c < chunks; c += workers) {
      run_chunk(tangle, cfg, starts, seed, c, n, partial[w]);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  std::vector<TipHits> tip_hits;
  for (TxId id = 0; id < tangle.size(); ++id) {
    std::uint64_t total = 0;
    for (const auto& p : partial) total += p[id];
    if (total > 0) tip_hits.push_back({id, total});
  }
  auto confidence = confidence_from_hits(tangle, tip_hits, n);
  return ConfidenceReport(tangle.size(), n, std::move(tip_hits), std::move(confidence), cfg);
}

std::vector<double> confidence_from_hits(const Tangle& tangle, std::span<const TipHits> hits,
                                         std::uint64_t n) {
  // mask[s] holds the hit tips whose verification path contains s.
  const std::size_t words = (hits.size() + 63) / 64;
  const std::size_t size = tangle.size();
  std::vector<std::uint64_t> mask(size * words, 0);
  for (std::size_t j = 0; j < hits.size(); ++j) {
    mask[hits[j].id * words + j / 64] |= std::uint64_t{1} << (j % 64);
  }
  for (std::size_t s = size; s-- > 0;) {
    for (TxId c : tangle.children(static_cast<TxId>(s))) {
      for (std::size_t w = 0; w < words; ++w) mask[s * words + w] |= mask[c * words + w];
    }
  }
  std::vector<double> out(size, 0.0);
  for (std::size_t s = 0; s < size; ++s) {
    std::uint64_t total = 0;
    for (std::size_t w = 0; w < words; ++w) {
      for (std::uint64_t bits = mask[s * words + w]; bits != 0; bits &= bits - 1) {
        total += hits[w * 64 + static_cast<std::size_t>(std::countr_zero(bits))].hits;
      }
    }
    out[s] = static_cast<double>(total) / static_cast<double>(n);
  }
  return out;
}

bool is_confirmed(const ConfidenceReport& report, TxId id, const ConfirmationRule& rule) {
  rule.validate();
  return report.confidence(id) >= rule.threshold;
}

std::vector<TxId> left_behind_closure(const Tangle& tangle, LeftBehindThreshold threshold) {
  // A transaction escapes the closure when some non-left-behind tip approves it.
  const std::size_t size = tangle.size();
  std::vector<bool> alive(size, false);
  for (std::size_t s = size; s-- > 0;) {
    const auto id = static_cast<TxId>(s);
    if (tangle.is_tip(id)) {
      alive[s] = !tangle.is_left_behind(id, threshold);
    } else {
      for (TxId c : tangle.children(id)) {
        if (alive[c]) {
          alive[s] = true;
          break;
        }
      }
    }
  }
  std::vector<TxId> out;
  for (std::size_t s = 0; s < size; ++s) {
    if (!alive[s]) out.push_back(static_cast<TxId>(s));
  }
  return out;
}

double confidence_fairness(const Tangle& tangle, LeftBehindThreshold threshold) {
  const auto closure = left_behind_closure(tangle, threshold);
  return 1.0 - static_cast<double>(closure.size()) / static_cast<double>(tangle.size());
}

std::vector<double> exact_tip_distribution(const Tangle& tangle, const WalkConfig& cfg) {
  const std::size_t size = tangle.size();
  if (size > kOracleMaxEdges + 1) throw Error(Errc::too_large, "tangle too large for the oracle");

  const std::int64_t d = tangle.max_depth();
  const std::int64_t w = cfg.interval_w;
  const std::int64_t low = std::max<std::int64_t>(0, d - 2 * w);
  const std::int64_t high = std::max<std::int64_t>(0, d - w);
  std::vector<TxId> starts;
  for (TxId id = 0; id < size; ++id) {
    const std::int64_t depth = tangle.depth(id);
    if (depth >= low && depth <= high) starts.push_back(id);
  }

  // absorb[s][t]: probability that a walk at s ends at tip t.
  std::vector<std::vector<double>> absorb(size, std::vector<double>(size, 0.0));
  for (std::size_t s = size; s-- > 0;) {
    const auto kids = tangle.children(static_cast<TxId>(s));
    if (kids.empty()) {
      absorb[s][s] = 1.0;
      continue;
    }
    double top = -std::numeric_limits<double>::infinity();
    for (TxId y : kids) top = std::max(top, cfg.alpha * static_cast<double>(tangle.cumulative_weight(y)));
    double z = 0.0;
    std::vector<double> weight;
    for (TxId y : kids) {
      weight.push_back(std::exp(cfg.alpha * static_cast<double>(tangle.cumulative_weight(y)) - top));
      z += weight.back();
    }
    for (std::size_t k = 0; k < kids.size(); ++k) {
      for (std::size_t t = 0; t < size; ++t) absorb[s][t] += weight[k] / z * absorb[kids[k]][t];
    }
  }
  std::vector<double> out(size, 0.0);
  for (TxId s : starts) {
    for (std::size_t t = 0; t < size; ++t) out[t] += absorb[s][t] / static_cast<double>(starts.size());
  }
  return out;
}

std::vector<double> exact_confidence_oracle(const Tangle& tangle, const WalkConfig& cfg) {
  if (tangle.edge_count() > kOracleMaxEdges) {
    throw Error(Errc::too_large, "tangle has more than 200 edges");
  }
  const auto pi = exact_tip_distribution(tangle, cfg);
  const std::size_t size = tangle.size();
  std::vector<double> out(size, 0.0);
  std::vector<bool> seen(size);
  for (TxId t = 0; t < size; ++t) {
    if (pi[t] == 0.0) continue;
    std::fill(seen.begin(), seen.end(), false);
    std::vector<TxId> stack{t};
    seen[t] = true;
    while (!stack.empty()) {
      const TxId s = stack.back();
      stack.pop_back();
      out[s] += pi[t];
      for (TxId p : tangle.parents(s)) {
        if (!seen[p]) {
          seen[p] = true;
          stack.push_back(p);
        }
      }
    }
  }
  return out;
}

std::string report_to_json(const ConfidenceReport& report) {
  nlohmann::ordered_json j;
  j["snapshot_len"] = report.snapshot_len();
  j["samples"] = report.samples();
  j["alpha"] = report.selector().alpha;
  j["tips"] = nlohmann::ordered_json::array();
  for (const auto& h : report.tip_hits()) j["tips"].push_back({{"id", h.id}, {"hits", h.hits}});
  j["confidence"] = nlohmann::ordered_json::array();
  const auto c = report.confidences();
  for (std::size_t id = 0; id < c.size(); ++id) j["confidence"].push_back({{"id", id}, {"c", c[id]}});
  return j.dump();
}

ConfidenceReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    WalkConfig selector;
    selector.alpha = j.at("alpha").get<double>();
    std::vector<TipHits> hits;
    for (const auto& t : j.at("tips")) hits.push_back({t.at("id").get<TxId>(), t.at("hits").get<std::uint64_t>()});
    const auto len = j.at("snapshot_len").get<std::size_t>();
    std::vector<double> confidence(len, 0.0);
    for (const auto& c : j.at("confidence")) {
      const auto id = c.at("id").get<std::size_t>();
      if (id >= len) throw Error(Errc::invalid_config, "confidence id beyond snapshot_len");
      confidence[id] = c.at("c").get<double>();
    }
    return ConfidenceReport(len, j.at("samples").get<std::uint64_t>(), std::move(hits),
                            std::move(confidence), selector);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, std::string("malformed report: ") + e.what());
  }
}

}  // namespace tanglesim
