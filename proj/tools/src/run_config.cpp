#include "tanglesim/cli/run_config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include "tanglesim/error.hpp"

namespace tanglesim::cli {

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw Error(Errc::invalid_config,
              std::string(key) + "=" + std::string(value) + ": " + std::string(why));
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T to_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end || value.empty()) bad(key, value, "not a valid number");
  return out;
}

std::uint32_t to_u32(std::string_view key, std::string_view value) {
  const auto v = to_number<std::uint64_t>(key, value);
  if (v > std::numeric_limits<std::uint32_t>::max()) bad(key, value, "out of range");
  return static_cast<std::uint32_t>(v);
}

bool to_switch(std::string_view key, std::string_view value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  bad(key, value, "expected on or off");
}

std::string real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string alphas_text(const std::vector<double>& alphas) {
  std::string out;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (i > 0) out += ',';
    out += real(alphas[i]);
  }
  return out;
}

std::optional<Format> parse_format(std::string_view name) {
  for (auto f : {Format::csv, Format::json, Format::dot}) {
    if (format_name(f) == name) return f;
  }
  return std::nullopt;
}

AttackerConfig& attacker(RunConfig& c) {
  if (!c.scenario.attacker) c.scenario.attacker.emplace();
  return *c.scenario.attacker;
}

SupervisionConfig& supervision(RunConfig& c) {
  if (!c.scenario.supervision) c.scenario.supervision.emplace();
  return *c.scenario.supervision;
}

struct Key {
  std::string_view name;
  std::function<void(RunConfig&, std::string_view, std::string_view)> set;
  // Empty result: the key is omitted (its section is switched off).
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

const std::vector<Key>& keys() {
  using R = RunConfig;
  using V = std::string_view;
  using O = std::optional<std::string>;
  static const std::vector<Key> table = {
      {"duration", [](R& c, V k, V v) { c.scenario.duration = to_number<std::uint64_t>(k, v); },
       [](const R& c) -> O { return std::to_string(c.scenario.duration); }},
      {"arrival_rate", [](R& c, V k, V v) { c.scenario.arrival_rate = to_number<double>(k, v); },
       [](const R& c) -> O { return real(c.scenario.arrival_rate); }},
      {"mix.iota", [](R& c, V k, V v) { c.scenario.mix.iota = to_number<double>(k, v); },
       [](const R& c) -> O { return real(c.scenario.mix.iota); }},
      {"mix.giota", [](R& c, V k, V v) { c.scenario.mix.giota = to_number<double>(k, v); },
       [](const R& c) -> O { return real(c.scenario.mix.giota); }},
      {"mix.lazy", [](R& c, V k, V v) { c.scenario.mix.lazy = to_number<double>(k, v); },
       [](const R& c) -> O { return real(c.scenario.mix.lazy); }},
      {"mix.speculative",
       [](R& c, V k, V v) { c.scenario.mix.speculative = to_number<double>(k, v); },
       [](const R& c) -> O { return real(c.scenario.mix.speculative); }},
      {"walk.alpha", [](R& c, V k, V v) { c.scenario.walk.alpha = to_number<double>(k, v); },
       [](const R& c) -> O { return real(c.scenario.walk.alpha); }},
      {"walk.particles", [](R& c, V k, V v) { c.scenario.walk.particles = to_u32(k, v); },
       [](const R& c) -> O { return std::to_string(c.scenario.walk.particles); }},
      {"walk.interval_w", [](R& c, V k, V v) { c.scenario.walk.interval_w = to_u32(k, v); },
       [](const R& c) -> O { return std::to_string(c.scenario.walk.interval_w); }},
      {"walk.lazy_max_steps",
       [](R& c, V k, V v) {
         if (v == "none") {
           c.scenario.walk.lazy_max_steps.reset();
         } else {
           c.scenario.walk.lazy_max_steps = to_u32(k, v);
         }
       },
       [](const R& c) -> O {
         const auto& l = c.scenario.walk.lazy_max_steps;
         return l ? std::to_string(*l) : std::string("none");
       }},
      {"walk.relaunch_rounds",
       [](R& c, V k, V v) { c.scenario.walk.relaunch_rounds = to_u32(k, v); },
       [](const R& c) -> O { return std::to_string(c.scenario.walk.relaunch_rounds); }},
      {"d_s", [](R& c, V k, V v) { c.scenario.d_s = to_u32(k, v); },
       [](const R& c) -> O { return std::to_string(c.scenario.d_s); }},
      {"reveal_delay",
       [](R& c, V k, V v) { c.scenario.reveal_delay = to_number<std::uint64_t>(k, v); },
       [](const R& c) -> O { return std::to_string(c.scenario.reveal_delay); }},
      {"seed", [](R& c, V k, V v) { c.scenario.seed = to_number<std::uint64_t>(k, v); },
       [](const R& c) -> O { return std::to_string(c.scenario.seed); }},
      {"sample_interval",
       [](R& c, V k, V v) { c.scenario.sample_interval = to_number<std::uint64_t>(k, v); },
       [](const R& c) -> O { return std::to_string(c.scenario.sample_interval); }},
      {"giota_confidence_samples",
       [](R& c, V k, V v) {
         c.scenario.giota_confidence_samples = to_number<std::uint64_t>(k, v);
       },
       [](const R& c) -> O { return std::to_string(c.scenario.giota_confidence_samples); }},
      {"branch_walks",
       [](R& c, V k, V v) { c.scenario.branch_walks = to_number<std::uint64_t>(k, v); },
       [](const R& c) -> O { return std::to_string(c.scenario.branch_walks); }},
      {"report_interval",
       [](R& c, V k, V v) { c.scenario.report_interval = to_number<std::uint64_t>(k, v); },
       [](const R& c) -> O { return std::to_string(c.scenario.report_interval); }},
      {"report_samples",
       [](R& c, V k, V v) { c.scenario.report_samples = to_number<std::uint64_t>(k, v); },
       [](const R& c) -> O { return std::to_string(c.scenario.report_samples); }},
      {"attacker",
       [](R& c, V k, V v) {
         if (to_switch(k, v)) {
           attacker(c);
         } else {
           c.scenario.attacker.reset();
         }
       },
       [](const R& c) -> O { return std::string(c.scenario.attacker ? "on" : "off"); }},
      {"attacker.start_tick",
       [](R& c, V k, V v) { attacker(c).start_tick = to_number<std::uint64_t>(k, v); },
       [](const R& c) -> O {
         if (!c.scenario.attacker) return std::nullopt;
         return std::to_string(c.scenario.attacker->start_tick);
       }},
      {"attacker.budget", [](R& c, V k, V v) { attacker(c).budget = to_u32(k, v); },
       [](const R& c) -> O {
         if (!c.scenario.attacker) return std::nullopt;
         return std::to_string(c.scenario.attacker->budget);
       }},
      {"attacker.balance_band", [](R& c, V k, V v) { attacker(c).balance_band = to_u32(k, v); },
       [](const R& c) -> O {
         if (!c.scenario.attacker) return std::nullopt;
         return std::to_string(c.scenario.attacker->balance_band);
       }},
      {"supervision",
       [](R& c, V k, V v) {
         if (to_switch(k, v)) {
           supervision(c);
         } else {
           c.scenario.supervision.reset();
         }
       },
       [](const R& c) -> O { return std::string(c.scenario.supervision ? "on" : "off"); }},
      {"supervision.path_tolerance",
       [](R& c, V k, V v) { supervision(c).path_tolerance = to_u32(k, v); },
       [](const R& c) -> O {
         if (!c.scenario.supervision) return std::nullopt;
         return std::to_string(c.scenario.supervision->path_tolerance);
       }},
      {"supervision.punishment_horizon",
       [](R& c, V k, V v) {
         supervision(c).punishment_horizon = to_number<std::uint64_t>(k, v);
       },
       [](const R& c) -> O {
         if (!c.scenario.supervision) return std::nullopt;
         return std::to_string(c.scenario.supervision->punishment_horizon);
       }},
      {"supervision.low_conf",
       [](R& c, V k, V v) { supervision(c).low_conf = to_number<double>(k, v); },
       [](const R& c) -> O {
         if (!c.scenario.supervision) return std::nullopt;
         return real(c.scenario.supervision->low_conf);
       }},
      {"out", [](R& c, V, V v) { c.out_dir = std::string(v); },
       [](const R& c) -> O { return c.out_dir; }},
      {"format",
       [](R& c, V k, V v) {
         const auto f = parse_format(v);
         if (!f) bad(k, v, "expected csv, json or dot");
         c.format = *f;
       },
       [](const R& c) -> O { return std::string(format_name(c.format)); }},
      {"final_report_samples",
       [](R& c, V k, V v) { c.final_report_samples = to_number<std::uint64_t>(k, v); },
       [](const R& c) -> O { return std::to_string(c.final_report_samples); }},
      {"workers", [](R& c, V k, V v) { c.workers = to_u32(k, v); },
       [](const R& c) -> O { return std::to_string(c.workers); }},
      {"sweep.alphas",
       [](R& c, V k, V v) {
         std::vector<double> alphas;
         std::size_t pos = 0;
         while (pos <= v.size()) {
           const auto comma = v.find(',', pos);
           const auto item = trim(v.substr(pos, comma == V::npos ? V::npos : comma - pos));
           alphas.push_back(to_number<double>(k, item));
           if (comma == V::npos) break;
           pos = comma + 1;
         }
         c.sweep_alphas = std::move(alphas);
       },
       [](const R& c) -> O { return alphas_text(c.sweep_alphas); }},
  };
  return table;
}

}  // namespace

std::string_view format_name(Format format) noexcept {
  switch (format) {
    case Format::csv: return "csv";
    case Format::json: return "json";
    case Format::dot: return "dot";
  }
  return "csv";
}

SimScenario RunConfig::default_scenario() {
  SimScenario s;
  s.duration = 400;
  s.arrival_rate = 5.0;
  s.walk = WalkConfig::weighted(0.7, 10, 10);
  s.d_s = 5;
  s.reveal_delay = 1;
  s.seed = 1;
  s.sample_interval = 10;
  return s;
}

void RunConfig::validate() const {
  scenario.validate();
  if (final_report_samples < 1) throw Error(Errc::invalid_config, "final_report_samples must be >= 1");
  if (workers < 1) throw Error(Errc::invalid_config, "workers must be >= 1");
  if (out_dir.empty()) throw Error(Errc::invalid_config, "out must not be empty");
  if (sweep_alphas.empty()) throw Error(Errc::invalid_config, "sweep.alphas must list an alpha");
  for (double a : sweep_alphas) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw Error(Errc::invalid_config, "sweep alpha must be >= 0");
  }
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const auto& k : keys()) {
    if (k.name == key) {
      k.set(config, key, value);
      return;
    }
  }
  throw Error(Errc::invalid_config, "unknown key: " + std::string(key));
}

void apply_text(RunConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::invalid_config, "line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string serialize(const RunConfig& config) {
  std::ostringstream out;
  for (const auto& k : keys()) {
    if (auto v = k.get(config)) out << k.name << '=' << *v << '\n';
  }
  return out.str();
}

RunConfig parse(std::string_view text) {
  RunConfig config;
  apply_text(config, text);
  return config;
}

std::vector<std::string_view> preset_names() { return {"fig3", "fig4", "fig5", "split"}; }

RunConfig preset(std::string_view name) {
  RunConfig c;
  auto& s = c.scenario;
  if (name == "fig3" || name == "fig4" || name == "fig5") s.duration = 450;
  if (name == "fig3") {
    s.walk.alpha = 0.7;
    s.mix = {1.0, 0.0, 0.0, 0.0};
  } else if (name == "fig4") {
    s.walk.alpha = 0.1;
    s.mix = {1.0, 0.0, 0.0, 0.0};
  } else if (name == "fig5") {
    s.walk.alpha = 0.7;
    s.mix = {0.0, 1.0, 0.0, 0.0};
  } else if (name == "split") {
    // Walkers start at the genesis so that every walk has to pick a side at
    // the fork.
    s.walk = WalkConfig::weighted(0.7, 10, 1000);
    s.mix = {1.0, 0.0, 0.0, 0.0};
    s.attacker = AttackerConfig{20, 5, 1};
  } else {
    throw Error(Errc::invalid_config, "unknown preset: " + std::string(name));
  }
  return c;
}

}  // namespace tanglesim::cli
