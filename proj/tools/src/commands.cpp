#include "tanglesim/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tanglesim/error.hpp"

namespace tanglesim::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kFinalReportStream = 0xF1A1;

class Writer {
 public:
  explicit Writer(const RunConfig& config) : dir_(config.out_dir) { fs::create_directories(dir_); }

  template <typename Fn>
  void file(const std::string& name, Fn&& body) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    body(out);
    if (!out) throw std::runtime_error("write failed: " + path.string());
    written_.push_back(path.string());
  }

  std::vector<std::string> done() { return std::move(written_); }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

ordered_json optional_id(const std::optional<TxId>& id) {
  return id ? ordered_json(*id) : ordered_json(nullptr);
}

void trace_json(std::ostream& out, std::span<const TraceEvent> trace) {
  auto j = ordered_json::array();
  for (const auto& e : trace) {
    j.push_back({{"tick", e.tick}, {"tx", e.tx}, {"issuer", issuer_name(e.issuer)},
                 {"tip1", e.tip1}, {"tip2", optional_id(e.tip2)}, {"tip3", optional_id(e.tip3)}});
  }
  out << j.dump() << '\n';
}

void metrics_json(std::ostream& out, std::span<const MetricsSample> metrics) {
  auto j = ordered_json::array();
  for (const auto& m : metrics) {
    j.push_back({{"tick", m.tick}, {"n_tx", m.n_tx}, {"n_tips", m.n_tips},
                 {"n_left_behind", m.n_left_behind}, {"cf", m.cf}, {"depth", m.depth},
                 {"branch1_w", m.branch1_w}, {"branch2_w", m.branch2_w}});
  }
  out << j.dump() << '\n';
}

void branches_json(std::ostream& out, std::span<const BranchSample> branches) {
  auto j = ordered_json::array();
  for (const auto& b : branches) {
    j.push_back({{"tick", b.tick}, {"branch1_w", b.branch1_w}, {"branch2_w", b.branch2_w},
                 {"p1", b.p1}, {"p2", b.p2}});
  }
  out << j.dump() << '\n';
}

std::vector<std::string> write_run(const RunConfig& config, const SimResult& result,
                                   bool with_branches) {
  Writer w(config);
  const LeftBehindThreshold threshold(config.scenario.d_s);
  if (config.format != Format::dot) {
    if (config.format == Format::csv) {
      w.file("trace.csv", [&](std::ostream& o) { write_trace_csv(o, result.trace); });
      w.file("metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, result.metrics); });
      if (with_branches) {
        w.file("branches.csv", [&](std::ostream& o) { write_branches_csv(o, result.branches); });
      }
    } else {
      w.file("trace.json", [&](std::ostream& o) { trace_json(o, result.trace); });
      w.file("metrics.json", [&](std::ostream& o) { metrics_json(o, result.metrics); });
      if (with_branches) {
        w.file("branches.json", [&](std::ostream& o) { branches_json(o, result.branches); });
      }
    }
    const auto report = estimate_confidence(result.tangle, config.scenario.walk,
                                            config.final_report_samples,
                                            derive_seed(config.scenario.seed, kFinalReportStream),
                                            config.workers);
    w.file("report.json", [&](std::ostream& o) { o << report_to_json(report) << '\n'; });
    if (config.scenario.supervision) {
      w.file("verdicts.jsonl", [&](std::ostream& o) { write_verdicts_jsonl(o, result.verdicts); });
    }
  }
  w.file("tangle.dot", [&](std::ostream& o) { write_dot(o, result.tangle, threshold); });
  return w.done();
}

}  // namespace

double stale_tip_fraction(const SimResult& result, LeftBehindThreshold threshold) {
  const auto tips = result.tangle.tips();
  if (tips.empty()) return 0.0;
  std::size_t stale = 0;
  for (TxId t : tips) {
    if (result.tangle.is_left_behind(t, threshold) && t < result.fates.size() &&
        result.fates[t].discovered) {
      ++stale;
    }
  }
  return static_cast<double>(stale) / static_cast<double>(tips.size());
}

std::vector<FairnessRow> fairness_sweep(const RunConfig& config) {
  config.validate();
  const LeftBehindThreshold threshold(config.scenario.d_s);
  std::vector<FairnessRow> rows;
  for (double alpha : config.sweep_alphas) {
    for (Issuer algo : {Issuer::iota, Issuer::giota}) {
      SimScenario s = config.scenario;
      s.walk.alpha = alpha;
      s.mix = algo == Issuer::iota ? AgentMix{1.0, 0.0, 0.0, 0.0} : AgentMix{0.0, 1.0, 0.0, 0.0};
      const auto result = run_scenario(s);
      rows.push_back({alpha, algo, confidence_fairness(result.tangle, threshold),
                      stale_tip_fraction(result, threshold), result.tangle.size()});
    }
  }
  return rows;
}

void write_fairness_csv(std::ostream& out, std::span<const FairnessRow> rows) {
  out << "alpha,algo,cf,lb_fraction,n_tx\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%g,%s,%.6f,%.6f,%zu\n", r.alpha,
                  std::string(issuer_name(r.algo)).c_str(), r.cf, r.lb_fraction, r.n_tx);
    out << buf;
  }
}

std::vector<std::string> cmd_simulate(const RunConfig& config) {
  config.validate();
  return write_run(config, run_scenario(config.scenario), false);
}

std::vector<std::string> cmd_attack(const RunConfig& config) {
  RunConfig c = config;
  if (!c.scenario.attacker) c.scenario.attacker.emplace();
  c.validate();
  return write_run(c, run_scenario(c.scenario), true);
}

std::vector<std::string> cmd_fairness_sweep(const RunConfig& config) {
  const auto rows = fairness_sweep(config);
  Writer w(config);
  if (config.format == Format::json) {
    w.file("fairness.json", [&](std::ostream& o) {
      auto j = ordered_json::array();
      for (const auto& r : rows) {
        j.push_back({{"alpha", r.alpha}, {"algo", issuer_name(r.algo)}, {"cf", r.cf},
                     {"lb_fraction", r.lb_fraction}, {"n_tx", r.n_tx}});
      }
      o << j.dump() << '\n';
    });
  } else {
    w.file("fairness.csv", [&](std::ostream& o) { write_fairness_csv(o, rows); });
  }
  return w.done();
}

std::vector<std::string> cmd_export_dot(const RunConfig& config) {
  config.validate();
  const auto result = run_scenario(config.scenario);
  Writer w(config);
  w.file("tangle.dot", [&](std::ostream& o) {
    write_dot(o, result.tangle, LeftBehindThreshold(config.scenario.d_s));
  });
  return w.done();
}

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> preset;
  std::optional<std::string> format;
  std::vector<std::string> sets;
  bool print_config = false;
};

void add_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config_path, "key=value configuration file");
  cmd.add_option("--seed", f.seed, "master seed");
  cmd.add_option("--out", f.out, "output directory");
  cmd.add_option("--preset", f.preset, "fig3 | fig4 | fig5 | split");
  cmd.add_option("--format", f.format, "csv | json | dot");
  cmd.add_option("--set", f.sets, "override one key, KEY=VALUE (repeatable)");
  cmd.add_flag("--print-config", f.print_config, "print the resolved configuration and exit");
}

RunConfig resolve(const Flags& f) {
  RunConfig config = f.preset ? preset(*f.preset) : RunConfig{};
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw Error(Errc::invalid_config, "cannot read config file " + f.config_path);
    std::stringstream text;
    text << in.rdbuf();
    apply_text(config, text.str());
  }
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(Errc::invalid_config, "--set expects KEY=VALUE: " + s);
    apply_setting(config, std::string_view(s).substr(0, eq), std::string_view(s).substr(eq + 1));
  }
  if (f.seed) config.scenario.seed = *f.seed;
  if (f.out) apply_setting(config, "out", *f.out);
  if (f.format) apply_setting(config, "format", *f.format);
  return config;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic tangle simulator", "tanglesim"};
  app.require_subcommand(1);
  Flags flags;
  struct Command {
    const char* name;
    const char* help;
    std::vector<std::string> (*run)(const RunConfig&);
  };
  const Command commands[] = {
      {"simulate", "run a scenario and export trace, metrics, tangle and confidence",
       &cmd_simulate},
      {"attack", "run a splitting-attack scenario and export branch statistics", &cmd_attack},
      {"fairness-sweep", "compare IOTA and G-IOTA fairness over a list of alpha values",
       &cmd_fairness_sweep},
      {"export-dot", "run a scenario and export only the final tangle as DOT", &cmd_export_dot},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) add_flags(*(subs.emplace_back(app.add_subcommand(c.name, c.help))), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  RunConfig config;
  try {
    config = resolve(flags);
    config.validate();
  } catch (const Error& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return 2;
  }
  if (flags.print_config) {
    out << serialize(config);
    return 0;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      for (const auto& path : commands[i].run(config)) out << path << '\n';
      return 0;
    } catch (const Error& e) {
      const bool config_error = e.code() == Errc::invalid_config || e.code() == Errc::invalid_scenario;
      err << (config_error ? "invalid configuration: " : "error: ") << errc_name(e.code()) << ": "
          << e.what() << '\n';
      return config_error ? 2 : 3;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 3;
    }
  }
  return 2;
}

}  // namespace tanglesim::cli
