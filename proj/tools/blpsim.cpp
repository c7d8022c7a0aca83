// blpsim command-line driver: single runs, sweeps, trace generation and config audit.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "blpsim/blpsim.hpp"

namespace {

using namespace blpsim;

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kContract = 3 };

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> sets;
  std::string policy, workload, trace, log_commands;
  std::optional<std::uint64_t> seed, length, warmup;
  bool x8 = false, ideal = false;
};

void add_common(CLI::App* app, CommonOpts& o) {
  app->add_option("--config,-c", o.config_file, "key=value config file");
  app->add_option("--set,-s", o.sets, "override a config key (key=value)")->take_all();
  app->add_option("--policy,-p", o.policy, "baseline|bard-e|bard-c|bard-h|ew|vwq");
  app->add_option("--workload,-w", o.workload, "generator name");
  app->add_option("--trace", o.trace, "trace file (.blpt or .csv)");
  app->add_option("--seed", o.seed, "workload seed");
  app->add_option("--length", o.length, "measured accesses");
  app->add_option("--warmup", o.warmup, "leading accesses simulated before statistics start");
  app->add_flag("--x8", o.x8, "x8 device timing (shorter tCCD_L_WR)");
  app->add_flag("--ideal-write", o.ideal, "writes spaced only by the burst");
  app->add_option("--log-commands", o.log_commands, "spill the full command log to this CSV");
}

// Defaults < config file < --set < dedicated flags.
RunConfig build_config(const CommonOpts& o) {
  RunConfig c;
  if (!o.config_file.empty()) apply_config_file(c, o.config_file);
  for (const auto& s : o.sets) apply_line(c, s);
  if (!o.policy.empty()) apply_setting(c, "policy.mode", o.policy);
  if (!o.workload.empty()) apply_setting(c, "workload.generator", o.workload);
  if (!o.trace.empty()) c.trace_path = o.trace;
  if (o.seed) c.workload.seed = *o.seed;
  if (o.length) c.workload.length = *o.length;
  if (o.warmup) c.workload.warmup = *o.warmup;
  if (o.x8) c.x8 = true;
  if (o.ideal) c.ideal_write = true;
  if (!o.log_commands.empty()) c.log_commands = o.log_commands;
  c.validate();
  return c;
}

std::ostream& open_out(const std::string& path, std::ofstream& f) {
  if (path.empty() || path == "-") return std::cout;
  f.open(path);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  return f;
}

unsigned thread_cap(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* e = std::getenv("BLPSIM_THREADS")) {
    const long v = std::strtol(e, nullptr, 10);
    if (v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, jobs)));
}

int cmd_run(const CommonOpts& o, const std::string& out, const std::string& episodes, bool baseline, bool dump) {
  RunConfig c = build_config(o);
  const auto t = c.effective_timing();
  std::cerr << "tCCD_L_WR = " << t.tCCD_L_WR << " cycles (" << format_ns(t.tCCD_L_WR) << " ns)\n";
  if (dump) std::cerr << t.describe();
  StatsReport r = run(c);
  if (baseline && c.policy != PolicyMode::Baseline) {
    RunConfig b = c;
    b.policy = PolicyMode::Baseline;
    b.log_commands.clear();
    compare_to_baseline(r, run(b));
  }
  std::ofstream f;
  auto& os = open_out(out, f);
  write_config_header(os, c);
  write_stats_header(os);
  os << stats_row(r) << '\n';
  if (!episodes.empty()) {
    std::ofstream ef(episodes);
    if (!ef) throw ConfigError("cannot write '" + episodes + "'");
    write_episodes_csv(ef, r);
  }
  return kOk;
}

std::string point_label(const std::vector<std::pair<std::string, std::string>>& p) {
  std::string s;
  for (const auto& [k, v] : p) s += (s.empty() ? "" : ";") + k + "=" + v;
  return s;
}

int cmd_sweep(const CommonOpts& o, const std::string& sweep_file, const std::string& out) {
  const RunConfig base = build_config(o);
  std::ifstream sf(sweep_file);
  if (!sf) throw ConfigError("cannot open sweep file '" + sweep_file + "'");
  const auto points = sweep_points(parse_sweep(sf));

  std::vector<RunConfig> cfgs;
  for (const auto& p : points) {
    RunConfig c = base;
    for (const auto& [k, v] : p) apply_setting(c, k, v);
    c.log_commands.clear();
    c.validate();
    cfgs.push_back(std::move(c));
  }

  std::vector<StatsReport> results(cfgs.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cfgs.size();) {
      try {
        results[i] = run(cfgs[i]);
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = thread_cap(cfgs.size());
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);

  // Pair every non-baseline point with the baseline point sharing its other keys.
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    if (cfgs[i].policy == PolicyMode::Baseline) continue;
    for (std::size_t j = 0; j < cfgs.size(); ++j) {
      if (cfgs[j].policy != PolicyMode::Baseline || cfgs[j].ideal_write != cfgs[i].ideal_write) continue;
      RunConfig probe = cfgs[i];
      probe.policy = PolicyMode::Baseline;
      if (config_hash(probe) == config_hash(cfgs[j])) {
        compare_to_baseline(results[i], results[j]);
        break;
      }
    }
  }

  std::ofstream f;
  auto& os = open_out(out, f);
  write_config_header(os, base);
  write_stats_header(os);
  for (std::size_t i = 0; i < results.size(); ++i) os << stats_row(results[i], point_label(points[i])) << '\n';
  return kOk;
}

int cmd_gen_trace(const CommonOpts& o, const std::string& out) {
  RunConfig c = build_config(o);
  if (out.empty()) throw ConfigError("gen-trace needs --out");
  SyntheticGenerator g(c.workload);
  const auto recs = collect(g);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + out + "'");
  const bool csv = out.size() >= 4 && out.substr(out.size() - 4) == ".csv";
  if (csv)
    write_trace_csv(f, recs);
  else
    write_trace_binary(f, recs);
  std::cerr << recs.size() << " records -> " << out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blpsim: LLC + DDR5 write-scheduling simulator"};
  app.require_subcommand(1);

  CommonOpts run_o, sweep_o, gen_o, val_o, tim_o, map_o;
  std::string run_out, episodes, sweep_out, sweep_file, gen_out;
  bool with_baseline = false, dump_timings = false;
  std::vector<std::string> map_addrs;

  auto* run_cmd = app.add_subcommand("run", "simulate one configuration and write a stats CSV row");
  add_common(run_cmd, run_o);
  run_cmd->add_option("--out,-o", run_out, "stats CSV (default stdout)");
  run_cmd->add_option("--episodes", episodes, "per-episode CSV");
  run_cmd->add_flag("--baseline", with_baseline, "also run the baseline policy and fill extra_wb_ratio/miss_delta");
  run_cmd->add_flag("--dump-timings", dump_timings, "print the effective timing table");

  auto* sweep_cmd = app.add_subcommand("sweep", "run the cartesian product of a sweep file");
  add_common(sweep_cmd, sweep_o);
  sweep_cmd->add_option("sweep_file", sweep_file, "one key=v1,v2,... per line")->required();
  sweep_cmd->add_option("--out,-o", sweep_out, "merged stats CSV (default stdout)");

  auto* gen_cmd = app.add_subcommand("gen-trace", "write a synthetic workload as a trace file");
  add_common(gen_cmd, gen_o);
  gen_cmd->add_option("--out,-o", gen_out, "output path (.blpt binary, .csv text)");

  auto* val_cmd = app.add_subcommand("validate", "check a configuration and print its serialized form");
  add_common(val_cmd, val_o);

  auto* tim_cmd = app.add_subcommand("dump-timings", "print the effective timing table");
  add_common(tim_cmd, tim_o);

  auto* map_cmd = app.add_subcommand("dump-mapping", "print the physical address bit layout");
  add_common(map_cmd, map_o);
  map_cmd->add_option("--addr", map_addrs, "also decode these addresses");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_o, run_out, episodes, with_baseline, dump_timings);
    if (*sweep_cmd) return cmd_sweep(sweep_o, sweep_file, sweep_out);
    if (*gen_cmd) return cmd_gen_trace(gen_o, gen_out);
    if (*val_cmd) {
      const RunConfig c = build_config(val_o);
      std::cout << config_to_text(c) << "# config_hash=" << config_hash(c) << "\nok\n";
      return kOk;
    }
    if (*tim_cmd) {
      std::cout << build_config(tim_o).effective_timing().describe();
      return kOk;
    }
    if (*map_cmd) {
      const auto m = build_config(map_o).mapping();
      std::cout << m.describe();
      for (const auto& a : map_addrs) {
        const Addr addr = detail::parse_u64("--addr", a);
        std::cout << "0x" << std::hex << addr << std::dec << " -> " << m.map(addr) << '\n';
      }
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const TraceParseError& e) {
    std::cerr << "trace error: " << e.what() << " (byte offset " << e.offset() << ")\n";
    return kConfig;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return kContract;
  }
  return kUsage;
}
