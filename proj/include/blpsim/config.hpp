#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "blpsim/cache.hpp"
#include "blpsim/controller.hpp"
#include "blpsim/errors.hpp"
#include "blpsim/geometry.hpp"
#include "blpsim/timing.hpp"
#include "blpsim/workload.hpp"
#include "blpsim/write_policy.hpp"

namespace blpsim {

struct FrontendConfig {
  unsigned max_outstanding_reads = 16;  // per stream
};

// Everything a run needs. Defaults are the baseline system: one DDR5-4800 channel
// (two sub-channels, 8x4 banks), Zen+PBPL mapping, 64-entry RQ, 48-entry WRQ with
// watermarks 8/40, 16 MiB 16-way LRU LLC.
struct RunConfig {
  DramGeometry geometry;
  std::optional<std::vector<FieldBit>> layout;  // empty: default layout
  bool pbpl = true;
  std::optional<std::vector<unsigned>> pbpl_row_bits;
  TimingParams timing;
  bool x8 = false;
  bool ideal_write = false;
  ControllerConfig mc;
  bool watermarks_explicit = false;
  CacheConfig llc;
  PolicyMode policy = PolicyMode::Baseline;
  TrackerReset tracker_reset = TrackerReset::Subchannel;
  bool tracker_enabled = true;
  SyntheticSpec workload;
  std::string trace_path;  // overrides the generator when set
  FrontendConfig frontend;
  std::string log_commands;
  std::size_t log_capacity = std::size_t{1} << 16;

  AddressMapping mapping() const {
    return AddressMapping(geometry, layout ? *layout : AddressMapping::zen_layout(geometry), pbpl,
                          pbpl_row_bits ? *pbpl_row_bits : AddressMapping::default_pbpl_bits(geometry));
  }

  TimingParams effective_timing() const {
    TimingParams t = timing;
    if (x8) t.tCCD_L_WR = TimingParams::kX8_tCCD_L_WR;
    return t;
  }

  std::string workload_name() const { return trace_path.empty() ? std::string(generator_name(workload.generator)) : trace_path; }

  void validate() const {
    geometry.validate();
    (void)mapping();
    effective_timing().validate();
    mc.validate();
    llc.validate();
    workload.validate();
    if (frontend.max_outstanding_reads == 0) throw ConfigError("frontend.max_outstanding_reads must be >= 1");
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    std::uint64_t mult = 1;
    std::string s = v;
    if (!s.empty() && (s.back() == 'K' || s.back() == 'M' || s.back() == 'G')) {
      mult = s.back() == 'K' ? 1ull << 10 : s.back() == 'M' ? 1ull << 20 : 1ull << 30;
      s.pop_back();
    }
    const bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
    const auto n = std::stoull(s, &used, hex ? 16 : 10);
    if (used != s.size() || s.empty() || s[0] == '-') throw std::invalid_argument("x");
    return n * mult;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

inline unsigned parse_uint(const std::string& key, const std::string& v) {
  const auto n = parse_u64(key, v);
  if (n > 0xFFFFFFFFull) throw ConfigError(key + ": value out of range");
  return static_cast<unsigned>(n);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("x");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

inline std::vector<unsigned> parse_uint_list(const std::string& key, const std::string& v) {
  std::vector<unsigned> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!trim(tok).empty()) out.push_back(parse_uint(key, trim(tok)));
  return out;
}

}  // namespace detail

// Applies one `section.key=value` setting. Unknown keys are configuration errors.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& raw) {
  using namespace detail;
  const std::string v = trim(raw);
  auto& t = c.timing;
  const std::map<std::string, unsigned*> timing_keys{
      {"timing.CL", &t.CL},
      {"timing.CWL", &t.CWL},
      {"timing.tRCD", &t.tRCD},
      {"timing.tRP", &t.tRP},
      {"timing.tRAS", &t.tRAS},
      {"timing.tWR", &t.tWR},
      {"timing.burst", &t.burst},
      {"timing.tCCD_S_WR", &t.tCCD_S_WR},
      {"timing.tCCD_L_WR", &t.tCCD_L_WR},
      {"timing.tCCD_S_RD", &t.tCCD_S_RD},
      {"timing.tCCD_L_RD", &t.tCCD_L_RD},
      {"timing.turnaround_rd_to_wr", &t.turnaround_rd_to_wr},
      {"timing.turnaround_wr_to_rd", &t.turnaround_wr_to_rd},
  };
  if (auto it = timing_keys.find(key); it != timing_keys.end()) {
    *it->second = parse_uint(key, v);
    return;
  }
  const std::map<std::string, unsigned*> uint_keys{
      {"geom.channels", &c.geometry.channels},
      {"geom.subchannels", &c.geometry.subchannels},
      {"geom.bankgroups", &c.geometry.bankgroups},
      {"geom.banks_per_bankgroup", &c.geometry.banks_per_bankgroup},
      {"geom.rows", &c.geometry.rows},
      {"geom.columns", &c.geometry.columns},
      {"mc.rq_capacity", &c.mc.rq_capacity},
      {"llc.ways", &c.llc.ways},
      {"llc.fill_delay", &c.llc.fill_delay},
      {"llc.mshrs", &c.llc.mshrs},
      {"llc.slices", &c.llc.slices},
      {"frontend.max_outstanding_reads", &c.frontend.max_outstanding_reads},
  };
  if (auto it = uint_keys.find(key); it != uint_keys.end()) {
    *it->second = parse_uint(key, v);
    return;
  }
  if (key == "mc.wrq_capacity") {
    const unsigned cap = parse_uint(key, v);
    const auto keep = c.mc;
    c.mc = ControllerConfig::scaled(cap);
    c.mc.rq_capacity = keep.rq_capacity;
    c.mc.opportunistic_drain = keep.opportunistic_drain;
    if (c.watermarks_explicit) {
      c.mc.low_watermark = keep.low_watermark;
      c.mc.high_watermark = keep.high_watermark;
    }
  } else if (key == "mc.low_watermark") {
    c.mc.low_watermark = parse_uint(key, v);
    c.watermarks_explicit = true;
  } else if (key == "mc.high_watermark") {
    c.mc.high_watermark = parse_uint(key, v);
    c.watermarks_explicit = true;
  } else if (key == "mc.opportunistic_drain") {
    c.mc.opportunistic_drain = parse_bool(key, v);
  } else if (key == "mc.page_policy") {
    if (v != "adaptive") throw ConfigError("mc.page_policy: only 'adaptive' is supported");
  } else if (key == "mc.scheduler") {
    if (v != "frfcfs") throw ConfigError("mc.scheduler: only 'frfcfs' is supported");
  } else if (key == "map.layout") {
    if (v == "default" || v == "zen")
      c.layout.reset();
    else
      c.layout = AddressMapping::parse_layout(v);
  } else if (key == "map.pbpl") {
    c.pbpl = parse_bool(key, v);
  } else if (key == "map.pbpl_row_bits") {
    if (v == "default")
      c.pbpl_row_bits.reset();
    else
      c.pbpl_row_bits = parse_uint_list(key, v);
  } else if (key == "timing.x8" || key == "x8") {
    c.x8 = parse_bool(key, v);
  } else if (key == "timing.ideal_write" || key == "ideal_write") {
    c.ideal_write = parse_bool(key, v);
  } else if (key == "llc.capacity") {
    c.llc.capacity = parse_u64(key, v);
  } else if (key == "llc.policy") {
    c.llc.replacement = parse_replacement(v);
  } else if (key == "policy.mode" || key == "policy") {
    c.policy = parse_policy(v);
  } else if (key == "policy.tracker_reset") {
    if (v == "subchannel")
      c.tracker_reset = TrackerReset::Subchannel;
    else if (v == "whole")
      c.tracker_reset = TrackerReset::Whole;
    else
      throw ConfigError("policy.tracker_reset: expected subchannel|whole");
  } else if (key == "policy.tracker") {
    c.tracker_enabled = parse_bool(key, v);
  } else if (key == "workload.generator" || key == "workload") {
    c.workload.generator = parse_generator(v);
  } else if (key == "workload.footprint") {
    c.workload.footprint = parse_u64(key, v);
  } else if (key == "workload.write_fraction") {
    c.workload.write_fraction = parse_double(key, v);
  } else if (key == "workload.length") {
    c.workload.length = parse_u64(key, v);
  } else if (key == "workload.warmup") {
    c.workload.warmup = parse_u64(key, v);
  } else if (key == "workload.trace") {
    c.trace_path = v;
  } else if (key == "seed" || key == "workload.seed") {
    c.workload.seed = parse_u64(key, v);
  } else if (key == "log.commands") {
    c.log_commands = v;
  } else if (key == "log.capacity") {
    c.log_capacity = parse_u64(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline void apply_line(RunConfig& c, const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + line + "'");
  apply_setting(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
}

// Flat `section.key=value` text; '#' starts a comment.
inline void apply_config_text(RunConfig& c, std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    apply_line(c, line);
  }
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  apply_config_text(c, f);
}

// Every effective setting, in a form apply_config_text() accepts.
inline std::vector<std::pair<std::string, std::string>> config_to_kv(const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto add = [&](std::string k, auto v) {
    std::ostringstream os;
    os << v;
    kv.emplace_back(std::move(k), os.str());
  };
  const auto& g = c.geometry;
  add("geom.channels", g.channels);
  add("geom.subchannels", g.subchannels);
  add("geom.bankgroups", g.bankgroups);
  add("geom.banks_per_bankgroup", g.banks_per_bankgroup);
  add("geom.rows", g.rows);
  add("geom.columns", g.columns);
  const auto m = c.mapping();
  add("map.layout", m.layout_string());
  add("map.pbpl", c.pbpl ? "on" : "off");
  {
    std::ostringstream os;
    for (std::size_t i = 0; i < m.pbpl_row_bits().size(); ++i) os << (i ? "," : "") << m.pbpl_row_bits()[i];
    add("map.pbpl_row_bits", os.str().empty() ? std::string("default") : os.str());
  }
  const auto& t = c.timing;
  add("timing.CL", t.CL);
  add("timing.CWL", t.CWL);
  add("timing.tRCD", t.tRCD);
  add("timing.tRP", t.tRP);
  add("timing.tRAS", t.tRAS);
  add("timing.tWR", t.tWR);
  add("timing.burst", t.burst);
  add("timing.tCCD_S_WR", t.tCCD_S_WR);
  add("timing.tCCD_L_WR", t.tCCD_L_WR);
  add("timing.tCCD_S_RD", t.tCCD_S_RD);
  add("timing.tCCD_L_RD", t.tCCD_L_RD);
  add("timing.turnaround_rd_to_wr", t.turnaround_rd_to_wr);
  add("timing.turnaround_wr_to_rd", t.turnaround_wr_to_rd);
  add("timing.x8", c.x8 ? "on" : "off");
  add("timing.ideal_write", c.ideal_write ? "on" : "off");
  add("mc.rq_capacity", c.mc.rq_capacity);
  add("mc.wrq_capacity", c.mc.wrq_capacity);
  add("mc.low_watermark", c.mc.low_watermark);
  add("mc.high_watermark", c.mc.high_watermark);
  add("mc.opportunistic_drain", c.mc.opportunistic_drain ? "on" : "off");
  add("mc.page_policy", "adaptive");
  add("mc.scheduler", "frfcfs");
  add("llc.capacity", c.llc.capacity);
  add("llc.ways", c.llc.ways);
  add("llc.policy", replacement_name(c.llc.replacement));
  add("llc.fill_delay", c.llc.fill_delay);
  add("llc.mshrs", c.llc.mshrs);
  add("llc.slices", c.llc.slices);
  add("policy.mode", policy_name(c.policy));
  add("policy.tracker_reset", c.tracker_reset == TrackerReset::Subchannel ? "subchannel" : "whole");
  add("policy.tracker", c.tracker_enabled ? "on" : "off");
  add("workload.generator", generator_name(c.workload.generator));
  add("workload.footprint", c.workload.footprint);
  {
    std::ostringstream os;
    os.precision(17);
    os << c.workload.write_fraction;
    kv.emplace_back("workload.write_fraction", os.str());
  }
  add("workload.length", c.workload.length);
  add("workload.warmup", c.workload.warmup);
  if (!c.trace_path.empty()) add("workload.trace", c.trace_path);
  add("seed", c.workload.seed);
  add("frontend.max_outstanding_reads", c.frontend.max_outstanding_reads);
  return kv;
}

inline std::string config_to_text(const RunConfig& c) {
  std::ostringstream os;
  for (const auto& [k, v] : config_to_kv(c)) os << k << '=' << v << '\n';
  return os.str();
}

// FNV-1a over the serialized configuration.
inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : config_to_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

// Sweep file: one `key=v1,v2,...` per line. Points enumerate the cartesian product
// with the first line outermost and values in file order.
struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

inline std::vector<SweepAxis> parse_sweep(std::istream& is) {
  std::vector<SweepAxis> axes;
  std::string line;
  while (std::getline(is, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("sweep: expected key=v1,v2,..., got '" + line + "'");
    SweepAxis a{detail::trim(line.substr(0, eq)), {}};
    std::stringstream ss(line.substr(eq + 1));
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!detail::trim(tok).empty()) a.values.push_back(detail::trim(tok));
    if (a.values.empty()) throw ConfigError("sweep: axis '" + a.key + "' has no values");
    axes.push_back(std::move(a));
  }
  return axes;
}

inline std::vector<std::vector<std::pair<std::string, std::string>>> sweep_points(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<std::pair<std::string, std::string>>> pts{{}};
  for (const auto& a : axes) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& p : pts)
      for (const auto& v : a.values) {
        auto q = p;
        q.emplace_back(a.key, v);
        next.push_back(std::move(q));
      }
    pts = std::move(next);
  }
  return pts;
}

}  // namespace blpsim
