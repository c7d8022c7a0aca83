#pragma once

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "blpsim/config.hpp"
#include "blpsim/metrics.hpp"
#include "blpsim/timing.hpp"

namespace blpsim {

inline const std::vector<std::string>& stats_columns() {
  static const std::vector<std::string> cols = {
      "policy", "seed", "workload", "wblp_mean", "write_mode_frac", "w2w_mean_cycles", "w2w_max_cycles", "mpka", "wpka",
      "total_cycles", "overrides", "cleanses", "lru_evictions", "extra_wb_ratio",
      // extras
      "w2w_episode_mean_max_cycles", "w2w_mean_ns", "w2w_max_ns", "miss_delta", "episodes", "write_mode_cycles",
      "reads", "writes", "hits", "misses", "writebacks", "dirty_evictions", "dram_reads", "dram_writes", "activates",
      "precharges", "tracker_queries", "vwq_probes", "resident_dirty_at_end", "sweep_point", "config_hash"};
  return cols;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline std::string stats_row(const StatsReport& r, const std::string& sweep_point = "") {
  using detail::fmt_double;
  auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
  const std::vector<std::string> v = {
      r.policy, std::to_string(r.seed), detail::csv_quote(r.workload), fmt_double(r.wblp_mean),
      fmt_double(r.write_mode_fraction), fmt_double(r.w2w_mean_cycles), std::to_string(r.w2w_max_cycles),
      fmt_double(r.mpka), fmt_double(r.wpka), std::to_string(r.total_cycles), std::to_string(r.decisions.overrides),
      std::to_string(r.cleanses), std::to_string(r.decisions.lru_evictions), opt(r.extra_wb_ratio),
      fmt_double(r.w2w_episode_mean_max_cycles), format_ns(r.w2w_mean_cycles), format_ns(static_cast<double>(r.w2w_max_cycles)),
      opt(r.miss_delta), std::to_string(r.episodes.size()), std::to_string(r.write_mode_cycles), std::to_string(r.reads),
      std::to_string(r.writes), std::to_string(r.hits), std::to_string(r.misses), std::to_string(r.writebacks),
      std::to_string(r.dirty_evictions), std::to_string(r.dram_reads), std::to_string(r.dram_writes),
      std::to_string(r.activates), std::to_string(r.precharges), std::to_string(r.tracker_queries),
      std::to_string(r.vwq_probes), std::to_string(r.resident_dirty_at_end), detail::csv_quote(sweep_point), r.config_hash};
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += v[i];
  }
  return out;
}

// Provenance header: the full serialized config as `# key=value` lines.
inline void write_config_header(std::ostream& os, const RunConfig& c) {
  for (const auto& [k, v] : config_to_kv(c)) os << "# " << k << '=' << v << '\n';
}

inline void write_stats_header(std::ostream& os) {
  const auto& cols = stats_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

inline void write_episodes_csv(std::ostream& os, const StatsReport& r) {
  os << "episode_id,channel,subchannel,start,end,writes,unique_banks,occupancy_at_entry,occupancy_at_exit,"
        "watermark_triggered\n";
  for (const auto& e : r.episodes)
    os << e.id << ',' << e.channel << ',' << e.subchannel << ',' << e.start << ',' << e.end << ',' << e.writes << ','
       << e.unique_banks << ',' << e.occupancy_at_entry << ',' << e.occupancy_at_exit << ','
       << (e.watermark_triggered ? 1 : 0) << '\n';
}

}  // namespace blpsim
