#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "blpsim/cache.hpp"
#include "blpsim/command_log.hpp"
#include "blpsim/controller.hpp"
#include "blpsim/write_policy.hpp"

namespace blpsim {

struct StatsReport {
  std::string policy;
  std::string workload;
  std::uint64_t seed = 0;
  std::string config_hash;

  Cycle total_cycles = 0;
  std::uint64_t accesses = 0, reads = 0, writes = 0;
  std::uint64_t hits = 0, misses = 0, read_misses = 0, write_misses = 0;
  double mpka = 0, wpka = 0;
  std::uint64_t writebacks = 0, dirty_evictions = 0, cleanses = 0;
  std::uint64_t resident_dirty_at_end = 0;

  std::vector<EpisodeRecord> episodes;
  double wblp_mean = 0;
  Cycle write_mode_cycles = 0;
  double write_mode_fraction = 0;

  std::uint64_t w2w_count = 0;
  double w2w_mean_cycles = 0;
  Cycle w2w_max_cycles = 0;
  double w2w_episode_mean_max_cycles = 0;
  std::map<Cycle, std::uint64_t> w2w_histogram;

  DecisionBreakdown decisions;
  std::uint64_t tracker_queries = 0, tracker_marks = 0;
  std::uint64_t vwq_probes = 0;

  std::uint64_t dram_reads = 0, dram_writes = 0, activates = 0, precharges = 0;
  std::uint64_t forwarded_reads = 0, merged_writes = 0;
  std::uint64_t wrq_accepted = 0;
  Cycle read_stall_cycles = 0;

  // Filled by compare_to_baseline().
  std::optional<double> extra_wb_ratio;
  std::optional<double> miss_delta;
};

inline unsigned wblp_of_episode(const EpisodeRecord& e) { return e.unique_banks; }

// Mean unique banks per episode; episodes that issued no write are skipped.
inline double wblp_mean(const std::vector<EpisodeRecord>& eps) {
  double sum = 0;
  std::uint64_t n = 0;
  for (const auto& e : eps)
    if (e.writes > 0) {
      sum += wblp_of_episode(e);
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// Successive WR-issue deltas inside each write-mode episode, per sub-channel, in log
// order. Deltas across episodes are excluded.
template <class Records>
std::vector<Cycle> w2w_delay_series(const Records& log) {
  std::vector<Cycle> out;
  std::map<std::tuple<unsigned, unsigned>, std::pair<std::uint64_t, Cycle>> last;  // (ch,sc) -> (episode, cycle)
  for (const CommandRecord& r : log) {
    if (r.cmd != Command::WR || !r.write_mode) continue;
    const auto key = std::make_tuple(r.coord.channel, r.coord.subchannel);
    auto it = last.find(key);
    if (it != last.end() && it->second.first == r.episode) out.push_back(r.cycle - it->second.second);
    last[key] = {r.episode, r.cycle};
  }
  return out;
}

// Unique banks written per (channel, episode), recomputed from the command log.
template <class Records>
std::map<std::pair<unsigned, std::uint64_t>, unsigned> wblp_from_log(const Records& log, const DramGeometry& g) {
  std::map<std::pair<unsigned, std::uint64_t>, std::uint64_t> masks;
  for (const CommandRecord& r : log)
    if (r.cmd == Command::WR && r.write_mode)
      masks[{r.coord.channel, r.episode}] |= std::uint64_t{1} << flat_bank_id(r.coord, g);
  std::map<std::pair<unsigned, std::uint64_t>, unsigned> out;
  for (const auto& [ep, m] : masks) out[ep] = static_cast<unsigned>(std::popcount(m));
  return out;
}

// Relative cost of a policy run against the baseline run of the same workload.
inline void compare_to_baseline(StatsReport& r, const StatsReport& baseline) {
  if (baseline.writebacks > 0)
    r.extra_wb_ratio = (static_cast<double>(r.writebacks) - static_cast<double>(baseline.writebacks)) /
                       static_cast<double>(baseline.writebacks);
  if (baseline.misses > 0)
    r.miss_delta = (static_cast<double>(r.misses) - static_cast<double>(baseline.misses)) /
                   static_cast<double>(baseline.misses);
}

}  // namespace blpsim
