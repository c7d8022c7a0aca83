#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <memory>
#include <queue>
#include <unordered_map>
#include <vector>

#include "blpsim/cache.hpp"
#include "blpsim/command_log.hpp"
#include "blpsim/config.hpp"
#include "blpsim/controller.hpp"
#include "blpsim/metrics.hpp"
#include "blpsim/workload.hpp"

namespace blpsim {

inline std::unique_ptr<WorkloadSource> make_source(const RunConfig& cfg) {
  if (cfg.trace_path.empty()) return std::make_unique<SyntheticGenerator>(cfg.workload);
  std::ifstream f(cfg.trace_path, std::ios::binary);
  if (!f) throw ConfigError("cannot open trace '" + cfg.trace_path + "'");
  const bool csv = cfg.trace_path.size() >= 4 && cfg.trace_path.substr(cfg.trace_path.size() - 4) == ".csv";
  return std::make_unique<VectorSource>(csv ? read_trace_csv(f) : read_trace_binary(f));
}

// Frontend -> LLC -> memory controllers -> DRAM timing, advanced on a single clock.
// Idle stretches are skipped: each component reports the next cycle at which it can
// act and the loop jumps there.
class Engine {
 public:
  explicit Engine(const RunConfig& cfg) : Engine(cfg, make_source(cfg)) {}

  Engine(const RunConfig& cfg, std::unique_ptr<WorkloadSource> src)
      : cfg_((cfg.validate(), cfg)), mapping_(cfg_.mapping()), source_(std::move(src)), log_(cfg_.log_capacity),
        cache_(cfg_.llc, mapping_, cfg_.policy, cfg_.tracker_reset, cfg_.tracker_enabled),
        outstanding_(16, 0) {
    if (!cfg_.log_commands.empty()) log_.spill_to(cfg_.log_commands);
    const auto tp = cfg_.effective_timing();
    for (unsigned ch = 0; ch < cfg_.geometry.channels; ++ch)
      mcs_.push_back(
          std::make_unique<MemoryController>(ch, cfg_.geometry, tp, cfg_.mc, cfg_.ideal_write, &log_));
    cache_.set_wrq_space_probe([this](const DramCoord& c) {
      const unsigned space = mcs_[c.channel]->wrq_space(c.subchannel);
      const auto queued = static_cast<unsigned>(pending_wb_.size());
      return space > queued ? space - queued : 0u;
    });
  }

  StatsReport run() {
    Cycle now = 0;
    bool source_done = false;
    std::optional<TraceRecord> head;
    Cycle mc_next = 0;
    std::vector<ReadDone> done;
    AccessResult res;

    for (;;) {
      // Fills whose data has arrived release their waiting reads.
      while (!fills_.empty() && fills_.top().first <= now) {
        const Addr line = fills_.top().second;
        fills_.pop();
        auto it = inflight_.find(line);
        for (unsigned s : it->second.waiters) --outstanding_[s];
        inflight_.erase(it);
      }

      bool wake_mc = drain_pending(now);

      if (!head && !source_done) {
        head = source_->next();
        if (!head) {
          source_done = true;
          for (auto& mc : mcs_) mc->set_draining(true);
          wake_mc = true;
        }
      }

      bool issued = false;
      bool read_blocked = false;
      if (head && pending_wb_.empty() && pending_rd_.empty()) {
        const TraceRecord rec = *head;
        const Addr line = line_align(rec.addr);
        const unsigned s = rec.stream_id % 16;
        if (rec.kind == AccessKind::Read &&
            (outstanding_[s] >= cfg_.frontend.max_outstanding_reads || inflight_.size() >= cfg_.llc.mshrs)) {
          read_blocked = true;
        } else {
          if (issued_ == cfg_.workload.warmup && cfg_.workload.warmup > 0) begin_measurement(now);
          ++issued_;
          cache_.access(line, rec.kind, rec.stream_id, res);
          ++(rec.kind == AccessKind::Read ? stats_.reads : stats_.writes);
          for (Addr wb : res.writebacks) pending_wb_.push_back(wb);
          if (rec.kind == AccessKind::Read) {
            auto it = inflight_.find(line);
            if (it != inflight_.end()) {
              it->second.waiters.push_back(s);
              ++outstanding_[s];
            } else if (!res.hit) {
              auto& f = inflight_[line];
              f.floor = now + cfg_.llc.fill_delay;
              f.waiters.push_back(s);
              ++outstanding_[s];
              pending_rd_.push_back({line, s});
            }
          }
          head.reset();
          issued = true;
          wake_mc |= drain_pending(now);
        }
      }

      if (wake_mc || now >= mc_next) {
        mc_next = kNever;
        for (auto& mc : mcs_) {
          done.clear();
          mc_next = std::min(mc_next, mc->tick(now, done));
          for (const auto& d : done) complete_read(d.addr, d.at);
        }
      }

      const bool finished = source_done && !head && pending_wb_.empty() && pending_rd_.empty() && inflight_.empty() &&
                            std::all_of(mcs_.begin(), mcs_.end(), [](const auto& m) { return m->idle(); });
      if (finished) break;

      Cycle next = kNever;
      if (issued || (head && !read_blocked && pending_wb_.empty() && pending_rd_.empty())) next = now + 1;
      next = std::min(next, mc_next);
      if (!fills_.empty()) next = std::min(next, fills_.top().first);
      BLPSIM_REQUIRE(next != kNever, "simulation stalled with work outstanding");
      next = std::max(next, now + 1);
      if (read_blocked) stats_.read_stall_cycles += next - now;
      now = next;
    }
    for (auto& mc : mcs_) mc->finish(now);
    return report(now - measure_start_);
  }

  const CommandLog& command_log() const { return log_; }
  const LastLevelCache& cache() const { return cache_; }
  const MemoryController& controller(unsigned ch = 0) const { return *mcs_[ch]; }
  const RunConfig& config() const { return cfg_; }

 private:
  struct Inflight {
    Cycle floor = 0;  // victim selection + fill_delay
    std::vector<unsigned> waiters;
  };

  struct PendingRead {
    Addr line;
    unsigned stream;
  };

  // Warmup ends: statistics restart; cache, queue and DRAM state carry over.
  void begin_measurement(Cycle now) {
    measure_start_ = now;
    stats_ = {};
    cache_.reset_stats();
    log_.clear();
    for (auto& mc : mcs_) mc->begin_measurement(now);
  }

  void complete_read(Addr line, Cycle data_at) {
    auto it = inflight_.find(line);
    BLPSIM_REQUIRE(it != inflight_.end(), "read completion without an outstanding miss");
    fills_.push({std::max(data_at, it->second.floor), line});
  }

  // Moves buffered writebacks and reads into the controllers; stops at backpressure.
  bool drain_pending(Cycle now) {
    bool any = false;
    while (!pending_wb_.empty()) {
      const Addr a = pending_wb_.front();
      const auto c = mapping_.map(a);
      const auto r = mcs_[c.channel]->enqueue({a, c, RequestKind::Write, now, 0, 0, 0});
      if (r == EnqueueResult::Backpressure) break;
      if (r == EnqueueResult::Accepted) ++stats_.wrq_accepted;
      pending_wb_.pop_front();
      any = true;
    }
    while (!pending_rd_.empty()) {
      const auto p = pending_rd_.front();
      const auto c = mapping_.map(p.line);
      const auto r = mcs_[c.channel]->enqueue({p.line, c, RequestKind::Read, now, p.stream, p.line, 0});
      if (r == EnqueueResult::Backpressure) break;
      if (r == EnqueueResult::Forwarded) complete_read(p.line, now);
      pending_rd_.pop_front();
      any = true;
    }
    return any;
  }

  StatsReport report(Cycle now) const {
    StatsReport r;
    r.policy = std::string(policy_name(cfg_.policy));
    if (cfg_.ideal_write) r.policy = "ideal";
    r.workload = cfg_.workload_name();
    r.seed = cfg_.workload.seed;
    r.config_hash = config_hash(cfg_);
    r.total_cycles = now;
    const auto& cs = cache_.stats();
    r.accesses = cs.accesses;
    r.reads = stats_.reads;
    r.writes = stats_.writes;
    r.hits = cs.hits();
    r.misses = cs.misses();
    r.read_misses = cs.read_misses;
    r.write_misses = cs.write_misses;
    r.writebacks = cs.writebacks;
    r.dirty_evictions = cs.dirty_evictions;
    r.cleanses = cs.cleanses;
    r.resident_dirty_at_end = cache_.resident_dirty_lines();
    if (r.accesses) {
      r.mpka = 1000.0 * static_cast<double>(r.misses) / static_cast<double>(r.accesses);
      r.wpka = 1000.0 * static_cast<double>(r.writebacks) / static_cast<double>(r.accesses);
    }
    r.decisions = cache_.decisions();
    r.tracker_queries = cache_.tracker().queries();
    r.tracker_marks = cache_.tracker().marks();
    r.vwq_probes = cs.vwq_probes;
    r.read_stall_cycles = stats_.read_stall_cycles;
    r.wrq_accepted = stats_.wrq_accepted;

    Cycle w2w_sum = 0;
    for (const auto& mc : mcs_) {
      const auto& ms = mc->stats();
      r.episodes.insert(r.episodes.end(), mc->episodes().begin(), mc->episodes().end());
      r.write_mode_cycles += ms.write_mode_cycles;
      r.w2w_count += ms.w2w_count;
      w2w_sum += ms.w2w_sum;
      r.w2w_max_cycles = std::max(r.w2w_max_cycles, ms.w2w_max);
      r.w2w_episode_mean_max_cycles = std::max(r.w2w_episode_mean_max_cycles, ms.w2w_episode_mean_max);
      for (const auto& [d, n] : ms.w2w_histogram) r.w2w_histogram[d] += n;
      r.dram_reads += ms.reads_issued;
      r.dram_writes += ms.writes_issued;
      r.activates += ms.activates;
      r.precharges += ms.precharges;
      r.forwarded_reads += ms.forwarded;
      r.merged_writes += ms.merged;
    }
    r.wblp_mean = wblp_mean(r.episodes);
    const double lanes = static_cast<double>(cfg_.geometry.channels) * cfg_.geometry.subchannels;
    if (now > 0) r.write_mode_fraction = static_cast<double>(r.write_mode_cycles) / (lanes * static_cast<double>(now));
    if (r.w2w_count) r.w2w_mean_cycles = static_cast<double>(w2w_sum) / static_cast<double>(r.w2w_count);
    return r;
  }

  struct EngineStats {
    std::uint64_t reads = 0, writes = 0, wrq_accepted = 0;
    Cycle read_stall_cycles = 0;
  };

  RunConfig cfg_;
  AddressMapping mapping_;
  std::unique_ptr<WorkloadSource> source_;
  CommandLog log_;
  LastLevelCache cache_;
  std::vector<std::unique_ptr<MemoryController>> mcs_;
  std::vector<unsigned> outstanding_;
  std::unordered_map<Addr, Inflight> inflight_;
  std::priority_queue<std::pair<Cycle, Addr>, std::vector<std::pair<Cycle, Addr>>, std::greater<>> fills_;
  std::deque<Addr> pending_wb_;
  std::deque<PendingRead> pending_rd_;
  EngineStats stats_;
  std::uint64_t issued_ = 0;
  Cycle measure_start_ = 0;
};

inline StatsReport run(const RunConfig& cfg) { return Engine(cfg).run(); }

}  // namespace blpsim
