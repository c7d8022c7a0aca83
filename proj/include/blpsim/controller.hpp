#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "blpsim/command_log.hpp"
#include "blpsim/errors.hpp"
#include "blpsim/geometry.hpp"
#include "blpsim/timing.hpp"

namespace blpsim {

inline constexpr Cycle kNever = std::numeric_limits<Cycle>::max();

struct ControllerConfig {
  unsigned rq_capacity = 64;
  unsigned wrq_capacity = 48;  // per sub-channel
  unsigned low_watermark = 8;
  unsigned high_watermark = 40;
  bool opportunistic_drain = true;

  // Watermarks at 1/6 and 5/6 of the queue, as used for queue-size sweeps.
  static ControllerConfig scaled(unsigned wrq_capacity) {
    ControllerConfig c;
    c.wrq_capacity = wrq_capacity;
    c.low_watermark = std::max(1u, static_cast<unsigned>(std::lround(wrq_capacity / 6.0)));
    c.high_watermark = static_cast<unsigned>(std::lround(wrq_capacity * 5.0 / 6.0));
    return c;
  }

  void validate() const {
    if (rq_capacity == 0) throw ConfigError("mc.rq_capacity must be >= 1");
    if (!(0 < low_watermark && low_watermark < high_watermark && high_watermark <= wrq_capacity))
      throw ConfigError("mc: watermarks must satisfy 0 < low < high <= wrq_capacity");
  }
};

enum class RequestKind : std::uint8_t { Read, Write };

struct RequestQueueEntry {
  Addr addr = 0;
  DramCoord coord;
  RequestKind kind = RequestKind::Read;
  Cycle arrival = 0;
  unsigned source_id = 0;
  std::uint64_t tag = 0;  // caller's id, echoed in ReadDone
  std::uint64_t seq = 0;  // assigned at enqueue; age order
};

enum class EnqueueResult : std::uint8_t { Accepted, Forwarded, Merged, Backpressure };

enum class PageAction : std::uint8_t { KeepOpen, Precharge };

struct ReadDone {
  std::uint64_t tag;
  Addr addr;
  Cycle at;  // last data beat
};

struct EpisodeRecord {
  std::uint64_t id = 0;
  unsigned channel = 0;
  unsigned subchannel = 0;
  Cycle start = 0;
  Cycle end = 0;
  std::uint64_t writes = 0;
  unsigned unique_banks = 0;
  unsigned occupancy_at_entry = 0;
  unsigned occupancy_at_exit = 0;
  bool watermark_triggered = false;
};

struct ControllerStats {
  std::uint64_t reads_issued = 0, writes_issued = 0, activates = 0, precharges = 0;
  std::uint64_t forwarded = 0, merged = 0, backpressure = 0;
  Cycle write_mode_cycles = 0;  // summed over sub-channels
  std::uint64_t w2w_count = 0;
  Cycle w2w_sum = 0;
  Cycle w2w_max = 0;
  double w2w_episode_mean_max = 0;
  std::map<Cycle, std::uint64_t> w2w_histogram;
};

// One channel: a shared read queue, a write queue and a read/write mode per
// sub-channel, FR-FCFS with read priority, watermark drains and an adaptive
// open-page policy. At most one command issues per sub-channel per cycle.
class MemoryController {
 public:
  MemoryController(unsigned channel, const DramGeometry& geom, const TimingParams& tp, const ControllerConfig& cfg,
                   bool ideal_write = false, CommandLog* log = nullptr)
      : channel_(channel), geom_(geom), cfg_(cfg), dram_(geom, tp, ideal_write), log_(log),
        wrq_(geom.subchannels), sub_(geom.subchannels), rq_count_(geom.subchannels, 0),
        close_pending_(geom.banks_per_channel(), false) {
    cfg_.validate();
    rq_.reserve(cfg_.rq_capacity);
    for (auto& q : wrq_) q.reserve(cfg_.wrq_capacity);
  }

  EnqueueResult enqueue(RequestQueueEntry req) {
    BLPSIM_REQUIRE(req.coord.channel == channel_, "request routed to the wrong channel");
    auto& wq = wrq_[req.coord.subchannel];
    const Addr a = line_align(req.addr);
    if (req.kind == RequestKind::Read) {
      for (const auto& w : wq)
        if (w.addr == a) {
          ++stats_.forwarded;
          return EnqueueResult::Forwarded;
        }
      if (rq_.size() >= cfg_.rq_capacity) {
        ++stats_.backpressure;
        return EnqueueResult::Backpressure;
      }
      req.addr = a;
      req.seq = next_seq_++;
      rq_.push_back(req);
      ++rq_count_[req.coord.subchannel];
      return EnqueueResult::Accepted;
    }
    for (const auto& w : wq)
      if (w.addr == a) {
        ++stats_.merged;
        return EnqueueResult::Merged;
      }
    if (wq.size() >= cfg_.wrq_capacity) {
      ++stats_.backpressure;
      return EnqueueResult::Backpressure;
    }
    req.addr = a;
    req.seq = next_seq_++;
    wq.push_back(req);
    return EnqueueResult::Accepted;
  }

  // Adaptive open page: close the row unless a queued request still targets it.
  PageAction page_policy_after(Command cmd, const DramCoord& c) const {
    BLPSIM_REQUIRE(cmd == Command::RD || cmd == Command::WR, "page policy applies to column commands");
    return row_has_pending(c) ? PageAction::KeepOpen : PageAction::Precharge;
  }

  // Issues at most one command per sub-channel at `now`. Completed reads are appended
  // to `done`. Returns the next cycle at which a command could become issuable
  // (kNever when idle); enqueues may make it earlier.
  Cycle tick(Cycle now, std::vector<ReadDone>& done) {
    Cycle next = kNever;
    for (unsigned sc = 0; sc < geom_.subchannels; ++sc) next = std::min(next, tick_sub(sc, now, done));
    return next;
  }

  // After the workload ends the remaining writes drain even if the
  // opportunistic drain is disabled.
  void set_draining(bool d) { draining_ = d; }

  // Closes any open episode at `now`.
  void finish(Cycle now) {
    for (unsigned sc = 0; sc < geom_.subchannels; ++sc)
      if (sub_[sc].write_mode) exit_write_mode(sc, now);
  }

  // Start of the measured region: counters and the episode list restart at `now`
  // and an episode in progress is truncated to begin here.
  void begin_measurement(Cycle now) {
    stats_ = {};
    episodes_.clear();
    for (auto& s : sub_) {
      if (!s.write_mode) continue;
      s.start = now;
      s.banks_written = 0;
      s.writes = 0;
      s.have_last_wr = false;
      s.ep_w2w_sum = 0;
      s.ep_w2w_count = 0;
    }
  }

  bool idle() const {
    if (!rq_.empty()) return false;
    for (const auto& q : wrq_)
      if (!q.empty()) return false;
    return true;
  }

  unsigned wrq_occupancy(unsigned sc) const { return static_cast<unsigned>(wrq_[sc].size()); }
  unsigned wrq_space(unsigned sc) const { return cfg_.wrq_capacity - wrq_occupancy(sc); }
  unsigned rq_occupancy() const { return static_cast<unsigned>(rq_.size()); }
  bool in_write_mode(unsigned sc) const { return sub_[sc].write_mode; }
  std::uint64_t current_episode(unsigned sc) const { return sub_[sc].write_mode ? sub_[sc].episode_id : 0; }

  const std::vector<EpisodeRecord>& episodes() const { return episodes_; }
  const ControllerStats& stats() const { return stats_; }
  const ControllerConfig& config() const { return cfg_; }
  const DramTiming& dram() const { return dram_; }

 private:
  struct SubState {
    bool write_mode = false;
    std::uint64_t episode_id = 0;
    std::uint64_t banks_written = 0;  // bitmask of flat bank ids
    std::uint64_t writes = 0;
    Cycle start = 0;
    bool have_last_wr = false;
    Cycle last_wr = 0;
    Cycle ep_w2w_sum = 0;
    std::uint64_t ep_w2w_count = 0;
    unsigned occupancy_at_entry = 0;
    bool watermark_triggered = false;
  };

  struct Plan {
    Command cmd;
    Cycle ready;  // when `cmd` may issue
    Cycle est;    // estimated column-command issue
  };

  std::size_t bank_idx(const DramCoord& c) const { return flat_bank_id(c, geom_); }

  bool row_has_pending(const DramCoord& c) const {
    for (const auto& r : rq_)
      if (same_row(r.coord, c)) return true;
    for (const auto& w : wrq_[c.subchannel])
      if (same_row(w.coord, c)) return true;
    return false;
  }

  static bool same_row(const DramCoord& a, const DramCoord& b) {
    return a.subchannel == b.subchannel && a.bankgroup == b.bankgroup && a.bank == b.bank && a.row == b.row;
  }

  Plan plan(const RequestQueueEntry& e, Command col, Cycle now) const {
    const auto& c = e.coord;
    if (col == Command::WR && dram_.ideal_write()) {
      const Cycle t = dram_.earliest(Command::WR, c, now);
      return {Command::WR, t, t};
    }
    const auto& b = dram_.bank(c);
    const auto& tp = dram_.params();
    if (b.open && b.row == c.row) {
      const Cycle t = dram_.earliest(col, c, now);
      return {col, t, t};
    }
    const Cycle bus = dram_.column_bus_ready(col, c);
    if (!b.open) {
      const Cycle a = std::max(now, b.act_ok_at);
      return {Command::ACT, a, std::max(a + tp.tRCD, bus)};
    }
    const Cycle p = std::max(now, b.pre_ok_at);
    return {Command::PRE, p, std::max(p + tp.tRP + tp.tRCD, bus)};
  }

  void enter_write_mode(unsigned sc, Cycle now, bool watermark) {
    auto& s = sub_[sc];
    s.write_mode = true;
    s.episode_id = ++episode_counter_;
    s.banks_written = 0;
    s.writes = 0;
    s.start = now;
    s.have_last_wr = false;
    s.ep_w2w_sum = 0;
    s.ep_w2w_count = 0;
    s.occupancy_at_entry = wrq_occupancy(sc);
    s.watermark_triggered = watermark;
  }

  void exit_write_mode(unsigned sc, Cycle now) {
    auto& s = sub_[sc];
    s.write_mode = false;
    EpisodeRecord r;
    r.id = s.episode_id;
    r.channel = channel_;
    r.subchannel = sc;
    r.start = s.start;
    r.end = now;
    r.writes = s.writes;
    r.unique_banks = static_cast<unsigned>(std::popcount(s.banks_written));
    r.occupancy_at_entry = s.occupancy_at_entry;
    r.occupancy_at_exit = wrq_occupancy(sc);
    r.watermark_triggered = s.watermark_triggered;
    episodes_.push_back(r);
    stats_.write_mode_cycles += now - s.start;
    if (s.ep_w2w_count > 0)
      stats_.w2w_episode_mean_max =
          std::max(stats_.w2w_episode_mean_max, static_cast<double>(s.ep_w2w_sum) / static_cast<double>(s.ep_w2w_count));
  }

  void update_mode(unsigned sc, Cycle now) {
    auto& s = sub_[sc];
    const unsigned occ = wrq_occupancy(sc);
    const bool reads = rq_count_[sc] > 0;
    if (!s.write_mode) {
      if (occ >= cfg_.high_watermark)
        enter_write_mode(sc, now, true);
      else if (occ > 0 && !reads && (cfg_.opportunistic_drain || draining_))
        enter_write_mode(sc, now, false);
    } else if (occ == 0 || (occ <= cfg_.low_watermark && reads)) {
      exit_write_mode(sc, now);
    }
  }

  void issue(Command cmd, const DramCoord& c, Cycle now) {
    dram_.commit(cmd, c, now);
    close_pending_[bank_idx(c)] = false;
    switch (cmd) {
      case Command::ACT: ++stats_.activates; break;
      case Command::PRE: ++stats_.precharges; break;
      case Command::RD: ++stats_.reads_issued; break;
      case Command::WR: ++stats_.writes_issued; break;
    }
    if (log_) log_->push({now, cmd, c, sub_[c.subchannel].write_mode, current_episode(c.subchannel)});
  }

  void after_column(Command cmd, const DramCoord& c) {
    if (cmd == Command::WR && dram_.ideal_write()) return;
    if (page_policy_after(cmd, c) == PageAction::Precharge) close_pending_[bank_idx(c)] = true;
  }

  void record_write(unsigned sc, const DramCoord& c, Cycle now) {
    auto& s = sub_[sc];
    s.banks_written |= std::uint64_t{1} << bank_idx(c);
    ++s.writes;
    if (s.have_last_wr) {
      const Cycle d = now - s.last_wr;
      ++stats_.w2w_count;
      stats_.w2w_sum += d;
      stats_.w2w_max = std::max(stats_.w2w_max, d);
      ++stats_.w2w_histogram[d];
      s.ep_w2w_sum += d;
      ++s.ep_w2w_count;
    }
    s.have_last_wr = true;
    s.last_wr = now;
  }

  // Banks of `sc` whose open row is targeted by a queued request of the active direction.
  std::uint64_t row_hit_banks(unsigned sc, bool writes) const {
    std::uint64_t m = 0;
    auto note = [&](const RequestQueueEntry& e) {
      const auto& b = dram_.bank(e.coord);
      if (b.open && b.row == e.coord.row) m |= std::uint64_t{1} << bank_idx(e.coord);
    };
    if (writes) {
      for (const auto& w : wrq_[sc]) note(w);
    } else {
      for (const auto& r : rq_)
        if (r.coord.subchannel == sc) note(r);
    }
    return m;
  }

  Cycle tick_sub(unsigned sc, Cycle now, std::vector<ReadDone>& done) {
    update_mode(sc, now);
    const bool wmode = sub_[sc].write_mode;
    const Command col = wmode ? Command::WR : Command::RD;
    const std::uint64_t hits = row_hit_banks(sc, wmode);
    auto blocked = [&](const Plan& p, const RequestQueueEntry& e) {
      return p.cmd == Command::PRE && ((hits >> bank_idx(e.coord)) & 1u);
    };

    Cycle next = kNever;
    std::size_t pick = SIZE_MAX;
    Command pick_cmd = Command::ACT;

    if (wmode) {
      // Write mode: the write whose column command can go soonest leads (age
      // breaks ties); if it is not ready, prepare another bank meanwhile.
      auto& q = wrq_[sc];
      std::size_t lead = SIZE_MAX, prep = SIZE_MAX;
      Plan lead_plan{}, prep_plan{};
      for (std::size_t i = 0; i < q.size(); ++i) {
        const Plan p = plan(q[i], col, now);
        if (blocked(p, q[i])) continue;
        next = std::min(next, p.ready);
        if (lead == SIZE_MAX || p.est < lead_plan.est || (p.est == lead_plan.est && q[i].seq < q[lead].seq)) {
          lead = i;
          lead_plan = p;
        }
        if (p.cmd != Command::WR && p.ready <= now &&
            (prep == SIZE_MAX || p.est < prep_plan.est || (p.est == prep_plan.est && q[i].seq < q[prep].seq))) {
          prep = i;
          prep_plan = p;
        }
      }
      if (lead != SIZE_MAX && lead_plan.ready <= now) {
        pick = lead;
        pick_cmd = lead_plan.cmd;
      } else if (prep != SIZE_MAX) {
        pick = prep;
        pick_cmd = prep_plan.cmd;
      }
      if (pick != SIZE_MAX) {
        const auto e = q[pick];
        issue(pick_cmd, e.coord, now);
        if (pick_cmd == Command::WR) {
          q[pick] = q.back();
          q.pop_back();
          record_write(sc, e.coord, now);
          after_column(Command::WR, e.coord);
        }
        return now + 1;
      }
    } else {
      // Read mode, FR-FCFS: ready row hits first, then the oldest ready command.
      std::size_t hit = SIZE_MAX, other = SIZE_MAX;
      Plan other_plan{};
      for (std::size_t i = 0; i < rq_.size(); ++i) {
        const auto& r = rq_[i];
        if (r.coord.subchannel != sc) continue;
        const Plan p = plan(r, col, now);
        if (blocked(p, r)) continue;
        next = std::min(next, p.ready);
        if (p.ready > now) continue;
        if (p.cmd == Command::RD) {
          if (hit == SIZE_MAX || r.seq < rq_[hit].seq) hit = i;
        } else if (other == SIZE_MAX || r.seq < rq_[other].seq) {
          other = i;
          other_plan = p;
        }
      }
      if (hit != SIZE_MAX) {
        const auto e = rq_[hit];
        issue(Command::RD, e.coord, now);
        rq_[hit] = rq_.back();
        rq_.pop_back();
        --rq_count_[sc];
        const auto& tp = dram_.params();
        done.push_back({e.tag, e.addr, now + tp.CL + tp.burst});
        after_column(Command::RD, e.coord);
        return now + 1;
      }
      if (other != SIZE_MAX) {
        issue(other_plan.cmd, rq_[other].coord, now);
        return now + 1;
      }
    }

    // Idle command slot: close rows the page policy released.
    for (unsigned b = 0; b < geom_.banks_per_subchannel(); ++b) {
      const unsigned flat = sc * geom_.banks_per_subchannel() + b;
      if (!close_pending_[flat]) continue;
      DramCoord c;
      c.channel = channel_;
      c.subchannel = sc;
      c.bankgroup = b / geom_.banks_per_bankgroup;
      c.bank = b % geom_.banks_per_bankgroup;
      const auto& bs = dram_.bank(c);
      c.row = bs.row;
      if (!bs.open || row_has_pending(c)) {
        close_pending_[flat] = false;
        continue;
      }
      const Cycle t = dram_.earliest(Command::PRE, c, now);
      if (t <= now) {
        issue(Command::PRE, c, now);
        return now + 1;
      }
      next = std::min(next, t);
    }
    return next;
  }

  unsigned channel_;
  DramGeometry geom_;
  ControllerConfig cfg_;
  DramTiming dram_;
  CommandLog* log_;
  std::vector<RequestQueueEntry> rq_;
  std::vector<std::vector<RequestQueueEntry>> wrq_;
  std::vector<SubState> sub_;
  std::vector<unsigned> rq_count_;
  std::vector<bool> close_pending_;
  std::vector<EpisodeRecord> episodes_;
  ControllerStats stats_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t episode_counter_ = 0;
  bool draining_ = false;
};

}  // namespace blpsim
