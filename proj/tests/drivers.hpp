#pragma once
// Stimulus generators shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <random>
#include <vector>

#include "blpsim/command_log.hpp"
#include "blpsim/controller.hpp"
#include "blpsim/timing.hpp"

namespace drivers {

using namespace blpsim;

// Random legal command stream straight against the timing model. Few rows and banks
// so conflicts, row hits and direction flips are all frequent.
inline std::vector<CommandRecord> random_timing_stream(std::uint64_t seed, std::size_t n,
                                                       const TimingParams& tp = {}, const DramGeometry& g = {}) {
  std::mt19937_64 rng(seed);
  DramTiming dram(g, tp);
  std::vector<CommandRecord> out;
  out.reserve(n);
  std::vector<Cycle> last_sc(g.subchannels, 0);
  std::vector<bool> any_sc(g.subchannels, false);
  Cycle now = 0;
  while (out.size() < n) {
    DramCoord c;
    c.subchannel = static_cast<unsigned>(rng() % g.subchannels);
    c.bankgroup = static_cast<unsigned>(rng() % std::min(4u, g.bankgroups));
    c.bank = static_cast<unsigned>(rng() % std::min(2u, g.banks_per_bankgroup));
    c.row = static_cast<unsigned>(rng() % 3);
    c.column = static_cast<unsigned>(rng() % g.columns);
    const auto& b = dram.bank(c);
    Command cmd;
    if (!b.open)
      cmd = Command::ACT;
    else if (b.row != c.row)
      cmd = Command::PRE;
    else
      cmd = (rng() & 1) ? Command::WR : Command::RD;
    if (cmd == Command::PRE) c.row = b.row;
    Cycle from = now;
    if (any_sc[c.subchannel]) from = std::max(from, last_sc[c.subchannel] + 1);
    const Cycle t = dram.earliest(cmd, c, from);
    dram.commit(cmd, c, t);
    out.push_back({t, cmd, c, false, 0});
    last_sc[c.subchannel] = t;
    any_sc[c.subchannel] = true;
    now = t;
  }
  return out;
}

// Runs a controller on its own: random reads and writes arrive at random gaps, the
// controller is ticked cycle by cycle with idle skipping, every issued command lands in
// `log`. Returns the cycle at which all queues were empty.
inline Cycle random_controller_run(std::uint64_t seed, std::size_t requests, CommandLog& log,
                                   const ControllerConfig& cfg = {}, const DramGeometry& g = {},
                                   const TimingParams& tp = {}, std::size_t max_commands = SIZE_MAX) {
  std::mt19937_64 rng(seed);
  MemoryController mc(0, g, tp, cfg, false, &log);
  std::vector<ReadDone> done;
  Cycle now = 0, next_arrival = 0, mc_next = 0;
  std::size_t sent = 0;
  std::optional<RequestQueueEntry> held;
  std::uint64_t seen = 0;
  Cycle last_progress = 0;
  while (true) {
    if (log.total() != seen) {
      seen = log.total();
      last_progress = now;
    }
    // Watchdog: with work queued, some command must issue within a bounded horizon.
    BLPSIM_REQUIRE(mc.idle() || now - last_progress < 20000, "controller made no progress");
    bool woke = false;
    if (sent < requests && now >= next_arrival) {
      if (!held) {
        RequestQueueEntry e;
        e.coord.subchannel = static_cast<unsigned>(rng() % g.subchannels);
        e.coord.bankgroup = static_cast<unsigned>(rng() % g.bankgroups);
        e.coord.bank = static_cast<unsigned>(rng() % g.banks_per_bankgroup);
        e.coord.row = static_cast<unsigned>(rng() % 4);
        e.coord.column = static_cast<unsigned>(rng() % g.columns);
        e.addr = (static_cast<Addr>(sent) + 1) << 6;  // unique, unrelated to the coordinate
        e.kind = (rng() % 100) < 45 ? RequestKind::Write : RequestKind::Read;
        e.arrival = now;
        held = e;
      }
      if (mc.enqueue(*held) != EnqueueResult::Backpressure) {
        held.reset();
        ++sent;
        next_arrival = now + (rng() % 12);
        woke = true;
      }
    }
    if (sent == requests) mc.set_draining(true);
    if (woke || now >= mc_next) mc_next = mc.tick(now, done);
    if (sent == requests && mc.idle()) break;
    if (log.total() >= max_commands) break;
    Cycle next = mc_next;
    if (sent < requests) next = std::min(next, held ? now + 1 : std::max(next_arrival, now + 1));
    now = std::max(now + 1, next);
  }
  mc.finish(now);
  return now;
}

}  // namespace drivers
