#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "blpsim/errors.hpp"
#include "blpsim/geometry.hpp"

namespace blpsim {

// Controller command clock of DDR5-4800.
inline constexpr double kClockGHz = 2.4;

inline double cycles_to_ns(double cycles) { return cycles / kClockGHz; }

// Display form: cycles / 2.4 rounded to 0.1 ns.
inline std::string format_ns(double cycles) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << std::round(cycles_to_ns(cycles) * 10.0) / 10.0;
  return os.str();
}

// DDR5-4800B x4 constraint table, in controller cycles.
struct TimingParams {
  unsigned CL = 40;
  unsigned CWL = 38;
  unsigned tRCD = 39;
  unsigned tRP = 39;
  unsigned tRAS = 77;
  unsigned tWR = 72;
  unsigned burst = 8;
  unsigned tCCD_S_WR = 8;
  unsigned tCCD_L_WR = 48;
  unsigned tCCD_S_RD = 8;
  unsigned tCCD_L_RD = 16;
  unsigned turnaround_rd_to_wr = 53;
  unsigned turnaround_wr_to_rd = 53;

  // x8 devices skip the on-die-ECC read-modify-write.
  static constexpr unsigned kX8_tCCD_L_WR = 24;

  void validate() const {
    const unsigned all[] = {CL, CWL, tRCD, tRP, tRAS, tWR, burst, tCCD_S_WR, tCCD_L_WR,
                            tCCD_S_RD, tCCD_L_RD, turnaround_rd_to_wr, turnaround_wr_to_rd};
    for (unsigned v : all)
      if (v == 0) throw ConfigError("timing: all parameters must be positive");
    if (tCCD_L_WR < tCCD_S_WR) throw ConfigError("timing: tCCD_L_WR must be >= tCCD_S_WR");
    if (tCCD_L_RD < tCCD_S_RD) throw ConfigError("timing: tCCD_L_RD must be >= tCCD_S_RD");
    if (tRAS < tRCD) throw ConfigError("timing: tRAS must be >= tRCD");
  }

  std::string describe() const {
    std::ostringstream os;
    auto row = [&](std::string_view name, unsigned c) {
      os << std::left << std::setw(22) << name << std::right << std::setw(6) << c << " cy  "
         << std::setw(6) << format_ns(c) << " ns\n";
    };
    row("CL", CL);
    row("CWL", CWL);
    row("tRCD", tRCD);
    row("tRP", tRP);
    row("tRAS", tRAS);
    row("tWR", tWR);
    row("burst", burst);
    row("tCCD_S_WR", tCCD_S_WR);
    row("tCCD_L_WR", tCCD_L_WR);
    row("tCCD_S_RD", tCCD_S_RD);
    row("tCCD_L_RD", tCCD_L_RD);
    row("turnaround_rd_to_wr", turnaround_rd_to_wr);
    row("turnaround_wr_to_rd", turnaround_wr_to_rd);
    return os.str();
  }
};

enum class Command : std::uint8_t { ACT, PRE, RD, WR };

inline std::string_view command_name(Command c) {
  switch (c) {
    case Command::ACT: return "ACT";
    case Command::PRE: return "PRE";
    case Command::RD: return "RD";
    case Command::WR: return "WR";
  }
  return "?";
}

struct BankState {
  bool open = false;
  unsigned row = 0;
  Cycle act_ok_at = 0;
  Cycle pre_ok_at = 0;
  Cycle col_ok_at = 0;  // RD and WR share tRCD
  Cycle last_activate_at = 0;
  Cycle last_write_burst_end = 0;
};

enum class BusDirection : std::uint8_t { Idle, Read, Write };

struct SubchannelBusState {
  BusDirection direction = BusDirection::Idle;
  Cycle bus_free_at = 0;  // end of the last data burst
  Cycle rd_ok_at = 0;     // tCCD_S_RD
  Cycle wr_ok_at = 0;     // tCCD_S_WR
  Cycle last_write_issue = 0;
  bool any_write = false;
  std::vector<Cycle> bg_rd_ok_at;  // tCCD_L_RD
  std::vector<Cycle> bg_wr_ok_at;  // tCCD_L_WR

  explicit SubchannelBusState(unsigned bankgroups = 8) : bg_rd_ok_at(bankgroups, 0), bg_wr_ok_at(bankgroups, 0) {}
};

namespace detail {

inline Cycle data_slot_issue(const SubchannelBusState& bus, BusDirection dir, unsigned latency,
                             unsigned turnaround) {
  Cycle need = bus.bus_free_at;
  if (bus.direction != BusDirection::Idle && bus.direction != dir) need += turnaround;
  return need > latency ? need - latency : 0;
}

inline void check_legal(Command cmd, const DramCoord& c, const BankState& bank) {
  switch (cmd) {
    case Command::ACT:
      BLPSIM_REQUIRE(!bank.open, "ACT to an open bank");
      break;
    case Command::PRE:
      BLPSIM_REQUIRE(bank.open, "PRE to a closed bank");
      break;
    case Command::RD:
    case Command::WR:
      BLPSIM_REQUIRE(bank.open && bank.row == c.row, "column command without matching open row");
      break;
  }
}

}  // namespace detail

// Smallest cycle >= now at which `cmd` may issue. With `ideal_write`, WR ignores every
// bank and bankgroup constraint and is spaced only by the data burst.
inline Cycle earliest_issue(Command cmd, const DramCoord& coord, Cycle now, const BankState& bank,
                            const SubchannelBusState& bus, const TimingParams& tp, bool ideal_write = false) {
  if (ideal_write && cmd == Command::WR) {
    Cycle t = std::max(now, detail::data_slot_issue(bus, BusDirection::Write, tp.CWL, tp.turnaround_rd_to_wr));
    if (bus.any_write) t = std::max(t, bus.last_write_issue + tp.burst);
    return t;
  }
  detail::check_legal(cmd, coord, bank);
  switch (cmd) {
    case Command::ACT:
      return std::max(now, bank.act_ok_at);
    case Command::PRE:
      return std::max(now, bank.pre_ok_at);
    case Command::RD:
      return std::max({now, bank.col_ok_at, bus.rd_ok_at, bus.bg_rd_ok_at[coord.bankgroup],
                       detail::data_slot_issue(bus, BusDirection::Read, tp.CL, tp.turnaround_wr_to_rd)});
    case Command::WR:
      return std::max({now, bank.col_ok_at, bus.wr_ok_at, bus.bg_wr_ok_at[coord.bankgroup],
                       detail::data_slot_issue(bus, BusDirection::Write, tp.CWL, tp.turnaround_rd_to_wr)});
  }
  return now;
}

// Applies the state transition that earliest_issue() assumed. Write recovery counts
// from the start of the write data (issue + CWL), so a same-bank conflict costs
// CWL + tWR + tRP + tRCD between WR issues.
inline void commit_command(Command cmd, const DramCoord& coord, Cycle issue, BankState& bank,
                           SubchannelBusState& bus, const TimingParams& tp, bool ideal_write = false) {
  BLPSIM_REQUIRE(issue >= earliest_issue(cmd, coord, issue, bank, bus, tp, ideal_write),
                 std::string(command_name(cmd)) + " committed before its earliest legal cycle");
  switch (cmd) {
    case Command::ACT:
      bank.open = true;
      bank.row = coord.row;
      bank.last_activate_at = issue;
      bank.col_ok_at = issue + tp.tRCD;
      bank.pre_ok_at = std::max(bank.pre_ok_at, issue + tp.tRAS);
      break;
    case Command::PRE:
      bank.open = false;
      bank.act_ok_at = issue + tp.tRP;
      break;
    case Command::RD:
      bus.direction = BusDirection::Read;
      bus.bus_free_at = issue + tp.CL + tp.burst;
      bus.rd_ok_at = issue + tp.tCCD_S_RD;
      bus.bg_rd_ok_at[coord.bankgroup] = issue + tp.tCCD_L_RD;
      break;
    case Command::WR:
      bus.direction = BusDirection::Write;
      bus.bus_free_at = issue + tp.CWL + tp.burst;
      bus.last_write_issue = issue;
      bus.any_write = true;
      if (ideal_write) break;
      bus.wr_ok_at = issue + tp.tCCD_S_WR;
      bus.bg_wr_ok_at[coord.bankgroup] = issue + tp.tCCD_L_WR;
      bank.last_write_burst_end = issue + tp.CWL + tp.burst;
      bank.pre_ok_at = std::max(bank.pre_ok_at, issue + tp.CWL + tp.tWR);
      break;
  }
}

// Bank and bus state for every channel. Banks are indexed by flat_bank_id.
class DramTiming {
 public:
  DramTiming(const DramGeometry& geom, const TimingParams& tp, bool ideal_write = false)
      : geom_(geom), tp_(tp), ideal_(ideal_write),
        banks_(std::size_t{geom.channels} * geom.banks_per_channel()),
        buses_(std::size_t{geom.channels} * geom.subchannels, SubchannelBusState(geom.bankgroups)) {
    tp_.validate();
  }

  Cycle earliest(Command cmd, const DramCoord& c, Cycle now) const {
    return earliest_issue(cmd, c, now, bank(c), bus(c), tp_, ideal_);
  }

  void commit(Command cmd, const DramCoord& c, Cycle issue) {
    commit_command(cmd, c, issue, bank(c), bus(c), tp_, ideal_);
  }

  // Bus-side (sub-channel, bankgroup, data slot) bound for a column command,
  // ignoring the bank's own row state.
  Cycle column_bus_ready(Command col, const DramCoord& c) const {
    const auto& b = bus(c);
    if (col == Command::RD)
      return std::max({b.rd_ok_at, b.bg_rd_ok_at[c.bankgroup],
                       detail::data_slot_issue(b, BusDirection::Read, tp_.CL, tp_.turnaround_wr_to_rd)});
    return std::max({b.wr_ok_at, b.bg_wr_ok_at[c.bankgroup],
                     detail::data_slot_issue(b, BusDirection::Write, tp_.CWL, tp_.turnaround_rd_to_wr)});
  }

  const BankState& bank(const DramCoord& c) const { return banks_[bank_index(c)]; }
  BankState& bank(const DramCoord& c) { return banks_[bank_index(c)]; }
  const SubchannelBusState& bus(const DramCoord& c) const { return buses_[bus_index(c)]; }
  SubchannelBusState& bus(const DramCoord& c) { return buses_[bus_index(c)]; }

  const TimingParams& params() const { return tp_; }
  const DramGeometry& geometry() const { return geom_; }
  bool ideal_write() const { return ideal_; }

 private:
  std::size_t bank_index(const DramCoord& c) const {
    return std::size_t{c.channel} * geom_.banks_per_channel() + flat_bank_id(c, geom_);
  }
  std::size_t bus_index(const DramCoord& c) const { return std::size_t{c.channel} * geom_.subchannels + c.subchannel; }

  DramGeometry geom_;
  TimingParams tp_;
  bool ideal_;
  std::vector<BankState> banks_;
  std::vector<SubchannelBusState> buses_;
};

}  // namespace blpsim
