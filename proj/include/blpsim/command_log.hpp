#pragma once

#include <cstdint>
#include <deque>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "blpsim/errors.hpp"
#include "blpsim/geometry.hpp"
#include "blpsim/timing.hpp"

namespace blpsim {

struct CommandRecord {
  Cycle cycle = 0;
  Command cmd = Command::ACT;
  DramCoord coord;
  bool write_mode = false;
  std::uint64_t episode = 0;  // per-subchannel episode id; 0 outside write mode
};

// Ring buffer of issued DRAM commands. capacity 0 keeps everything. With a spill
// path every record is also streamed to disk as CSV.
class CommandLog {
 public:
  explicit CommandLog(std::size_t capacity = std::size_t{1} << 16) : capacity_(capacity) {}

  void spill_to(const std::string& path) {
    spill_ = std::make_unique<std::ofstream>(path);
    if (!*spill_) throw ConfigError("cannot open command log '" + path + "'");
    *spill_ << "cycle,cmd,channel,subchannel,bankgroup,bank,row,column,write_mode,episode\n";
  }

  void push(const CommandRecord& r) {
    ++total_;
    if (spill_) {
      *spill_ << r.cycle << ',' << command_name(r.cmd) << ',' << r.coord.channel << ',' << r.coord.subchannel << ','
              << r.coord.bankgroup << ',' << r.coord.bank << ',' << r.coord.row << ',' << r.coord.column << ','
              << (r.write_mode ? 1 : 0) << ',' << r.episode << '\n';
    }
    if (capacity_ != 0 && records_.size() == capacity_) records_.pop_front();
    records_.push_back(r);
  }

  const std::deque<CommandRecord>& records() const { return records_; }
  std::uint64_t total() const { return total_; }
  bool complete() const { return total_ == records_.size(); }
  // Drops the in-memory records; a spill file keeps everything.
  void clear() {
    records_.clear();
    total_ = 0;
  }

 private:
  std::size_t capacity_;
  std::deque<CommandRecord> records_;
  std::uint64_t total_ = 0;
  std::unique_ptr<std::ofstream> spill_;
};

}  // namespace blpsim
