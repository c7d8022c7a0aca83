#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "blpsim/errors.hpp"
#include "blpsim/geometry.hpp"
#include "blpsim/replacement.hpp"
#include "blpsim/write_policy.hpp"

namespace blpsim {

enum class AccessKind : std::uint8_t { Read, Write };

struct CacheConfig {
  std::uint64_t capacity = std::uint64_t{16} << 20;
  unsigned ways = 16;
  ReplacementKind replacement = ReplacementKind::LRU;
  unsigned fill_delay = 100;
  unsigned mshrs = 128;
  unsigned slices = 1;

  std::uint64_t sets() const { return capacity / kLineSize / ways; }

  void validate() const {
    if (ways == 0 || ways > 255) throw ConfigError("llc.ways must be in [1,255]");
    if (slices == 0) throw ConfigError("llc.slices must be >= 1");
    const auto s = sets();
    if (s == 0 || s * ways * kLineSize != capacity) throw ConfigError("llc.capacity must equal sets x ways x 64");
    if (!std::has_single_bit(s)) throw ConfigError("llc: set count must be a power of two");
    if (s % slices != 0) throw ConfigError("llc.slices must divide the set count");
    if (mshrs == 0) throw ConfigError("llc.mshrs must be >= 1");
  }
};

struct AccessResult {
  bool hit = false;
  std::optional<Addr> victim;
  bool victim_dirty = false;
  std::vector<Addr> writebacks;  // in emission order
  std::optional<Addr> cleansed;  // BARD-C / BARD-H cleanse, if any

  void clear() {
    hit = false;
    victim.reset();
    victim_dirty = false;
    writebacks.clear();
    cleansed.reset();
  }
};

struct CacheStats {
  std::uint64_t accesses = 0;
  std::uint64_t read_hits = 0, read_misses = 0;
  std::uint64_t write_hits = 0, write_misses = 0;
  std::uint64_t clean_evictions = 0, dirty_evictions = 0;
  std::uint64_t cleanses = 0;  // every writeback that retains the line (BARD-C, EW, VWQ)
  std::uint64_t writebacks = 0;
  std::uint64_t vwq_probes = 0;  // candidate lines examined by the same-row search

  std::uint64_t hits() const { return read_hits + write_hits; }
  std::uint64_t misses() const { return read_misses + write_misses; }
};

// Set-associative, write-allocate, writeback last-level cache. The fill is logical:
// the new tag is installed at victim-selection time and the engine tracks data arrival.
class LastLevelCache {
 public:
  LastLevelCache(const CacheConfig& cfg, const AddressMapping& mapping, PolicyMode mode,
                 TrackerReset reset = TrackerReset::Subchannel, bool tracker_enabled = true)
      : cfg_(cfg), mapping_(mapping), mode_(mode),
        tracker_(mapping.geometry(), reset, tracker_enabled) {
    cfg_.validate();
    sets_ = cfg_.sets();
    sets_per_slice_ = sets_ / cfg_.slices;
    lines_.resize(sets_ * cfg_.ways);
    for (std::uint64_t s = 0; s < sets_; ++s)
      for (unsigned w = 0; w < cfg_.ways; ++w) lines_[s * cfg_.ways + w].lru = static_cast<std::uint8_t>(w);
  }

  // Free WRQ entries for the sub-channel of a coordinate; bounds the VWQ search.
  void set_wrq_space_probe(std::function<unsigned(const DramCoord&)> f) { wrq_space_ = std::move(f); }

  AccessResult access(Addr addr, AccessKind kind, unsigned stream_id = 0) {
    AccessResult r;
    access(addr, kind, stream_id, r);
    return r;
  }

  void access(Addr addr, AccessKind kind, unsigned stream_id, AccessResult& r) {
    r.clear();
    addr = line_align(addr);
    ++stats_.accesses;
    const std::uint64_t si = set_index(addr);
    auto set = set_span(si);

    for (unsigned w = 0; w < set.size(); ++w) {
      auto& l = set[w];
      if (!l.valid || l.addr != addr) continue;
      r.hit = true;
      (kind == AccessKind::Read ? stats_.read_hits : stats_.write_hits)++;
      if (kind == AccessKind::Write) l.dirty = true;
      on_hit(set, w);
      if (mode_ == PolicyMode::EagerWriteback) eager_writeback(set, r);
      return;
    }
    (kind == AccessKind::Read ? stats_.read_misses : stats_.write_misses)++;

    std::optional<unsigned> slot;
    for (unsigned w = 0; w < set.size(); ++w)
      if (!set[w].valid) {
        slot = w;
        break;
      }

    if (!slot) {
      const unsigned base = base_select_victim(set, cfg_.replacement);
      scan_order(set, cfg_.replacement, order_);
      unsigned victim = base;
      std::optional<unsigned> cleanse;
      auto bank_of = [this](const CacheLine& l) { return bank_ref(l.addr); };
      switch (mode_) {
        case PolicyMode::BardE:
          victim = bard_e_select(set, order_, base, tracker_, bank_of);
          break;
        case PolicyMode::BardC:
          cleanse = bard_c_cleanse(set, order_, base, tracker_, bank_of);
          break;
        case PolicyMode::BardH: {
          auto d = bard_h_hook(set, order_, base, tracker_, bank_of);
          victim = d.victim;
          cleanse = d.cleansed;
          break;
        }
        default:
          break;
      }
      if (uses_tracker(mode_)) {
        (victim == base ? decisions_.lru_evictions : decisions_.overrides)++;
        if (cleanse) ++decisions_.cleanses;
      }

      auto& v = set[victim];
      r.victim = v.addr;
      r.victim_dirty = v.dirty;
      if (cfg_.replacement == ReplacementKind::SHiP) ship_.on_evict(v);
      const Addr victim_addr = v.addr;
      const bool victim_dirty = v.dirty;
      v.valid = false;
      v.dirty = false;
      if (victim_dirty) {
        ++stats_.dirty_evictions;
        emit_writeback(victim_addr, r);
      } else {
        ++stats_.clean_evictions;
      }
      if (cleanse) {
        r.cleansed = set[*cleanse].addr;
        cleanse_line(set[*cleanse], r);
      }
      if (victim_dirty && mode_ == PolicyMode::Vwq) vwq_search(victim_addr, r);
      slot = victim;
    }

    auto& n = set[*slot];
    n.addr = addr;
    n.valid = true;
    n.dirty = kind == AccessKind::Write;
    n.reused = false;
    switch (cfg_.replacement) {
      case ReplacementKind::LRU:
        lru_touch(set, *slot);
        break;
      case ReplacementKind::SRRIP:
        n.rrpv = 2;
        break;
      case ReplacementKind::SHiP:
        n.signature = ShipPredictor::signature(addr, stream_id);
        n.rrpv = ship_.insertion_rrpv(n.signature);
        break;
    }
    if (mode_ == PolicyMode::EagerWriteback && r.victim) eager_writeback(set, r);
  }

  // Resident line for `addr`, or nullptr.
  const CacheLine* probe(Addr addr) const {
    addr = line_align(addr);
    auto set = set_span(set_index(addr));
    for (const auto& l : set)
      if (l.valid && l.addr == addr) return &l;
    return nullptr;
  }

  std::span<const CacheLine> set_lines(std::uint64_t set) const {
    return {lines_.data() + set * cfg_.ways, cfg_.ways};
  }

  std::uint64_t set_index(Addr addr) const {
    const std::uint64_t line = addr >> kLineBits;
    if (cfg_.slices == 1) return line & (sets_ - 1);
    const std::uint64_t slice = line % cfg_.slices;
    return slice * sets_per_slice_ + (line / cfg_.slices) % sets_per_slice_;
  }

  BankRef bank_ref(Addr addr) const {
    const auto c = mapping_.map(addr);
    return {c.channel, flat_bank_id(c, mapping_.geometry())};
  }

  std::uint64_t resident_dirty_lines() const {
    std::uint64_t n = 0;
    for (const auto& l : lines_) n += l.valid && l.dirty;
    return n;
  }

  const CacheConfig& config() const { return cfg_; }
  const CacheStats& stats() const { return stats_; }
  void reset_stats() {
    stats_ = {};
    decisions_ = {};
    tracker_.reset_counters();
  }
  const DecisionBreakdown& decisions() const { return decisions_; }
  const BlpTracker& tracker() const { return tracker_; }
  PolicyMode mode() const { return mode_; }
  std::uint64_t sets() const { return sets_; }

 private:
  std::span<CacheLine> set_span(std::uint64_t s) { return {lines_.data() + s * cfg_.ways, cfg_.ways}; }
  std::span<const CacheLine> set_span(std::uint64_t s) const { return {lines_.data() + s * cfg_.ways, cfg_.ways}; }

  void on_hit(std::span<CacheLine> set, unsigned w) {
    switch (cfg_.replacement) {
      case ReplacementKind::LRU:
        lru_touch(set, w);
        break;
      case ReplacementKind::SRRIP:
        set[w].rrpv = 0;
        break;
      case ReplacementKind::SHiP:
        set[w].rrpv = 0;
        set[w].reused = true;
        ship_.on_hit(set[w].signature);
        break;
    }
  }

  void emit_writeback(Addr a, AccessResult& r) {
    r.writebacks.push_back(a);
    ++stats_.writebacks;
    if (uses_tracker(mode_)) tracker_.mark(bank_ref(a));
  }

  void cleanse_line(CacheLine& l, AccessResult& r) {
    l.dirty = false;
    ++stats_.cleanses;
    emit_writeback(l.addr, r);
  }

  void eager_writeback(std::span<CacheLine> set, AccessResult& r) {
    scan_order(set, cfg_.replacement, order_);
    if (auto w = eager_writeback_pick(set, order_)) cleanse_line(set[*w], r);
  }

  // Every other line of the evicted line's DRAM row is enumerated through the inverse
  // mapping and probed, which finds exactly the same-row dirty lines a scan of the
  // whole LLC would.
  void vwq_search(Addr evicted, AccessResult& r) {
    const DramCoord c = mapping_.map(evicted);
    unsigned budget = ~0u;
    if (wrq_space_) {
      const unsigned space = wrq_space_(c);
      budget = space > 0 ? space - 1 : 0;
    }
    const unsigned cols = mapping_.geometry().columns;
    for (unsigned col = 0; col < cols && budget > 0; ++col) {
      if (col == c.column) continue;
      DramCoord k = c;
      k.column = col;
      const Addr a = mapping_.compose(k);
      ++stats_.vwq_probes;
      auto set = set_span(set_index(a));
      for (auto& l : set) {
        if (l.valid && l.dirty && l.addr == a) {
          cleanse_line(l, r);
          --budget;
          break;
        }
      }
    }
  }

  CacheConfig cfg_;
  AddressMapping mapping_;
  PolicyMode mode_;
  BlpTracker tracker_;
  ShipPredictor ship_;
  std::uint64_t sets_ = 0;
  std::uint64_t sets_per_slice_ = 0;
  std::vector<CacheLine> lines_;
  std::vector<unsigned> order_;
  CacheStats stats_;
  DecisionBreakdown decisions_;
  std::function<unsigned(const DramCoord&)> wrq_space_;
};

}  // namespace blpsim
