#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blpsim/errors.hpp"
#include "blpsim/geometry.hpp"

namespace blpsim {

enum class ReplacementKind : std::uint8_t { LRU, SRRIP, SHiP };

inline std::string_view replacement_name(ReplacementKind k) {
  switch (k) {
    case ReplacementKind::LRU: return "lru";
    case ReplacementKind::SRRIP: return "srrip";
    case ReplacementKind::SHiP: return "ship";
  }
  return "?";
}

inline ReplacementKind parse_replacement(std::string_view s) {
  if (s == "lru") return ReplacementKind::LRU;
  if (s == "srrip") return ReplacementKind::SRRIP;
  if (s == "ship") return ReplacementKind::SHiP;
  throw ConfigError("llc.policy: unknown replacement policy '" + std::string(s) + "'");
}

inline constexpr std::uint8_t kMaxRrpv = 3;

struct CacheLine {
  Addr addr = 0;  // line-aligned
  bool valid = false;
  bool dirty = false;
  std::uint8_t lru = 0;  // 0 = MRU
  std::uint8_t rrpv = kMaxRrpv;
  std::uint16_t signature = 0;
  bool reused = false;
};

// Order in which victim-adjacent scans walk the set: LRU to MRU for LRU, and
// non-increasing RRPV (ties by way index) for the RRIP family.
inline void scan_order(std::span<const CacheLine> set, ReplacementKind kind, std::vector<unsigned>& out) {
  out.resize(set.size());
  if (kind == ReplacementKind::LRU) {
    for (unsigned w = 0; w < set.size(); ++w) out[set.size() - 1 - set[w].lru] = w;
  } else {
    std::iota(out.begin(), out.end(), 0u);
    std::stable_sort(out.begin(), out.end(), [&](unsigned a, unsigned b) { return set[a].rrpv > set[b].rrpv; });
  }
}

// Base victim of a full set. For the RRIP family this ages the set (all RRPVs
// incremented) until some way reaches the maximum; ties go to the lowest way.
inline unsigned base_select_victim(std::span<CacheLine> set, ReplacementKind kind) {
  if (kind == ReplacementKind::LRU) {
    const auto bottom = static_cast<std::uint8_t>(set.size() - 1);
    for (unsigned w = 0; w < set.size(); ++w)
      if (set[w].lru == bottom) return w;
    throw ContractViolation("LRU stack is not a permutation");
  }
  for (;;) {
    for (unsigned w = 0; w < set.size(); ++w)
      if (set[w].rrpv >= kMaxRrpv) return w;
    for (auto& l : set) ++l.rrpv;
  }
}

// Moves `way` to MRU, shifting the lines above it down one position.
inline void lru_touch(std::span<CacheLine> set, unsigned way) {
  const auto pos = set[way].lru;
  for (auto& l : set)
    if (l.lru < pos) ++l.lru;
  set[way].lru = 0;
}

// SHiP with a 14-bit signature and a table of 2-bit outcome counters.
class ShipPredictor {
 public:
  static constexpr unsigned kSignatureBits = 14;
  static constexpr std::size_t kTableSize = 16384;

  ShipPredictor() : table_(kTableSize, 1) {}

  static std::uint16_t signature(Addr addr, unsigned stream_id) {
    std::uint64_t region = addr >> 12;
    std::uint64_t h = (region ^ (region >> 17) ^ (std::uint64_t{stream_id} << 9)) * 0x9E3779B97F4A7C15ull;
    return static_cast<std::uint16_t>((h >> 40) & ((1u << kSignatureBits) - 1));
  }

  // Predicted reused lines insert at rrpv 2, the rest at 3.
  std::uint8_t insertion_rrpv(std::uint16_t sig) const { return table_[sig % kTableSize] == 0 ? kMaxRrpv : 2; }

  void on_hit(std::uint16_t sig) {
    auto& c = table_[sig % kTableSize];
    if (c < 3) ++c;
  }

  void on_evict(const CacheLine& line) {
    if (line.reused) return;
    auto& c = table_[line.signature % kTableSize];
    if (c > 0) --c;
  }

  std::uint8_t counter(std::uint16_t sig) const { return table_[sig % kTableSize]; }

 private:
  std::vector<std::uint8_t> table_;
};

}  // namespace blpsim
