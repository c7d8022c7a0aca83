#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blpsim/errors.hpp"
#include "blpsim/geometry.hpp"
#include "blpsim/replacement.hpp"

namespace blpsim {

enum class PolicyMode : std::uint8_t { Baseline, BardE, BardC, BardH, EagerWriteback, Vwq };

inline std::string_view policy_name(PolicyMode m) {
  switch (m) {
    case PolicyMode::Baseline: return "baseline";
    case PolicyMode::BardE: return "bard-e";
    case PolicyMode::BardC: return "bard-c";
    case PolicyMode::BardH: return "bard-h";
    case PolicyMode::EagerWriteback: return "ew";
    case PolicyMode::Vwq: return "vwq";
  }
  return "?";
}

inline PolicyMode parse_policy(std::string_view s) {
  std::string n(s);
  for (auto& ch : n)
    if (ch == '_') ch = '-';
  if (n == "baseline") return PolicyMode::Baseline;
  if (n == "bard-e") return PolicyMode::BardE;
  if (n == "bard-c") return PolicyMode::BardC;
  if (n == "bard-h") return PolicyMode::BardH;
  if (n == "ew" || n == "eager-writeback") return PolicyMode::EagerWriteback;
  if (n == "vwq") return PolicyMode::Vwq;
  throw ConfigError("policy: unknown mode '" + std::string(s) + "'");
}

inline bool uses_tracker(PolicyMode m) {
  return m == PolicyMode::BardE || m == PolicyMode::BardC || m == PolicyMode::BardH;
}

enum class TrackerReset : std::uint8_t { Subchannel, Whole };

struct BankRef {
  unsigned channel = 0;
  unsigned bank = 0;  // flat_bank_id within the channel
};

// One bit per bank per channel, set when the LLC writes back a line to that bank.
// A sub-channel's group of bits clears itself the moment it becomes all ones.
class BlpTracker {
 public:
  explicit BlpTracker(const DramGeometry& g = {}, TrackerReset scope = TrackerReset::Subchannel, bool enabled = true)
      : bits_(g.channels, 0), group_width_(g.banks_per_subchannel()), groups_(g.subchannels),
        scope_(scope), enabled_(enabled) {
    g.validate();
  }

  void mark(BankRef b) {
    BLPSIM_REQUIRE(b.bank < group_width_ * groups_, "tracker bank out of range");
    ++marks_;
    auto& w = bits_[b.channel];
    w |= std::uint64_t{1} << b.bank;
    if (scope_ == TrackerReset::Whole) {
      if (w == mask(group_width_ * groups_)) {
        w = 0;
        ++resets_;
      }
      return;
    }
    const unsigned g = b.bank / group_width_;
    const std::uint64_t gm = mask(group_width_) << (g * group_width_);
    if ((w & gm) == gm) {
      w &= ~gm;
      ++resets_;
    }
  }

  bool pending(BankRef b) const {
    BLPSIM_REQUIRE(b.bank < group_width_ * groups_, "tracker bank out of range");
    ++queries_;
    return enabled_ && ((bits_[b.channel] >> b.bank) & 1u);
  }

  // Raw storage: 8 bytes per channel, little-endian.
  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(bits_.size() * 8);
    for (std::uint64_t w : bits_)
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(w >> (8 * i)));
    return out;
  }

  std::uint64_t word(unsigned channel) const { return bits_[channel]; }
  std::uint64_t group_bits(unsigned channel, unsigned subchannel) const {
    return (bits_[channel] >> (subchannel * group_width_)) & mask(group_width_);
  }
  unsigned group_width() const { return group_width_; }
  unsigned groups() const { return groups_; }
  bool enabled() const { return enabled_; }

  std::uint64_t queries() const { return queries_; }
  std::uint64_t marks() const { return marks_; }
  std::uint64_t resets() const { return resets_; }
  // Counters only; the bits are state and survive.
  void reset_counters() { queries_ = marks_ = resets_ = 0; }

 private:
  static std::uint64_t mask(unsigned n) { return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1; }

  std::vector<std::uint64_t> bits_;
  unsigned group_width_;
  unsigned groups_;
  TrackerReset scope_;
  bool enabled_;
  mutable std::uint64_t queries_ = 0;
  std::uint64_t marks_ = 0;
  std::uint64_t resets_ = 0;
};

struct DecisionBreakdown {
  std::uint64_t lru_evictions = 0;  // base-policy victim kept at a decision point
  std::uint64_t overrides = 0;      // BARD-E evicted a different dirty line
  std::uint64_t cleanses = 0;       // BARD-C wrote back a resident line
};

// The hooks below read the tracker through `bank_of`, which maps a resident line to
// its (channel, bank). `order` is the victim-adjacent scan order of the set.

// BARD-E: keep a dirty base victim unless its bank already has a pending write;
// then evict the first dirty line in scan order whose bank bit is clear.
template <class BankOf>
unsigned bard_e_select(std::span<const CacheLine> set, std::span<const unsigned> order, unsigned base_victim,
                       const BlpTracker& tracker, BankOf&& bank_of) {
  if (!set[base_victim].dirty) return base_victim;
  if (!tracker.pending(bank_of(set[base_victim]))) return base_victim;
  for (unsigned w : order) {
    if (w == base_victim || !set[w].valid || !set[w].dirty) continue;
    if (!tracker.pending(bank_of(set[w]))) return w;
  }
  return base_victim;
}

// BARD-C: the clean base victim is evicted silently; the first dirty line in scan order
// (skipping the victim) whose bank bit is clear is nominated for cleansing.
template <class BankOf>
std::optional<unsigned> bard_c_cleanse(std::span<const CacheLine> set, std::span<const unsigned> order,
                                       unsigned base_victim, const BlpTracker& tracker, BankOf&& bank_of) {
  if (set[base_victim].dirty) return std::nullopt;
  for (unsigned w : order) {
    if (w == base_victim || !set[w].valid || !set[w].dirty) continue;
    if (!tracker.pending(bank_of(set[w]))) return w;
  }
  return std::nullopt;
}

struct HookDecision {
  unsigned victim;
  std::optional<unsigned> cleansed;
};

// BARD-H dispatches on the base victim's dirtiness.
template <class BankOf>
HookDecision bard_h_hook(std::span<const CacheLine> set, std::span<const unsigned> order, unsigned base_victim,
                         const BlpTracker& tracker, BankOf&& bank_of) {
  if (set[base_victim].dirty) return {bard_e_select(set, order, base_victim, tracker, bank_of), std::nullopt};
  return {base_victim, bard_c_cleanse(set, order, base_victim, tracker, bank_of)};
}

// Eager Writeback: the set's least recently used valid line, if dirty. Bank-unaware.
inline std::optional<unsigned> eager_writeback_pick(std::span<const CacheLine> set, std::span<const unsigned> order) {
  for (unsigned w : order) {
    if (!set[w].valid) continue;
    if (set[w].dirty) return w;
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace blpsim
