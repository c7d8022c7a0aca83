#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "blpsim/cache.hpp"
#include "oracles.hpp"

using namespace blpsim;

namespace {

CacheConfig small(unsigned sets, unsigned ways, ReplacementKind k = ReplacementKind::LRU) {
  CacheConfig c;
  c.ways = ways;
  c.capacity = std::uint64_t{sets} * ways * kLineSize;
  c.replacement = k;
  return c;
}

Addr line(std::uint64_t n) { return n << kLineBits; }

// (addr, dirty) of valid lines, MRU first.
std::vector<std::pair<Addr, bool>> lru_contents(const LastLevelCache& c, std::uint64_t set) {
  auto lines = c.set_lines(set);
  std::vector<const CacheLine*> v;
  for (const auto& l : lines)
    if (l.valid) v.push_back(&l);
  std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->lru < b->lru; });
  std::vector<std::pair<Addr, bool>> out;
  for (auto* l : v) out.push_back({l->addr, l->dirty});
  return out;
}

}  // namespace

TEST(CacheConfig, Validation) {
  CacheConfig c;
  EXPECT_EQ(c.sets(), 16384u);
  EXPECT_NO_THROW(c.validate());
  c.capacity = 3 << 20;  // not a power-of-two set count
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.ways = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Cache, LruMatchesNaiveModel) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    LastLevelCache c(small(4, 4), AddressMapping(), PolicyMode::Baseline);
    oracle::NaiveLruCache ref(4, 4);
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 20000; ++i) {
      const Addr a = line(rng() % 48) | (rng() & 63);
      const bool w = rng() % 3 == 0;
      const auto got = c.access(a, w ? AccessKind::Write : AccessKind::Read);
      const auto want = ref.access(a, w);
      ASSERT_EQ(got.hit, want.hit) << i;
      ASSERT_EQ(got.victim, want.evicted) << i;
      if (want.evicted) ASSERT_EQ(got.victim_dirty, want.evicted_dirty) << i;
      ASSERT_EQ(got.writebacks.size(), want.evicted_dirty ? 1u : 0u);
      if (i % 97 == 0)
        for (std::uint64_t s = 0; s < 4; ++s) ASSERT_EQ(lru_contents(c, s), ref.contents(s)) << i;
    }
  }
}

TEST(Cache, SrripMatchesNaiveModel) {
  for (std::uint64_t seed : {4u, 5u}) {
    LastLevelCache c(small(4, 4, ReplacementKind::SRRIP), AddressMapping(), PolicyMode::Baseline);
    oracle::NaiveSrripCache ref(4, 4);
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 20000; ++i) {
      const Addr a = line(rng() % 40);
      const bool w = rng() % 4 == 0;
      ASSERT_EQ(c.access(a, w ? AccessKind::Write : AccessKind::Read).hit, ref.access(a, w)) << i;
      if (i % 53) continue;
      for (std::uint64_t s = 0; s < 4; ++s) {
        const auto lines = c.set_lines(s);
        const auto& want = ref.set(s);
        for (unsigned w2 = 0; w2 < 4; ++w2) {
          ASSERT_EQ(lines[w2].valid, want[w2].valid);
          if (!want[w2].valid) continue;
          ASSERT_EQ(lines[w2].addr, want[w2].a);
          ASSERT_EQ(lines[w2].rrpv, want[w2].rrpv);
          ASSERT_EQ(lines[w2].dirty, want[w2].dirty);
        }
      }
    }
  }
}

TEST(Cache, LruVictimExample) {
  LastLevelCache c(small(1, 4), AddressMapping(), PolicyMode::Baseline);
  for (int i = 0; i < 4; ++i) c.access(line(i), AccessKind::Read);
  c.access(line(0), AccessKind::Read);  // 0 becomes MRU, 1 is now LRU
  const auto r = c.access(line(9), AccessKind::Write);
  EXPECT_FALSE(r.hit);
  EXPECT_EQ(r.victim, line(1));
  EXPECT_TRUE(c.probe(line(9))->dirty);
}

TEST(Cache, SrripVictimExample) {
  LastLevelCache c(small(1, 4, ReplacementKind::SRRIP), AddressMapping(), PolicyMode::Baseline);
  for (int i = 0; i < 4; ++i) c.access(line(i), AccessKind::Read);  // all at 2
  c.access(line(0), AccessKind::Read);  // promoted to 0
  c.access(line(2), AccessKind::Read);
  // Ageing once brings 1 and 3 to the maximum; the lower way wins.
  EXPECT_EQ(c.access(line(7), AccessKind::Read).victim, line(1));
  EXPECT_EQ(c.access(line(8), AccessKind::Read).victim, line(3));
}

TEST(Cache, ShipInsertionTruthTable) {
  ShipPredictor p;
  const auto sig = ShipPredictor::signature(0x1234000, 0);
  EXPECT_EQ(p.counter(sig), 1u);
  EXPECT_EQ(p.insertion_rrpv(sig), 2u);
  CacheLine dead;
  dead.signature = sig;
  p.on_evict(dead);
  EXPECT_EQ(p.counter(sig), 0u);
  EXPECT_EQ(p.insertion_rrpv(sig), 3u);
  p.on_evict(dead);
  EXPECT_EQ(p.counter(sig), 0u);  // saturates low
  for (int i = 0; i < 5; ++i) p.on_hit(sig);
  EXPECT_EQ(p.counter(sig), 3u);  // saturates high
  CacheLine live = dead;
  live.reused = true;
  p.on_evict(live);
  EXPECT_EQ(p.counter(sig), 3u);
  EXPECT_LT(ShipPredictor::signature(~Addr{0}, 7), 1u << ShipPredictor::kSignatureBits);
}

TEST(Cache, ShipStreamingLinesInsertDistant) {
  LastLevelCache c(small(1, 4, ReplacementKind::SHiP), AddressMapping(), PolicyMode::Baseline);
  // Streaming through one region trains its signature to zero.
  for (int i = 0; i < 40; ++i) c.access(line(i), AccessKind::Read);
  c.access(line(50), AccessKind::Read);
  const auto* l = c.probe(line(50));
  ASSERT_NE(l, nullptr);
  EXPECT_EQ(l->rrpv, 3u);
}

TEST(Cache, WritebacksEqualDirtyEvictionsPlusCleanses) {
  for (PolicyMode m : {PolicyMode::Baseline, PolicyMode::BardE, PolicyMode::BardC, PolicyMode::BardH,
                       PolicyMode::EagerWriteback, PolicyMode::Vwq})
    for (ReplacementKind k : {ReplacementKind::LRU, ReplacementKind::SRRIP, ReplacementKind::SHiP}) {
      LastLevelCache c(small(16, 8, k), AddressMapping(), m);
      std::mt19937_64 rng(17);
      std::uint64_t emitted = 0;
      for (int i = 0; i < 30000; ++i) {
        const auto r = c.access(line(rng() % 4096), rng() % 3 ? AccessKind::Read : AccessKind::Write);
        emitted += r.writebacks.size();
      }
      const auto& s = c.stats();
      EXPECT_EQ(s.writebacks, s.dirty_evictions + s.cleanses) << policy_name(m);
      EXPECT_EQ(s.writebacks, emitted);
      EXPECT_EQ(s.hits() + s.misses(), s.accesses);
      EXPECT_EQ(s.clean_evictions + s.dirty_evictions, s.misses() - 16 * 8);
    }
}

TEST(Cache, SlicedIndexCoversEverySet) {
  CacheConfig cfg = small(64, 4);
  cfg.slices = 4;
  LastLevelCache c(cfg, AddressMapping(), PolicyMode::Baseline);
  std::vector<int> hits(64, 0);
  for (std::uint64_t n = 0; n < 64 * 8; ++n) ++hits[c.set_index(line(n))];
  for (int h : hits) EXPECT_EQ(h, 8);
}

TEST(Cache, ResetStatsKeepsContents) {
  LastLevelCache c(small(4, 4), AddressMapping(), PolicyMode::BardH);
  for (int i = 0; i < 200; ++i) c.access(line(i % 37), i % 2 ? AccessKind::Write : AccessKind::Read);
  const auto dirty = c.resident_dirty_lines();
  c.reset_stats();
  EXPECT_EQ(c.stats().accesses, 0u);
  EXPECT_EQ(c.decisions().lru_evictions, 0u);
  EXPECT_EQ(c.tracker().queries(), 0u);
  EXPECT_EQ(c.resident_dirty_lines(), dirty);
}
