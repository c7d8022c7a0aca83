#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "blpsim/engine.hpp"
#include "blpsim/stats_csv.hpp"
#include "oracles.hpp"

using namespace blpsim;

namespace {

// Small LLC so a short run produces plenty of writebacks.
RunConfig small_run(PolicyMode p, Generator g = Generator::UniformRandom, std::uint64_t n = 60000) {
  RunConfig c;
  c.policy = p;
  c.llc.capacity = std::uint64_t{256} << 10;
  c.workload.generator = g;
  c.workload.length = n;
  c.workload.footprint = std::uint64_t{8} << 20;
  c.workload.seed = 3;
  return c;
}

}  // namespace

TEST(Metrics, WblpMeanSkipsEpisodesWithoutWrites) {
  std::vector<EpisodeRecord> eps(3);
  eps[0].writes = 4;
  eps[0].unique_banks = 4;
  eps[1].writes = 0;
  eps[2].writes = 10;
  eps[2].unique_banks = 2;
  EXPECT_DOUBLE_EQ(wblp_mean(eps), 3.0);
  EXPECT_EQ(wblp_mean({}), 0.0);
}

TEST(Metrics, W2wSeriesStaysInsideEpisodesAndSubchannels) {
  auto rec = [](Cycle t, unsigned sc, std::uint64_t ep, bool wm = true) {
    CommandRecord r{};
    r.cycle = t;
    r.cmd = Command::WR;
    r.coord.subchannel = sc;
    r.write_mode = wm;
    r.episode = ep;
    return r;
  };
  const std::vector<CommandRecord> log = {rec(10, 0, 1), rec(12, 1, 2), rec(18, 0, 1), rec(60, 1, 2),
                                          rec(100, 0, 3), rec(108, 0, 3), rec(120, 0, 3, false)};
  EXPECT_EQ(w2w_delay_series(log), (std::vector<Cycle>{8, 48, 8}));
}

TEST(Metrics, CompareToBaseline) {
  StatsReport base, r;
  base.writebacks = 100;
  base.misses = 1000;
  r.writebacks = 112;
  r.misses = 1010;
  compare_to_baseline(r, base);
  EXPECT_NEAR(*r.extra_wb_ratio, 0.12, 1e-12);
  EXPECT_NEAR(*r.miss_delta, 0.01, 1e-12);
  StatsReport empty;
  compare_to_baseline(r, empty);
}

TEST(Engine, EmptyTraceRunsCleanly) {
  RunConfig c;
  Engine e(c, std::make_unique<VectorSource>(std::vector<TraceRecord>{}));
  const auto r = e.run();
  EXPECT_EQ(r.accesses, 0u);
  EXPECT_EQ(r.episodes.size(), 0u);
  EXPECT_EQ(r.wblp_mean, 0.0);
  EXPECT_EQ(r.write_mode_fraction, 0.0);
  EXPECT_FALSE(std::isnan(r.w2w_mean_cycles));
  EXPECT_FALSE(std::isnan(r.mpka));
}

TEST(Engine, SingleReadMissLatency) {
  RunConfig c;
  Engine e(c, std::make_unique<VectorSource>(std::vector<TraceRecord>{{AccessKind::Read, 0x40, 0}}));
  const auto r = e.run();
  EXPECT_EQ(r.misses, 1u);
  EXPECT_EQ(r.dram_reads, 1u);
  EXPECT_EQ(r.activates, 1u);
  // ACT, RD after tRCD, data after CL + burst; the fill takes at least the fill delay.
  EXPECT_GE(r.total_cycles, 39u + 40u + 8u);
  EXPECT_LE(r.total_cycles, 39u + 40u + 8u + 150u);
}

TEST(Engine, DeterministicAcrossRuns) {
  const auto c = small_run(PolicyMode::BardH, Generator::Mixed, 30000);
  const auto a = run(c), b = run(c);
  EXPECT_EQ(a.total_cycles, b.total_cycles);
  EXPECT_EQ(a.writebacks, b.writebacks);
  EXPECT_EQ(a.w2w_count, b.w2w_count);
  EXPECT_EQ(a.config_hash, b.config_hash);
  EXPECT_EQ(stats_row(a), stats_row(b));
}

TEST(Engine, AccountingIdentities) {
  for (PolicyMode p : {PolicyMode::Baseline, PolicyMode::BardE, PolicyMode::BardC, PolicyMode::BardH,
                       PolicyMode::EagerWriteback, PolicyMode::Vwq}) {
    const auto r = run(small_run(p));
    EXPECT_EQ(r.accesses, 60000u) << policy_name(p);
    EXPECT_EQ(r.reads + r.writes, r.accesses);
    EXPECT_EQ(r.hits + r.misses, r.accesses);
    EXPECT_EQ(r.writebacks, r.dirty_evictions + r.cleanses);
    EXPECT_EQ(r.writebacks, r.wrq_accepted + r.merged_writes);
    EXPECT_EQ(r.dram_writes, r.wrq_accepted);
    EXPECT_LE(r.dram_reads, r.read_misses);  // write misses never fetch
    EXPECT_GE(r.write_mode_fraction, 0.0);
    EXPECT_LE(r.write_mode_fraction, 1.0);
    EXPECT_NEAR(r.mpka, 1000.0 * r.misses / r.accesses, 1e-9);
    EXPECT_NEAR(r.wpka, 1000.0 * r.writebacks / r.accesses, 1e-9);
    std::uint64_t hist = 0;
    for (auto& [d, n] : r.w2w_histogram) hist += n;
    EXPECT_EQ(hist, r.w2w_count);
    if (!uses_tracker(p)) EXPECT_EQ(r.tracker_queries, 0u);
  }
}

// The online w2w and WBLP counters agree with values recomputed from the raw command
// log, and the engine's command stream passes the independent timing checker.
TEST(Engine, OnlineMetricsMatchCommandLog) {
  for (PolicyMode p : {PolicyMode::Baseline, PolicyMode::BardH}) {
    auto c = small_run(p, Generator::Mixed, 40000);
    c.log_capacity = 0;  // keep everything
    Engine e(c);
    const auto r = e.run();
    const auto& log = e.command_log();
    ASSERT_TRUE(log.complete());
    const auto w2w = w2w_delay_series(log.records());
    ASSERT_EQ(w2w.size(), r.w2w_count);
    Cycle sum = 0, mx = 0;
    for (Cycle d : w2w) {
      sum += d;
      mx = std::max(mx, d);
    }
    EXPECT_EQ(mx, r.w2w_max_cycles);
    EXPECT_NEAR(static_cast<double>(sum) / static_cast<double>(w2w.size()), r.w2w_mean_cycles, 1e-9);

    const auto banks = wblp_from_log(log.records(), c.geometry);
    double total = 0;
    std::size_t n = 0;
    for (const auto& ep : r.episodes) {
      if (ep.writes == 0) continue;
      EXPECT_EQ(banks.at({ep.channel, ep.id}), ep.unique_banks);
      total += ep.unique_banks;
      ++n;
    }
    EXPECT_EQ(n, banks.size());
    EXPECT_NEAR(total / static_cast<double>(n), r.wblp_mean, 1e-9);

    oracle::NaiveTimingChecker chk(c.effective_timing());
    chk.replay(log.records());
    EXPECT_TRUE(chk.violations().empty()) << chk.violations().front();
  }
}

TEST(Engine, IdealWriteGivesBurstSpacing) {
  for (Generator g : {Generator::UniformRandom, Generator::StreamTriad, Generator::Mixed}) {
    auto c = small_run(PolicyMode::Baseline, g, 40000);
    c.ideal_write = true;
    const auto r = run(c);
    ASSERT_GT(r.w2w_count, 0u);
    EXPECT_EQ(r.w2w_mean_cycles, 8.0) << generator_name(g);
    EXPECT_EQ(r.w2w_max_cycles, 8u);
    EXPECT_EQ(r.policy, "ideal");
  }
}

TEST(Engine, X8ShortensWriteSpacing) {
  auto c = small_run(PolicyMode::Baseline);
  c.x8 = true;
  EXPECT_EQ(c.effective_timing().tCCD_L_WR, 24u);
  const auto r = run(c);
  const auto base = run(small_run(PolicyMode::Baseline));
  EXPECT_LT(r.w2w_mean_cycles, base.w2w_mean_cycles);
  EXPECT_LT(r.total_cycles, base.total_cycles);
}

TEST(Engine, WarmupExcludedFromStatistics) {
  auto c = small_run(PolicyMode::BardH, Generator::UniformRandom, 40000);
  c.workload.warmup = 10000;
  Engine e(c);
  const auto r = e.run();
  EXPECT_EQ(r.accesses, 40000u);
  EXPECT_EQ(r.reads + r.writes, 40000u);
  auto full = c;
  full.workload.warmup = 0;
  full.workload.length = 50000;
  const auto f = run(full);
  EXPECT_LT(r.total_cycles, f.total_cycles);
  EXPECT_LT(r.writebacks, f.writebacks);
  Cycle ep_cycles = 0;
  for (const auto& ep : r.episodes) ep_cycles += ep.end - ep.start;
  EXPECT_EQ(ep_cycles, r.write_mode_cycles);
  EXPECT_LE(r.write_mode_fraction, 1.0);
}

TEST(Engine, TraceSourceMatchesGenerator) {
  auto c = small_run(PolicyMode::BardE, Generator::Mixed, 20000);
  SyntheticGenerator g(c.workload);
  const auto recs = collect(g);
  const auto a = run(c);
  const auto b = Engine(c, std::make_unique<VectorSource>(recs)).run();
  EXPECT_EQ(a.total_cycles, b.total_cycles);
  EXPECT_EQ(a.writebacks, b.writebacks);
}

TEST(StatsCsv, RowMatchesHeader) {
  const auto r = run(small_run(PolicyMode::BardH, Generator::UniformRandom, 5000));
  const auto& cols = stats_columns();
  for (const char* need : {"policy", "seed", "workload", "wblp_mean", "write_mode_frac", "w2w_mean_cycles",
                           "w2w_max_cycles", "mpka", "wpka", "total_cycles", "overrides", "cleanses",
                           "lru_evictions", "extra_wb_ratio"})
    EXPECT_NE(std::find(cols.begin(), cols.end(), need), cols.end()) << need;
  const auto row = stats_row(r, "mc.wrq_capacity=48");
  EXPECT_EQ(std::count(row.begin(), row.end(), ',') + 1, static_cast<long>(cols.size()));
  std::ostringstream os;
  write_config_header(os, small_run(PolicyMode::BardH));
  EXPECT_EQ(os.str().rfind("# ", 0), 0u);
  EXPECT_NE(os.str().find("# policy.mode=bard-h"), std::string::npos);
}
