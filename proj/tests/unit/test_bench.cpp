#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"

using namespace ggsa;

TEST(FlopModel, GlobalAndGroupClosedForms) {
  const FlopModel g = flop_count(200, 300, 6, 10, AttentionKind::kGlobal);
  const FlopModel s = flop_count(200, 300, 6, 10, AttentionKind::kGroup);
  EXPECT_EQ(g.core, 2ull * 200 * 200 * 300);
  EXPECT_EQ(s.core, 2ull * 200 * 10 * 300);
  EXPECT_EQ(g.projection, 4ull * 200 * 300 * 300);
  EXPECT_EQ(g.projection, s.projection);
}

TEST(FlopModel, RatioIsNumberOfGroups) {
  EXPECT_EQ(core_ratio(flop_count(200, 300, 6, 10, AttentionKind::kGlobal),
                       flop_count(200, 300, 6, 10, AttentionKind::kGroup)),
            20.0);
  EXPECT_EQ(core_ratio(flop_count(50, 64, 4, 10, AttentionKind::kGlobal),
                       flop_count(50, 64, 4, 10, AttentionKind::kGroup)),
            5.0);
  EXPECT_EQ(core_ratio(flop_count(30, 64, 4, 30, AttentionKind::kGlobal),
                       flop_count(30, 64, 4, 30, AttentionKind::kGroup)),
            1.0);
  for (std::size_t l : {1, 2, 4, 5, 8, 10, 16, 20, 25, 40})
    EXPECT_EQ(core_ratio(flop_count(400, 16, 2, l, AttentionKind::kGlobal),
                         flop_count(400, 16, 2, l, AttentionKind::kGroup)),
              400.0 / static_cast<double>(l));
}

TEST(FlopModel, PartialGroupsAndLocalCountedExactly) {
  // L=7, l=3, offsets {0, 1}: head 0 groups 3,3,1; head 1 groups 1,3,3.
  const FlopModel m = flop_count(7, 4, 2, 3, AttentionKind::kGroup, {0, 1});
  EXPECT_EQ(m.core, 2ull * 2 * (9 + 9 + 1) * 2);
  EXPECT_EQ(flop_count(7, 4, 2, 3, AttentionKind::kLocal).core, 2ull * 7 * 7 * 4);
  EXPECT_THROW(flop_count(0, 4, 2, 3, AttentionKind::kGroup), ConfigError);
  EXPECT_THROW(flop_count(7, 5, 2, 3, AttentionKind::kGroup), ConfigError);
  EXPECT_THROW(flop_count(7, 4, 2, 3, AttentionKind::kGroup, {0, 3}), ConfigError);
}

TEST(FlopModel, InstrumentedKernelsMatchTheModel) {
  std::mt19937_64 rng(1);
  for (std::size_t len : {1, 5, 9, 12})
    for (std::size_t l : {1, 2, 3, 4}) {
      Rng prng(len * 10 + l);
      const std::vector<std::size_t> offsets{0, l / 2};
      auto p = AttentionParams<double>::xavier(8, 2, offsets, prng, "");
      const auto x = oracle::tensor(oracle::random_mat(8, len, rng));
      auto measure = [&](auto&& f) {
        FlopTally t;
        ScopedFlopTally scope(t);
        Tape<double> tape;
        f(tape.constant(x));
        return t;
      };
      const FlopTally global = measure([&](Var<double> v) { multi_head_attention(v, p, all_valid(len), 2.0); });
      const FlopTally group =
          measure([&](Var<double> v) { group_multi_head_attention(v, p, l, all_valid(len), 2.0); });
      const FlopTally local =
          measure([&](Var<double> v) { local_window_attention(v, p, 2 * l + 1, all_valid(len), 2.0); });
      const FlopModel mg = flop_count(len, 8, 2, l, AttentionKind::kGlobal, offsets);
      const FlopModel ms = flop_count(len, 8, 2, l, AttentionKind::kGroup, offsets);
      const FlopModel ml = flop_count(len, 8, 2, l, AttentionKind::kLocal, offsets);
      EXPECT_EQ(global.core, mg.core);
      EXPECT_EQ(group.core, ms.core) << "L=" << len << " l=" << l;
      EXPECT_EQ(local.core, ml.core);
      EXPECT_EQ(global.projection, mg.projection);
      EXPECT_EQ(group.projection, ms.projection);
    }
}

TEST(BenchReport, RecordRoundTrips) {
  BenchReport r;
  r.kind = AttentionKind::kLocal;
  r.length = 2000;
  r.dim = 64;
  r.heads = 4;
  r.group_size = 10;
  r.window = 11;
  r.flops_core = 512000000;
  r.median_seconds = 0.0123456789012345;
  r.reps = 9;
  r.warmups = 2;
  r.note = "laptop, 1 thread = fine";
  EXPECT_EQ(parse_record(to_record(r)), r);
  r.note.clear();
  EXPECT_EQ(parse_record(to_record(r)), r);
  EXPECT_THROW(parse_record("kind=global L=x"), DataError);
}

TEST(BenchReport, CsvRowMatchesHeader) {
  EXPECT_EQ(kBenchCsvHeader, "variant,L,D,n,l,flops_core,median_seconds,reps");
  BenchReport r;
  r.kind = AttentionKind::kGroup;
  r.length = 250;
  r.dim = 64;
  r.heads = 4;
  r.group_size = 10;
  r.flops_core = 320000;
  r.median_seconds = 0.5;
  r.reps = 9;
  EXPECT_EQ(to_csv_row(r), "group,250,64,4,10,320000,0.5,9");
}

TEST(Bench, HelpersAndSmallSweep) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  BenchOptions opt;
  EXPECT_EQ(resolved_window(opt), 11u);
  opt.group_size = 7;
  EXPECT_EQ(resolved_window(opt), 7u);
  opt.window = 5;
  EXPECT_EQ(resolved_window(opt), 5u);

  BenchOptions small;
  small.lengths = {20, 80};
  small.dim = 16;
  small.heads = 2;
  small.group_size = 4;
  small.reps = 5;
  small.warmups = 2;
  const auto reports = bench_attention(small);
  ASSERT_EQ(reports.size(), 6u);
  for (const BenchReport& r : reports) {
    EXPECT_GT(r.median_seconds, 0.0);
    EXPECT_EQ(r.reps, 5u);
    EXPECT_EQ(r.flops_core, flop_count(r.length, 16, 2, 4, r.kind).core);
    EXPECT_EQ(r.window, r.kind == AttentionKind::kLocal ? 5u : 0u);
  }
  auto seconds = [&](AttentionKind k, std::size_t len) {
    for (const BenchReport& r : reports)
      if (r.kind == k && r.length == len) return r.median_seconds;
    return 0.0;
  };
  EXPECT_GT(seconds(AttentionKind::kGlobal, 80), seconds(AttentionKind::kGlobal, 20));
  EXPECT_EQ(parse_attention_kind("local"), AttentionKind::kLocal);
  EXPECT_THROW(parse_attention_kind("dilated"), ConfigError);
}
