//
// Copyright 2026 The reqaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "reqaug/error.h"
#include "reqaug/lexicon.h"
#include "reqaug_test_support.h"

namespace reqaug {
namespace {

using testing::corpus_of;

// Inverse of the one-sided normal CDF by bisection on erfc.
double z_by_bisection(double confidence) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < confidence ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::map<std::string, std::uint64_t> counts_of(std::initializer_list<std::uint64_t> values) {
  std::map<std::string, std::uint64_t> m;
  int i = 0;
  for (auto v : values) m["t" + std::to_string(i++)] = v;
  return m;
}

TEST(FrequencyTable, HandCount) {
  const auto table = build_frequency_table(corpus_of({"a a", "b a"}));
  EXPECT_EQ(table.count("a"), 3u);
  EXPECT_EQ(table.count("b"), 1u);
  const auto small = build_frequency_table(corpus_of({"a a b"}));
  EXPECT_EQ(small.count("a"), 2u);
  EXPECT_DOUBLE_EQ(small.mean(), 1.5);
  EXPECT_DOUBLE_EQ(small.std(), 0.5);
  EXPECT_EQ(small.total(), 3u);
}

TEST(FrequencyTable, SingleToken) {
  const auto table = build_frequency_table(corpus_of({"x"}));
  EXPECT_DOUBLE_EQ(table.mean(), 1.0);
  EXPECT_DOUBLE_EQ(table.std(), 0.0);
}

TEST(FrequencyTable, PunctuationCounts) {
  const auto table = build_frequency_table(corpus_of({"get /a/b c=1"}));
  EXPECT_EQ(table.count("/"), 2u);
  EXPECT_EQ(table.count("="), 1u);
  EXPECT_EQ(table.count("1"), 1u);
  EXPECT_EQ(table.distinct(), 7u);
}

TEST(FrequencyTable, ConcatenationAddsCounts) {
  const auto a = corpus_of({"get /a x=1", "get /b"});
  const auto b = corpus_of({"post /a y=2"});
  RequestCorpus both = a;
  for (const auto& r : b.records()) {
    auto copy = r;
    copy.id += "-b";
    both.add(copy);
  }
  const auto merged = build_frequency_table(a).merged(build_frequency_table(b));
  EXPECT_EQ(merged.counts(), build_frequency_table(both).counts());
  EXPECT_DOUBLE_EQ(merged.mean(), build_frequency_table(both).mean());
}

TEST(ZScore, Values) {
  EXPECT_EQ(z_from_confidence(0.5), 0.0);
  EXPECT_NEAR(z_from_confidence(0.9999), 3.719, 1e-3);
  EXPECT_NEAR(z_from_confidence(0.9999), z_by_bisection(0.9999), 1e-9);
  EXPECT_EQ(z_from_confidence(0.9999, 5.73), 5.73);
  EXPECT_EQ(z_from_confidence(7.0, 5.73), 5.73);
}

TEST(ZScore, MatchesBisectionAndIncreases) {
  double prev = -1e300;
  for (double c = 0.01; c < 0.9999; c += 0.0137) {
    const double z = z_from_confidence(c);
    EXPECT_NEAR(z, z_by_bisection(c), 1e-8) << c;
    EXPECT_GT(z, prev);
    prev = z;
  }
}

TEST(ZScore, OutOfRange) {
  for (double c : {0.0, 1.0, -0.1, 1.5}) {
    try {
      z_from_confidence(c);
      ADD_FAILURE() << c;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
    }
  }
}

TEST(Threshold, HandComputed) {
  const TokenFrequencyTable table(counts_of({1, 1, 1, 1, 10}));
  EXPECT_NEAR(table.mean(), 2.8, 1e-12);
  EXPECT_NEAR(table.std(), 3.6, 1e-12);
  const double t = frequency_threshold(table, 1.0);
  EXPECT_NEAR(t, 6.4, 1e-12);
  EXPECT_DOUBLE_EQ(frequency_threshold(table, 0.0), table.mean());
  const auto reserved = reserved_tokens(table, t);
  EXPECT_EQ(reserved.tokens, (std::set<std::string>{"t4"}));
  EXPECT_TRUE(reserved_tokens(table, 10.0).tokens.empty()) << "strictly above";
  EXPECT_TRUE(reserved_tokens(table, 11.0).tokens.empty());
}

TEST(Threshold, RandomTablesMatchOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::string, std::uint64_t> counts;
    const int n = std::uniform_int_distribution<int>(1, 300)(rng);
    std::uniform_int_distribution<std::uint64_t> count(1, trial % 2 ? 50 : 100000);
    for (int i = 0; i < n; ++i) counts["w" + std::to_string(i)] = count(rng);
    const TokenFrequencyTable table(counts);
    double sum = 0.0;
    for (const auto& [t, c] : counts) sum += static_cast<double>(c);
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& [t, c] : counts) ss += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
    const double sd = std::sqrt(ss / n);
    const double z = std::uniform_real_distribution<double>(0.0, 6.0)(rng);
    const double expected = mean + z * sd;
    const double t = frequency_threshold(table, z);
    EXPECT_LE(std::abs(t - expected), 1e-9 * std::max(1.0, std::abs(expected)));
    std::set<std::string> oracle;
    for (const auto& [tok, c] : counts) {
      if (static_cast<double>(c) > t) oracle.insert(tok);
    }
    EXPECT_EQ(reserved_tokens(table, t).tokens, oracle);
  }
}

TEST(Threshold, Monotone) {
  std::mt19937_64 rng(3);
  std::map<std::string, std::uint64_t> counts;
  for (int i = 0; i < 100; ++i) counts["w" + std::to_string(i)] = std::uniform_int_distribution<int>(1, 90)(rng);
  const TokenFrequencyTable table(counts);
  for (double t1 = 0.0; t1 < 90.0; t1 += 3.5) {
    const auto loose = reserved_tokens(table, t1).tokens;
    const auto strict = reserved_tokens(table, t1 + 2.0).tokens;
    for (const auto& tok : strict) EXPECT_TRUE(loose.count(tok)) << tok;
  }
}

TEST(Threshold, ScalingCounts) {
  std::map<std::string, std::uint64_t> counts = counts_of({3, 9, 1, 27, 4, 4, 100});
  std::map<std::string, std::uint64_t> scaled;
  for (const auto& [t, c] : counts) scaled[t] = 7 * c;
  const TokenFrequencyTable a(counts), b(scaled);
  EXPECT_NEAR(b.mean(), 7 * a.mean(), 1e-9);
  EXPECT_NEAR(b.std(), 7 * a.std(), 1e-9);
  const double ta = frequency_threshold(a, 1.3);
  const double tb = frequency_threshold(b, 1.3);
  EXPECT_NEAR(tb, 7 * ta, 1e-9);
  EXPECT_EQ(reserved_tokens(a, ta).tokens, reserved_tokens(b, tb).tokens);
}

TEST(Threshold, NegativeThresholdRejected) {
  const TokenFrequencyTable table(counts_of({1, 2}));
  EXPECT_THROW(reserved_tokens(table, -1.0), Error);
}

TEST(ReservedFile, RoundTripWithOddBytes) {
  testing::TempDir dir;
  ReservedTokenSet set;
  set.tokens = {"/", "=", "get", "tab\there", "new\nline", "\\"};
  set.threshold = 12.5;
  set.z = 5.73;
  set.confidence = 0.9999;
  write_reserved_tokens(set, dir / "reserved.txt");
  const auto back = read_reserved_tokens(dir / "reserved.txt");
  EXPECT_EQ(back.tokens, set.tokens);
  EXPECT_DOUBLE_EQ(back.threshold, set.threshold);
  EXPECT_DOUBLE_EQ(back.z, set.z);
  EXPECT_EQ(back.confidence, set.confidence);
}

}  // namespace
}  // namespace reqaug
