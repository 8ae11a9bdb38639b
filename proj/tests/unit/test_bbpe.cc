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

#include <map>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "reqaug/bbpe.h"
#include "reqaug/error.h"
#include "reqaug_test_support.h"

namespace reqaug {
namespace {

using testing::corpus_of;

std::string random_bytes(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> byte(0, 255);
  std::string s(len(rng), '\0');
  for (auto& c : s) c = static_cast<char>(byte(rng));
  return s;
}

TEST(Bbpe, IdentityTokenizer) {
  const auto tok = train_bbpe(corpus_of({"get /a", "get /b"}), kFirstMergeId);
  EXPECT_TRUE(tok.merges().empty());
  EXPECT_EQ(tok.vocab_size(), static_cast<std::size_t>(kFirstMergeId));
  const auto ids = tok.encode("get");
  EXPECT_EQ(ids, (std::vector<int>{kFirstByteId + 'g', kFirstByteId + 'e', kFirstByteId + 't'}));
}

TEST(Bbpe, VocabTooSmall) {
  try {
    train_bbpe(corpus_of({"a"}), kFirstMergeId - 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVocabTooSmall);
  }
}

TEST(Bbpe, FirstMergeOnRepeatedA) {
  const auto tok = train_bbpe(corpus_of({"aaaa", "aaaa", "aaaa"}), kFirstMergeId + 1);
  ASSERT_EQ(tok.merges().size(), 1u);
  EXPECT_EQ(tok.symbol(tok.merges()[0].first), "a");
  EXPECT_EQ(tok.symbol(tok.merges()[0].second), "a");
  EXPECT_EQ(tok.symbol(kFirstMergeId), "aa");
}

TEST(Bbpe, MergedPairEncodesToOneId) {
  const auto tok = train_bbpe(corpus_of({"ge ge ge", "get"}), kFirstMergeId + 1);
  ASSERT_EQ(tok.merges().size(), 1u);
  EXPECT_EQ(tok.symbol(kFirstMergeId), "ge");
  EXPECT_EQ(tok.encode("ge"), std::vector<int>{kFirstMergeId});
}

TEST(Bbpe, EncodeEmpty) {
  const BbpeTokenizer tok;
  EXPECT_TRUE(tok.encode("").empty());
  EXPECT_EQ(tok.decode(std::vector<int>{}), "");
}

TEST(Bbpe, RoundTripRandomBytes) {
  const auto tok = train_bbpe(make_smoke_corpus(100, 30, 1), 600);
  EXPECT_GT(tok.merges().size(), 50u);
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const std::string s = random_bytes(rng, 128);
    const auto ids = tok.encode(s);
    ASSERT_EQ(tok.decode(ids), s);
  }
  EXPECT_EQ(tok.decode(tok.encode("get /a")), "get /a");
}

TEST(Bbpe, PiecesStayInsidePretokens) {
  const auto tok = train_bbpe(corpus_of({"a=b a=b a=b", "x/y x/y"}), 300);
  for (int id = kFirstMergeId; id < static_cast<int>(tok.vocab_size()); ++id) {
    const auto chunks = pretokenize(tok.symbol(id));
    EXPECT_EQ(chunks.size(), 1u) << "'" << tok.symbol(id) << "'";
  }
}

TEST(Bbpe, DecodeSpecialsAndUnknown) {
  const BbpeTokenizer tok;
  EXPECT_EQ(tok.decode(std::vector<int>{kMaskId}), "<MASK>");
  try {
    tok.decode(std::vector<int>{static_cast<int>(tok.vocab_size())});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownId);
  }
  EXPECT_THROW(tok.decode(std::vector<int>{-1}), Error);
}

// Most frequent adjacent byte pair inside pretokens; ties to the smallest pair.
std::pair<std::string, std::string> brute_force_first_pair(const RequestCorpus& corpus) {
  std::map<std::pair<std::string, std::string>, long> counts;
  for (const auto& r : corpus.records()) {
    for (auto chunk : pretokenize(r.raw)) {
      for (std::size_t i = 0; i + 1 < chunk.size(); ++i) {
        ++counts[{std::string(1, chunk[i]), std::string(1, chunk[i + 1])}];
      }
    }
  }
  std::pair<std::string, std::string> best;
  long best_count = 0;
  for (const auto& [pair, c] : counts) {
    if (c > best_count) {
      best = pair;
      best_count = c;
    }
  }
  return best;
}

TEST(Bbpe, FirstMergeMatchesPairCountOracle) {
  std::mt19937_64 rng(8);
  const std::string alphabet = "abc=/ ";
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::string> raws;
    for (int i = 0; i < 6; ++i) {
      std::string s;
      const int len = std::uniform_int_distribution<int>(3, 20)(rng);
      for (int j = 0; j < len; ++j) s += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
      raws.push_back(s);
    }
    const auto corpus = corpus_of(raws);
    const auto tok = train_bbpe(corpus, kFirstMergeId + 1);
    const auto expected = brute_force_first_pair(corpus);
    if (tok.merges().empty()) continue;
    EXPECT_EQ(tok.symbol(tok.merges()[0].first), expected.first);
    EXPECT_EQ(tok.symbol(tok.merges()[0].second), expected.second);
  }
}

TEST(Bbpe, SymbolsAreUnique) {
  const auto tok = train_bbpe(make_smoke_corpus(60, 20, 2), 800);
  std::map<std::string, int> seen;
  for (int id = kFirstByteId; id < static_cast<int>(tok.vocab_size()); ++id) {
    EXPECT_TRUE(seen.emplace(tok.symbol(id), id).second) << tok.symbol(id);
    EXPECT_EQ(tok.id_of(tok.symbol(id)), id);
  }
}

TEST(Bbpe, SaveLoad) {
  testing::TempDir dir;
  const auto tok = train_bbpe(make_smoke_corpus(40, 10, 4), 500);
  tok.save(dir.path());
  const auto back = BbpeTokenizer::load(dir.path());
  EXPECT_EQ(back.merges(), tok.merges());
  EXPECT_EQ(back.vocab_size(), tok.vocab_size());
  const std::string probe = "get /tienda1/publico/pagar.jsp modo=insertar";
  EXPECT_EQ(back.encode(probe), tok.encode(probe));
}

TEST(Bbpe, Deterministic) {
  const auto corpus = make_smoke_corpus(50, 10, 5);
  EXPECT_EQ(train_bbpe(corpus, 500).merges(), train_bbpe(corpus, 500).merges());
}

}  // namespace
}  // namespace reqaug
