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

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "reqaug/error.h"
#include "reqaug/ingest.h"
#include "reqaug_test_support.h"

namespace reqaug {
namespace {

using testing::corpus_of;
using testing::record;
using testing::TempDir;
using testing::write_text;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no reqaug::Error thrown";
  return ErrorCode::kCorruptArtifact;
}

TEST(Normalize, RequestLineWithQuery) {
  EXPECT_EQ(normalize_request("GET /pagar.jsp?modo=insertar HTTP/1.1"),
            "get /pagar.jsp modo=insertar");
}

TEST(Normalize, AlreadyNormalized) { EXPECT_EQ(normalize_request("get /a"), "get /a"); }

TEST(Normalize, PercentDecodedOnce) {
  EXPECT_EQ(normalize_request("GET /x?q=a%27"), "get /x q=a'");
  EXPECT_EQ(normalize_request("GET /x?q=a%2527"), "get /x q=a%27");
}

TEST(Normalize, SchemeHostAndBody) {
  const std::string raw =
      "POST http://localhost:8080/tienda1/publico/anadir.jsp HTTP/1.1\n"
      "Host: localhost:8080\n"
      "Content-Type: application/x-www-form-urlencoded\n"
      "\n"
      "id=3&nombre=Vino+Rioja\n";
  EXPECT_EQ(normalize_request(raw), "post /tienda1/publico/anadir.jsp id=3&nombre=vino rioja");
}

TEST(Normalize, BlankInputIsError) {
  EXPECT_EQ(code_of([] { normalize_request("  \n\n"); }), ErrorCode::kEmptyRequest);
}

TEST(Normalize, MalformedEscapePassesThrough) {
  EXPECT_EQ(percent_decode("a%zzb%4", false), "a%zzb%4");
  EXPECT_EQ(percent_decode("a+b", true), "a b");
  EXPECT_EQ(percent_decode("a+b", false), "a+b");
}

std::vector<std::string> texts(const TokenizedRequest& t) { return t.texts(); }

TEST(Tokenize, FigureRequest) {
  const auto t = tokenize_entities("get /pagar.jsp modo=insertar");
  EXPECT_EQ(texts(t), (std::vector<std::string>{"get", "/", "pagar", ".", "jsp", "modo", "=",
                                                "insertar"}));
  EXPECT_EQ(t.tokens[7].position, 7u);
  EXPECT_EQ(t.tokens[1].kind, TokenKind::kPunctuation);
}

TEST(Tokenize, Empty) {
  const auto t = tokenize_entities("");
  EXPECT_TRUE(t.tokens.empty());
  EXPECT_EQ(t.separators.size(), 1u);
  EXPECT_EQ(t.detokenize(), "");
}

TEST(Tokenize, QueryString) {
  const auto t = tokenize_entities("a=1&b=2");
  EXPECT_EQ(texts(t), (std::vector<std::string>{"a", "=", "1", "&", "b", "=", "2"}));
  EXPECT_EQ(t.tokens[2].kind, TokenKind::kNumber);
  EXPECT_EQ(t.tokens[0].kind, TokenKind::kWord);
}

bool is_alnum_ascii(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

TEST(Tokenize, RoundTripAndShapeOnRandomAscii) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::string s = testing::random_ascii(rng, 80);
    const auto t = tokenize_entities(s);
    ASSERT_EQ(t.separators.size(), t.tokens.size() + 1);
    ASSERT_EQ(t.detokenize(), s);
    for (std::size_t i = 0; i < t.tokens.size(); ++i) {
      const auto& tok = t.tokens[i];
      ASSERT_EQ(tok.position, i);
      ASSERT_FALSE(tok.text.empty());
      const bool alnum = std::all_of(tok.text.begin(), tok.text.end(), is_alnum_ascii);
      const bool punct = tok.text.size() == 1 && !is_alnum_ascii(tok.text[0]) && tok.text[0] != ' ';
      ASSERT_TRUE(alnum != punct) << "mixed token '" << tok.text << "' in '" << s << "'";
      ASSERT_EQ(tok.kind == TokenKind::kPunctuation, punct);
    }
  }
}

TEST(Corpus, TalliesFollowInsertions) {
  RequestCorpus c;
  c.add(record("a", "get /a"));
  c.add(record("b", "get /b", Label::kAbnormal));
  c.add(record("c", "get /c", Label::kAbnormal));
  EXPECT_EQ(c.count(Label::kNormal), 1u);
  EXPECT_EQ(c.count(Label::kAbnormal), 2u);
  EXPECT_EQ(c.filter(Label::kAbnormal).size(), 2u);
}

TEST(Load, CanonicalKeepsEveryRecord) {
  TempDir dir;
  RequestCorpus c;
  c.add(record("a", "get /a"));
  c.add(record("b", "get /b q=1", Label::kAbnormal));
  auto third = record("c", "post /c x=y");
  third.attack_type = "SQLi";
  third.split = Split::kTest;
  c.add(third);
  write_canonical(c, dir / "c.jsonl");
  LoadStats stats;
  const RequestCorpus back = load_corpus(dir / "c.jsonl", CorpusFormat::kCanonical, &stats);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(stats.parsed, 3u);
  EXPECT_EQ(back.records(), c.records());
}

TEST(Load, CanonicalSkipsMalformedLines) {
  TempDir dir;
  write_text(dir / "c.jsonl",
             "{\"id\":\"a\",\"raw\":\"get /a\",\"label\":\"normal\"}\n"
             "not json\n"
             "{\"id\":\"a\",\"raw\":\"get /dup\",\"label\":\"normal\"}\n"
             "{\"id\":\"b\",\"raw\":\"get /b\",\"label\":\"abnormal\"}\n");
  LoadStats stats;
  const RequestCorpus c = load_corpus(dir / "c.jsonl", CorpusFormat::kCanonical, &stats);
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(stats.malformed, 2u);
}

TEST(Load, CsicRawLabelsFromFileNames) {
  TempDir dir;
  std::filesystem::create_directories(dir / "csic");
  write_text(dir / "csic" / "normalTrafficTraining.txt",
             "GET http://localhost:8080/tienda1/index.jsp HTTP/1.1\n"
             "User-Agent: Mozilla/5.0\n"
             "Host: localhost:8080\n"
             "\n"
             "\n"
             "POST http://localhost:8080/tienda1/publico/pagar.jsp HTTP/1.1\n"
             "Content-Type: application/x-www-form-urlencoded\n"
             "Content-Length: 12\n"
             "\n"
             "modo=insertar\n"
             "\n");
  write_text(dir / "csic" / "anomalousTrafficTest.txt",
             "GET http://localhost:8080/tienda1/publico/pagar.jsp?modo=%27+or+1%3D1 HTTP/1.1\n"
             "Host: localhost:8080\n\n");
  const RequestCorpus c = load_corpus(dir / "csic", CorpusFormat::kCsicRaw);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.count(Label::kNormal), 2u);
  EXPECT_EQ(c.count(Label::kAbnormal), 1u);
  std::set<std::string> raws;
  for (const auto& r : c.records()) {
    raws.insert(r.raw);
    EXPECT_EQ(r.source_dataset, "csic2010");
  }
  EXPECT_TRUE(raws.count("get /tienda1/index.jsp"));
  EXPECT_TRUE(raws.count("post /tienda1/publico/pagar.jsp modo=insertar"));
  EXPECT_TRUE(raws.count("get /tienda1/publico/pagar.jsp modo=' or 1=1"));
}

TEST(Load, CsicUnlabeledFileName) {
  TempDir dir;
  write_text(dir / "traffic.txt", "GET /a HTTP/1.1\n\n");
  EXPECT_EQ(code_of([&] { load_corpus(dir / "traffic.txt", CorpusFormat::kCsicRaw); }),
            ErrorCode::kUnknownFormat);
}

TEST(Load, AtrdfAttackTagMarksAbnormal) {
  TempDir dir;
  write_text(dir / "atrdf.json", R"([
    {"request": {"method": "GET", "url": "http://127.0.0.1:5000/orders/get/country?country=US",
                 "headers": {"Host": "127.0.0.1:5000", "User-Agent": "curl/8"}, "body": ""},
     "response": {"status_code": 200}},
    {"request": {"method": "POST", "url": "http://127.0.0.1:5000/login",
                 "headers": {"Content-Type": "application/json"},
                 "body": "{\"user\": \"a' or 1=1 --\"}", "Attack_Tag": "SQL Injection"},
     "response": {"status_code": 500}},
    {"request": {"url": "/missing-method"}}
  ])");
  LoadStats stats;
  const RequestCorpus c = load_corpus(dir / "atrdf.json", CorpusFormat::kAtrdf, &stats);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(stats.malformed, 1u);
  EXPECT_EQ(c[0].label, Label::kNormal);
  EXPECT_EQ(c[0].raw, "get /orders/get/country country=us user-agent: curl/8");
  EXPECT_EQ(c[1].label, Label::kAbnormal);
  EXPECT_EQ(c[1].attack_type, "SQL Injection");
  EXPECT_EQ(c[1].source_dataset, "atrdf2023");
}

TEST(Load, Errors) {
  TempDir dir;
  EXPECT_EQ(code_of([&] { load_corpus(dir / "nope.jsonl", CorpusFormat::kCanonical); }),
            ErrorCode::kUnreadablePath);
  write_text(dir / "empty.jsonl", "\n");
  EXPECT_EQ(code_of([&] { load_corpus(dir / "empty.jsonl", CorpusFormat::kCanonical); }),
            ErrorCode::kEmptyCorpus);
  write_text(dir / "bad.json", "[ not json");
  EXPECT_EQ(code_of([&] { load_corpus(dir / "bad.json", CorpusFormat::kAtrdf); }),
            ErrorCode::kUnknownFormat);
}

RequestCorpus labeled(std::size_t normal, std::size_t abnormal) {
  RequestCorpus c;
  for (std::size_t i = 0; i < normal + abnormal; ++i) {
    c.add(record("id" + std::to_string(i), "get /p" + std::to_string(i),
                 i < normal ? Label::kNormal : Label::kAbnormal));
  }
  return c;
}

void expect_partition(const RequestCorpus& corpus, const CorpusSplit& split) {
  ASSERT_EQ(split.train.size() + split.test.size(), corpus.size());
  std::set<std::string> ids;
  for (const auto& r : split.train.records()) {
    EXPECT_EQ(r.split, Split::kTrain);
    ids.insert(r.id);
  }
  for (const auto& r : split.test.records()) {
    EXPECT_EQ(r.split, Split::kTest);
    EXPECT_TRUE(ids.insert(r.id).second) << r.id << " on both sides";
  }
  EXPECT_EQ(ids.size(), corpus.size());
}

TEST(Split, TenRecords) {
  const RequestCorpus c = labeled(5, 5);
  const CorpusSplit s = split_corpus(c, 0.7, 1);
  expect_partition(c, s);
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.test.size(), 3u);
  for (Label l : {Label::kNormal, Label::kAbnormal}) {
    EXPECT_GE(s.train.count(l), 3u);
    EXPECT_LE(s.train.count(l), 4u);
  }
}

TEST(Split, TwoRecordsOnePerLabel) {
  const RequestCorpus c = labeled(1, 1);
  const CorpusSplit s = split_corpus(c, 0.5, 0);
  expect_partition(c, s);
  EXPECT_EQ(s.train.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
}

TEST(Split, SameSeedSameSplit) {
  const RequestCorpus c = labeled(30, 12);
  const CorpusSplit a = split_corpus(c, 0.7, 9);
  const CorpusSplit b = split_corpus(c, 0.7, 9);
  EXPECT_EQ(a.train.records(), b.train.records());
  EXPECT_EQ(a.test.records(), b.test.records());
  const CorpusSplit other = split_corpus(c, 0.7, 10);
  EXPECT_NE(a.train.records(), other.train.records());
}

// Per-label train counts are the floor or ceiling of fraction * count and sum
// to the rounded global train count.
TEST(Split, StratifiedCountsOnRandomCorpora) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> n(2, 60);
  std::uniform_real_distribution<double> frac(0.2, 0.8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t normal = n(rng);
    const std::size_t abnormal = n(rng);
    const double f = frac(rng);
    const RequestCorpus c = labeled(normal, abnormal);
    CorpusSplit s;
    try {
      s = split_corpus(c, f, trial);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kDegenerateSplit);
      continue;
    }
    expect_partition(c, s);
    const auto total = static_cast<std::size_t>(std::floor(f * static_cast<double>(normal + abnormal) + 0.5));
    EXPECT_EQ(s.train.size(), total);
    for (auto [label, count] : {std::pair{Label::kNormal, normal}, std::pair{Label::kAbnormal, abnormal}}) {
      const double exact = f * static_cast<double>(count);
      EXPECT_GE(s.train.count(label), static_cast<std::size_t>(std::floor(exact)));
      EXPECT_LE(s.train.count(label), static_cast<std::size_t>(std::ceil(exact)));
      EXPECT_GE(s.test.count(label), 1u);
      EXPECT_GE(s.train.count(label), 1u);
    }
  }
}

TEST(Split, Errors) {
  EXPECT_EQ(code_of([] { split_corpus(labeled(3, 3), 1.0, 0); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([] { split_corpus(labeled(3, 3), 0.0, 0); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([] { split_corpus(labeled(3, 30), 0.1, 0); }), ErrorCode::kDegenerateSplit);
}

TEST(Smoke, ShapeAndDeterminism) {
  const RequestCorpus a = make_smoke_corpus(150, 50, 7);
  const RequestCorpus b = make_smoke_corpus(150, 50, 7);
  EXPECT_EQ(a.records(), b.records());
  EXPECT_EQ(a.count(Label::kNormal), 150u);
  EXPECT_EQ(a.count(Label::kAbnormal), 50u);
  std::map<std::string, int> attacks;
  for (const auto& r : a.records()) {
    EXPECT_EQ(r.raw.find("  "), std::string::npos);
    EXPECT_TRUE(std::none_of(r.raw.begin(), r.raw.end(), [](char c) { return c >= 'A' && c <= 'Z'; }));
    if (r.label == Label::kAbnormal) {
      ASSERT_TRUE(r.attack_type.has_value());
      ++attacks[*r.attack_type];
    } else {
      EXPECT_FALSE(r.attack_type.has_value());
    }
  }
  EXPECT_EQ(attacks.size(), 2u);
}

TEST(Json, RecordRoundTrip) {
  auto r = record("x-1", "get /a b=c", Label::kAbnormal);
  r.attack_type = "XSS";
  r.split = Split::kTrain;
  EXPECT_EQ(record_from_json(record_to_json(r)), r);
  EXPECT_EQ(parse_label(label_name(Label::kAbnormal)), Label::kAbnormal);
  EXPECT_EQ(parse_split(split_name(Split::kTest)), Split::kTest);
  EXPECT_EQ(parse_corpus_format(corpus_format_name(CorpusFormat::kAtrdf)), CorpusFormat::kAtrdf);
}

}  // namespace
}  // namespace reqaug
