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

#ifndef REQAUG_INGEST_H_
#define REQAUG_INGEST_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace reqaug {

enum class Label { kNormal = 0, kAbnormal = 1 };
enum class Split { kTrain, kTest };

std::string_view label_name(Label label);
Label parse_label(std::string_view text);
std::string_view split_name(Split split);
Split parse_split(std::string_view text);

// One labeled API request. `raw` is the normalized request text.
struct RawRequestRecord {
  std::string id;
  std::string raw;
  Label label = Label::kNormal;
  std::optional<std::string> attack_type;
  std::string source_dataset;
  std::optional<Split> split;

  bool operator==(const RawRequestRecord&) const = default;
};

enum class TokenKind { kWord, kNumber, kPunctuation };

struct EntityToken {
  std::string text;
  std::size_t position = 0;
  TokenKind kind = TokenKind::kWord;

  bool operator==(const EntityToken&) const = default;
};

// Entity tokens plus the whitespace around them. separators[i] precedes
// tokens[i]; separators.back() trails the last token, so
// separators.size() == tokens.size() + 1.
struct TokenizedRequest {
  std::vector<EntityToken> tokens;
  std::vector<std::string> separators;

  std::size_t size() const { return tokens.size(); }
  std::string detokenize() const;
  std::vector<std::string> texts() const;
};

// Ordered records with label tallies kept in sync on every insertion.
class RequestCorpus {
 public:
  RequestCorpus() = default;
  explicit RequestCorpus(std::vector<RawRequestRecord> records);

  void add(RawRequestRecord record);

  const std::vector<RawRequestRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t count(Label label) const {
    return label == Label::kNormal ? normal_ : abnormal_;
  }
  const RawRequestRecord& operator[](std::size_t i) const {
    return records_[i];
  }

  // Records carrying `label`, in corpus order.
  RequestCorpus filter(Label label) const;

 private:
  std::vector<RawRequestRecord> records_;
  std::size_t normal_ = 0;
  std::size_t abnormal_ = 0;
};

struct CorpusSplit {
  RequestCorpus train;
  RequestCorpus test;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
};

enum class CorpusFormat { kCsicRaw, kAtrdf, kCanonical, kSmoke };

CorpusFormat parse_corpus_format(std::string_view text);
std::string_view corpus_format_name(CorpusFormat format);

struct NormalizeOptions {
  bool include_headers = false;
  // Lowercased header names left out even when headers are included.
  std::set<std::string> skipped_headers = {
      "host",           "content-length", "connection",   "accept-encoding",
      "accept-charset", "date",           "cache-control", "pragma"};
};

// Canonicalizes a raw HTTP request (or bare request line) into the
// single-line lowercase form every later stage consumes: method, path, query,
// optional headers and body joined by single spaces, percent-decoded once.
std::string normalize_request(std::string_view raw_http,
                              const NormalizeOptions& options = {});

// Decodes %XX escapes exactly once. Malformed escapes pass through verbatim.
std::string percent_decode(std::string_view text, bool plus_as_space);

TokenizedRequest tokenize_entities(std::string_view normalized);

struct LoadStats {
  std::size_t parsed = 0;
  std::size_t malformed = 0;
};

RequestCorpus load_corpus(const std::filesystem::path& path,
                          CorpusFormat format, LoadStats* stats = nullptr);

CorpusSplit split_corpus(const RequestCorpus& corpus, double train_fraction,
                         std::uint64_t seed);

// Labeled e-commerce style requests with SQLi and XSS attacks, shaped like
// CSIC 2010 traffic. Used for desk-scale runs and tests.
RequestCorpus make_smoke_corpus(std::size_t n_normal, std::size_t n_abnormal,
                                std::uint64_t seed);

nlohmann::json record_to_json(const RawRequestRecord& record);
RawRequestRecord record_from_json(const nlohmann::json& j);

void write_canonical(const RequestCorpus& corpus,
                     const std::filesystem::path& path);
RequestCorpus read_canonical(const std::filesystem::path& path,
                             LoadStats* stats = nullptr);

}  // namespace reqaug

#endif  // REQAUG_INGEST_H_
