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

#ifndef REQAUG_BBPE_H_
#define REQAUG_BBPE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "reqaug/ingest.h"

namespace reqaug {

// Fixed ids. Bytes follow the specials, learned merges follow the bytes.
enum SpecialId : int {
  kPadId = 0,
  kClsId = 1,
  kSepId = 2,
  kUnkId = 3,
  kMaskId = 4,
  kIgnId = 5,
};
inline constexpr int kNumSpecials = 6;
inline constexpr int kFirstByteId = kNumSpecials;
inline constexpr int kFirstMergeId = kFirstByteId + 256;

std::string_view special_text(int id);

// Byte-level BPE. Pieces never cross a pre-token boundary: a run of ASCII
// alphanumerics (or bytes >= 0x80), a single punctuation byte, or a run of
// whitespace.
class BbpeTokenizer {
 public:
  // Identity byte tokenizer with no merges.
  BbpeTokenizer();

  // Rebuilds the vocabulary by replaying `merges` in order.
  explicit BbpeTokenizer(std::vector<std::pair<int, int>> merges);

  std::vector<int> encode(std::string_view text) const;
  // Pieces of one pre-token (for example one entity token).
  std::vector<int> encode_chunk(std::string_view chunk) const;
  // Special ids decode to their literal names ("<MASK>").
  std::string decode(std::span<const int> ids) const;

  std::size_t vocab_size() const { return symbols_.size(); }
  const std::string& symbol(int id) const;
  std::optional<int> id_of(std::string_view symbol) const;
  bool is_special(int id) const { return id >= 0 && id < kNumSpecials; }
  const std::vector<std::pair<int, int>>& merges() const { return merges_; }

  // vocab.txt ("id<TAB>escaped symbol") and merges.txt ("left right").
  void save(const std::filesystem::path& dir) const;
  static BbpeTokenizer load(const std::filesystem::path& dir);

 private:
  std::vector<std::pair<int, int>> merges_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> ids_;
  // (left, right) -> merge rank
  std::unordered_map<std::uint64_t, int> ranks_;
};

// Splits text into the pre-tokens BPE operates on.
std::vector<std::string_view> pretokenize(std::string_view text);

// Greedy most-frequent-pair merging until `vocab_size` symbols exist or no
// pair occurs at least twice. Ties go to the lexicographically smallest pair.
// The procedure is deterministic, so `seed` only feeds the manifest.
BbpeTokenizer train_bbpe(const RequestCorpus& corpus, std::size_t vocab_size,
                         std::uint64_t seed = 0);

}  // namespace reqaug

#endif  // REQAUG_BBPE_H_
