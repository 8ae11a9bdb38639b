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

#include "reqaug/bbpe.h"

#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "escape.h"
#include "reqaug/error.h"

namespace reqaug {
namespace {

enum class ByteClass { kSpace, kWord, kOther };

ByteClass classify(unsigned char c) {
  if (c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r') {
    return ByteClass::kSpace;
  }
  if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
      (c >= 'A' && c <= 'Z') || c >= 0x80) {
    return ByteClass::kWord;
  }
  return ByteClass::kOther;
}

std::uint64_t pair_key(int left, int right) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) |
         static_cast<std::uint32_t>(right);
}

constexpr std::string_view kSpecialText[kNumSpecials] = {
    "<PAD>", "<CLS>", "<SEP>", "<UNK>", "<MASK>", "<IGN>"};

}  // namespace

std::string_view special_text(int id) {
  if (id < 0 || id >= kNumSpecials) {
    throw Error(ErrorCode::kUnknownId, "not a special id: " + std::to_string(id));
  }
  return kSpecialText[id];
}

std::vector<std::string_view> pretokenize(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const ByteClass cls = classify(static_cast<unsigned char>(text[i]));
    std::size_t j = i + 1;
    if (cls != ByteClass::kOther) {
      while (j < text.size() &&
             classify(static_cast<unsigned char>(text[j])) == cls) {
        ++j;
      }
    }
    out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

BbpeTokenizer::BbpeTokenizer() : BbpeTokenizer(std::vector<std::pair<int, int>>{}) {}

BbpeTokenizer::BbpeTokenizer(std::vector<std::pair<int, int>> merges)
    : merges_(std::move(merges)) {
  symbols_.reserve(kFirstMergeId + merges_.size());
  for (int i = 0; i < kNumSpecials; ++i) symbols_.emplace_back(kSpecialText[i]);
  for (int b = 0; b < 256; ++b) symbols_.emplace_back(1, static_cast<char>(b));
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto [left, right] = merges_[r];
    const int next = static_cast<int>(symbols_.size());
    if (left < kFirstByteId || right < kFirstByteId || left >= next || right >= next) {
      throw Error(ErrorCode::kCorruptArtifact,
                  "merge " + std::to_string(r) + " references an unknown symbol");
    }
    symbols_.push_back(symbols_[left] + symbols_[right]);
    ranks_.emplace(pair_key(left, right), static_cast<int>(r));
  }
  // Specials are looked up by id only, so their text cannot shadow bytes.
  for (std::size_t id = kFirstByteId; id < symbols_.size(); ++id) {
    ids_.emplace(symbols_[id], static_cast<int>(id));
  }
}

const std::string& BbpeTokenizer::symbol(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw Error(ErrorCode::kUnknownId, "token id " + std::to_string(id));
  }
  return symbols_[id];
}

std::optional<int> BbpeTokenizer::id_of(std::string_view symbol) const {
  const auto it = ids_.find(std::string(symbol));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> BbpeTokenizer::encode_chunk(std::string_view chunk) const {
  std::vector<int> ids;
  ids.reserve(chunk.size());
  for (char c : chunk) ids.push_back(kFirstByteId + static_cast<unsigned char>(c));
  while (ids.size() > 1) {
    int best_rank = std::numeric_limits<int>::max();
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      const auto it = ranks_.find(pair_key(ids[i], ids[i + 1]));
      if (it != ranks_.end() && it->second < best_rank) {
        best_rank = it->second;
        best_pos = i;
      }
    }
    if (best_rank == std::numeric_limits<int>::max()) break;
    ids[best_pos] = kFirstMergeId + best_rank;
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
  }
  return ids;
}

std::vector<int> BbpeTokenizer::encode(std::string_view text) const {
  std::vector<int> out;
  for (std::string_view chunk : pretokenize(text)) {
    const std::vector<int> ids = encode_chunk(chunk);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

std::string BbpeTokenizer::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) out += symbol(id);
  return out;
}

void BbpeTokenizer::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream vocab(dir / "vocab.txt", std::ios::binary);
  std::ofstream merges(dir / "merges.txt", std::ios::binary);
  if (!vocab || !merges) {
    throw Error(ErrorCode::kUnreadablePath, "cannot write tokenizer to " + dir.string());
  }
  for (std::size_t id = 0; id < symbols_.size(); ++id) {
    vocab << id << '\t'
          << (id < kNumSpecials ? std::string(symbols_[id])
                                : internal::escape_bytes(symbols_[id]))
          << '\n';
  }
  for (const auto& [left, right] : merges_) {
    merges << internal::escape_bytes(symbols_[left]) << ' '
           << internal::escape_bytes(symbols_[right]) << '\n';
  }
}

BbpeTokenizer BbpeTokenizer::load(const std::filesystem::path& dir) {
  std::ifstream merges_in(dir / "merges.txt", std::ios::binary);
  if (!merges_in) {
    throw Error(ErrorCode::kUnreadablePath, "cannot open " + (dir / "merges.txt").string());
  }
  // Replay merges against a growing symbol table.
  std::unordered_map<std::string, int> known;
  int next = kFirstMergeId;
  for (int b = 0; b < 256; ++b) known.emplace(std::string(1, static_cast<char>(b)), kFirstByteId + b);
  std::vector<std::pair<int, int>> merges;
  std::string line;
  while (std::getline(merges_in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string l, r;
    if (!(fields >> l >> r)) {
      throw Error(ErrorCode::kCorruptArtifact, "bad merges line '" + line + "'");
    }
    const std::string left = internal::unescape_bytes(l);
    const std::string right = internal::unescape_bytes(r);
    const auto li = known.find(left);
    const auto ri = known.find(right);
    if (li == known.end() || ri == known.end()) {
      throw Error(ErrorCode::kCorruptArtifact, "merge of unknown symbols '" + line + "'");
    }
    merges.emplace_back(li->second, ri->second);
    known.emplace(left + right, next++);
  }
  BbpeTokenizer tok(std::move(merges));

  std::ifstream vocab_in(dir / "vocab.txt", std::ios::binary);
  if (vocab_in) {
    std::size_t rows = 0;
    while (std::getline(vocab_in, line)) {
      if (line.empty()) continue;
      const std::size_t tab = line.find('\t');
      const int id = std::stoi(line.substr(0, tab));
      const std::string text = line.substr(tab + 1);
      const std::string sym = id < kNumSpecials ? text : internal::unescape_bytes(text);
      if (static_cast<std::size_t>(id) >= tok.vocab_size() || tok.symbol(id) != sym) {
        throw Error(ErrorCode::kCorruptArtifact,
                    "vocab.txt disagrees with merges.txt at id " + std::to_string(id));
      }
      ++rows;
    }
    if (rows != tok.vocab_size()) {
      throw Error(ErrorCode::kCorruptArtifact, "vocab.txt size mismatch");
    }
  }
  return tok;
}

BbpeTokenizer train_bbpe(const RequestCorpus& corpus, std::size_t vocab_size,
                         std::uint64_t /*seed*/) {
  if (vocab_size < static_cast<std::size_t>(kFirstMergeId)) {
    throw Error(ErrorCode::kVocabTooSmall,
                "vocab_size must be at least " + std::to_string(kFirstMergeId));
  }
  std::map<std::string, std::uint64_t> chunk_counts;
  for (const auto& record : corpus.records()) {
    for (std::string_view chunk : pretokenize(record.raw)) {
      ++chunk_counts[std::string(chunk)];
    }
  }
  struct Word {
    std::vector<int> ids;
    std::uint64_t count;
  };
  std::vector<Word> words;
  words.reserve(chunk_counts.size());
  for (const auto& [chunk, count] : chunk_counts) {
    Word w{{}, count};
    for (char c : chunk) w.ids.push_back(kFirstByteId + static_cast<unsigned char>(c));
    words.push_back(std::move(w));
  }

  std::vector<std::string> symbols;
  for (int b = 0; b < 256; ++b) symbols.emplace_back(1, static_cast<char>(b));
  auto sym = [&](int id) -> const std::string& { return symbols[id - kFirstByteId]; };
  // A pair whose concatenation already exists would give one string two ids.
  std::unordered_set<std::string> existing(symbols.begin(), symbols.end());

  std::vector<std::pair<int, int>> merges;
  while (kFirstMergeId + merges.size() < vocab_size) {
    std::unordered_map<std::uint64_t, std::uint64_t> pair_counts;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.ids.size(); ++i) {
        pair_counts[pair_key(w.ids[i], w.ids[i + 1])] += w.count;
      }
    }
    std::uint64_t best_count = 0;
    int best_left = -1;
    int best_right = -1;
    for (const auto& [key, count] : pair_counts) {
      const int left = static_cast<int>(key >> 32);
      const int right = static_cast<int>(key & 0xffffffffu);
      if (count < best_count || count < 2) continue;
      if (existing.count(sym(left) + sym(right)) > 0) continue;
      bool better = count > best_count;
      if (count == best_count && best_left >= 0) {
        const auto& bl = sym(best_left);
        const auto& l = sym(left);
        better = l < bl || (l == bl && sym(right) < sym(best_right));
      }
      if (better) {
        best_count = count;
        best_left = left;
        best_right = right;
      }
    }
    if (best_count < 2) break;
    const int merged = kFirstMergeId + static_cast<int>(merges.size());
    merges.emplace_back(best_left, best_right);
    symbols.push_back(sym(best_left) + sym(best_right));
    existing.insert(symbols.back());
    for (auto& w : words) {
      std::size_t out = 0;
      for (std::size_t i = 0; i < w.ids.size(); ++i) {
        if (i + 1 < w.ids.size() && w.ids[i] == best_left && w.ids[i + 1] == best_right) {
          w.ids[out++] = merged;
          ++i;
        } else {
          w.ids[out++] = w.ids[i];
        }
      }
      w.ids.resize(out);
    }
  }
  return BbpeTokenizer(std::move(merges));
}

}  // namespace reqaug
