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

#ifndef REQAUG_LEXICON_H_
#define REQAUG_LEXICON_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "reqaug/ingest.h"

namespace reqaug {

inline constexpr const char* kIgnoreMarker = "<IGN>";

// Occurrence counts of entity tokens over a training corpus. mean and std
// describe the vector with one entry per distinct token.
class TokenFrequencyTable {
 public:
  TokenFrequencyTable() = default;
  explicit TokenFrequencyTable(std::map<std::string, std::uint64_t> counts);

  const std::map<std::string, std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const { return total_; }
  double mean() const { return mean_; }
  // Population standard deviation.
  double std() const { return std_; }
  std::size_t distinct() const { return counts_.size(); }
  std::uint64_t count(const std::string& token) const;

  // Element-wise sum of counts.
  TokenFrequencyTable merged(const TokenFrequencyTable& other) const;

 private:
  std::map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
  double mean_ = 0.0;
  double std_ = 0.0;
};

struct ReservedTokenSet {
  std::set<std::string> tokens;
  double threshold = 0.0;
  double z = 0.0;
  // Confidence the z-score came from; empty when z was supplied directly.
  std::optional<double> confidence;

  bool contains(const std::string& token) const { return tokens.count(token) > 0; }
};

TokenFrequencyTable build_frequency_table(const RequestCorpus& corpus);

// One-sided standard normal quantile at `confidence`. A set `override_z` is
// returned verbatim without looking at `confidence`.
double z_from_confidence(double confidence,
                         std::optional<double> override_z = std::nullopt);

// mean + z * std
double frequency_threshold(const TokenFrequencyTable& table, double z);

// Exactly the tokens whose count is strictly above `threshold`.
ReservedTokenSet reserved_tokens(const TokenFrequencyTable& table,
                                 double threshold);

// Sorted token list, one per line, after a "# threshold=... z=... confidence=..."
// manifest line. Tokens are escaped so that any byte survives.
void write_reserved_tokens(const ReservedTokenSet& reserved,
                           const std::filesystem::path& path);
ReservedTokenSet read_reserved_tokens(const std::filesystem::path& path);

}  // namespace reqaug

#endif  // REQAUG_LEXICON_H_
