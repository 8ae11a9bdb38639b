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

#include "reqaug/lexicon.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "escape.h"
#include "reqaug/error.h"

namespace reqaug {

TokenFrequencyTable::TokenFrequencyTable(
    std::map<std::string, std::uint64_t> counts)
    : counts_(std::move(counts)) {
  for (const auto& [token, c] : counts_) total_ += c;
  if (counts_.empty()) return;
  const auto n = static_cast<double>(counts_.size());
  mean_ = static_cast<double>(total_) / n;
  double ss = 0.0;
  for (const auto& [token, c] : counts_) {
    const double d = static_cast<double>(c) - mean_;
    ss += d * d;
  }
  std_ = std::sqrt(ss / n);
}

std::uint64_t TokenFrequencyTable::count(const std::string& token) const {
  const auto it = counts_.find(token);
  return it == counts_.end() ? 0 : it->second;
}

TokenFrequencyTable TokenFrequencyTable::merged(
    const TokenFrequencyTable& other) const {
  std::map<std::string, std::uint64_t> sum = counts_;
  for (const auto& [token, c] : other.counts_) sum[token] += c;
  return TokenFrequencyTable(std::move(sum));
}

TokenFrequencyTable build_frequency_table(const RequestCorpus& corpus) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "frequency table needs records");
  }
  std::map<std::string, std::uint64_t> counts;
  for (const auto& record : corpus.records()) {
    for (const auto& token : tokenize_entities(record.raw).tokens) {
      ++counts[token.text];
    }
  }
  return TokenFrequencyTable(std::move(counts));
}

double z_from_confidence(double confidence, std::optional<double> override_z) {
  if (override_z) return *override_z;
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "confidence must lie in (0, 1)");
  }
  if (confidence == 0.5) return 0.0;
  return boost::math::quantile(boost::math::normal_distribution<double>(),
                               confidence);
}

double frequency_threshold(const TokenFrequencyTable& table, double z) {
  return table.mean() + z * table.std();
}

ReservedTokenSet reserved_tokens(const TokenFrequencyTable& table,
                                 double threshold) {
  if (threshold < 0.0) {
    throw Error(ErrorCode::kOutOfRange, "threshold must be non-negative");
  }
  ReservedTokenSet out;
  out.threshold = threshold;
  for (const auto& [token, c] : table.counts()) {
    if (static_cast<double>(c) > threshold) out.tokens.insert(token);
  }
  return out;
}

void write_reserved_tokens(const ReservedTokenSet& reserved,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kUnreadablePath, "cannot write " + path.string());
  out << "# threshold=" << internal::format_double(reserved.threshold)
      << " z=" << internal::format_double(reserved.z) << " confidence="
      << (reserved.confidence ? internal::format_double(*reserved.confidence)
                              : std::string("none"))
      << " marker=" << kIgnoreMarker << '\n';
  for (const auto& token : reserved.tokens) {
    out << internal::escape_bytes(token) << '\n';
  }
}

ReservedTokenSet read_reserved_tokens(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadablePath, "cannot open " + path.string());
  ReservedTokenSet out;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw Error(ErrorCode::kCorruptArtifact, "missing manifest line in " + path.string());
  }
  std::istringstream fields(line.substr(2));
  std::string field;
  while (fields >> field) {
    const std::size_t eq = field.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "threshold") out.threshold = std::stod(value);
    if (key == "z") out.z = std::stod(value);
    if (key == "confidence" && value != "none") out.confidence = std::stod(value);
  }
  while (std::getline(in, line)) {
    if (!line.empty()) out.tokens.insert(internal::unescape_bytes(line));
  }
  return out;
}

}  // namespace reqaug
