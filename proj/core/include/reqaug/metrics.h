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

#ifndef REQAUG_METRICS_H_
#define REQAUG_METRICS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "reqaug/detect.h"
#include "reqaug/ingest.h"
#include "reqaug/language_model.h"

namespace reqaug {

// Positive class is abnormal.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> actual);
ConfusionMatrix confusion(std::span<const Verdict> verdicts, std::span<const Label> actual);

// A zero denominator gives 0.
double precision(const ConfusionMatrix& cm);
double recall(const ConfusionMatrix& cm);
double f1(const ConfusionMatrix& cm);
double mcc(const ConfusionMatrix& cm);

struct ClassificationReport {
  ConfusionMatrix cm;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  // Set when any of the four hit a zero denominator.
  bool degenerate = false;
};

ClassificationReport classification_report(const ConfusionMatrix& cm);

// Smoothed sentence BLEU: clipped n-gram precisions for n = 1..max_n, with
// (m + 1) / (c + 1) replacing a zero precision for n >= 2, times the brevity
// penalty.
double bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
            std::size_t max_n = 4);
// Mean of per-pair scores.
double corpus_bleu(std::span<const std::pair<std::vector<std::string>, std::vector<std::string>>> pairs,
                   std::size_t max_n = 4);

struct BertScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Greedy cosine matching between rows of the two embedding matrices.
BertScore bert_score(const Matrix& candidate, const Matrix& reference);
BertScore bert_score(const LanguageModel& model, const RawRequestRecord& candidate,
                     const RawRequestRecord& reference);

// Exact optimal transport cost between two distributions.
double emd(std::span<const double> supply, std::span<const double> demand, const Matrix& cost);

// idf(t) = ln((N + 1) / (df(t) + 1)) over a reference corpus.
class IdfTable {
 public:
  IdfTable() = default;
  explicit IdfTable(const RequestCorpus& references);

  double idf(const std::string& token) const;
  std::size_t documents() const { return documents_; }

 private:
  std::map<std::string, std::size_t> df_;
  std::size_t documents_ = 0;
};

// Token weights proportional to idf, uniform when every idf is zero.
std::vector<double> idf_weights(const IdfTable& idf, const std::vector<std::string>& tokens);

// 1 - emd with cosine-distance costs, clamped to [0, 1].
double mover_score(const Matrix& candidate, std::span<const double> candidate_weights,
                   const Matrix& reference, std::span<const double> reference_weights);
double mover_score(const LanguageModel& model, const RawRequestRecord& candidate,
                   const RawRequestRecord& reference, const IdfTable& idf);

struct SimilarityReport {
  double bleu = 0.0;
  double bert_p = 0.0;
  double bert_r = 0.0;
  double bert_f1 = 0.0;
  double mover = 0.0;
  std::size_t pairs = 0;
};

// Corpus means over (candidate, reference) pairs.
SimilarityReport similarity_report(
    const LanguageModel& model,
    std::span<const std::pair<RawRequestRecord, RawRequestRecord>> pairs, const IdfTable& idf);

nlohmann::json to_json(const ClassificationReport& report);
nlohmann::json to_json(const SimilarityReport& report);

// Rows of "metric<TAB>arm<TAB>value".
struct ReportRow {
  std::string metric;
  std::string arm;
  double value = 0.0;
};
std::vector<ReportRow> report_rows(const ClassificationReport& report, const std::string& arm);
std::vector<ReportRow> report_rows(const SimilarityReport& report, const std::string& arm);
void write_report_tsv(std::span<const ReportRow> rows, const std::filesystem::path& path);

}  // namespace reqaug

#endif  // REQAUG_METRICS_H_
