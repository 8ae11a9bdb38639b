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

#include "reqaug/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "escape.h"
#include "reqaug/augment.h"
#include "reqaug/error.h"

namespace reqaug {
namespace {

constexpr double kFlowEps = 1e-12;

std::map<std::vector<std::string>, std::size_t> ngram_counts(std::span<const std::string> tokens,
                                                             std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

double safe_ratio(double num, double den, bool* degenerate) {
  if (den == 0.0) {
    if (degenerate != nullptr) *degenerate = true;
    return 0.0;
  }
  return num / den;
}

double precision_impl(const ConfusionMatrix& cm, bool* degenerate) {
  return safe_ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fp), degenerate);
}

double recall_impl(const ConfusionMatrix& cm, bool* degenerate) {
  return safe_ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fn), degenerate);
}

double f1_impl(const ConfusionMatrix& cm, bool* degenerate) {
  const double p = precision_impl(cm, degenerate);
  const double r = recall_impl(cm, degenerate);
  return safe_ratio(2.0 * p * r, p + r, degenerate);
}

double mcc_impl(const ConfusionMatrix& cm, bool* degenerate) {
  const auto tp = static_cast<double>(cm.tp);
  const auto fp = static_cast<double>(cm.fp);
  const auto tn = static_cast<double>(cm.tn);
  const auto fn = static_cast<double>(cm.fn);
  const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  return safe_ratio(tp * tn - fp * fn, den, degenerate);
}

}  // namespace

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(predicted.size()) + " predictions for " +
                                                std::to_string(actual.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == Label::kAbnormal;
    const bool a = actual[i] == Label::kAbnormal;
    if (p && a) ++cm.tp;
    else if (p) ++cm.fp;
    else if (a) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

ConfusionMatrix confusion(std::span<const Verdict> verdicts, std::span<const Label> actual) {
  std::vector<Label> predicted;
  predicted.reserve(verdicts.size());
  for (const auto& v : verdicts) predicted.push_back(v.flagged);
  return confusion(predicted, actual);
}

double precision(const ConfusionMatrix& cm) { return precision_impl(cm, nullptr); }
double recall(const ConfusionMatrix& cm) { return recall_impl(cm, nullptr); }
double f1(const ConfusionMatrix& cm) { return f1_impl(cm, nullptr); }
double mcc(const ConfusionMatrix& cm) { return mcc_impl(cm, nullptr); }

ClassificationReport classification_report(const ConfusionMatrix& cm) {
  ClassificationReport r;
  r.cm = cm;
  r.precision = precision_impl(cm, &r.degenerate);
  r.recall = recall_impl(cm, &r.degenerate);
  r.f1 = f1_impl(cm, &r.degenerate);
  r.mcc = mcc_impl(cm, &r.degenerate);
  return r;
}

double bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
            std::size_t max_n) {
  if (max_n < 1) throw Error(ErrorCode::kOutOfRange, "max_n must be >= 1");
  if (candidate.empty()) throw Error(ErrorCode::kEmptyCandidate, "BLEU of an empty candidate");
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    std::size_t matched = 0;
    std::size_t total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      const auto it = ref.find(gram);
      if (it != ref.end()) matched += std::min(count, it->second);
    }
    double p;
    if (matched > 0) {
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else if (n == 1) {
      return 0.0;
    } else {
      p = 1.0 / static_cast<double>(total + 1);
    }
    log_sum += std::log(p);
  }
  const auto c = static_cast<double>(candidate.size());
  const auto r = static_cast<double>(reference.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

double corpus_bleu(
    std::span<const std::pair<std::vector<std::string>, std::vector<std::string>>> pairs,
    std::size_t max_n) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [cand, ref] : pairs) sum += bleu(cand, ref, max_n);
  return sum / static_cast<double>(pairs.size());
}

BertScore bert_score(const Matrix& candidate, const Matrix& reference) {
  if (candidate.rows() == 0 || reference.rows() == 0) {
    throw Error(ErrorCode::kEmptyRequest, "BERTScore of an empty request");
  }
  if (candidate.cols() != reference.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding widths differ");
  }
  Matrix sim(candidate.rows(), reference.rows());
  for (Eigen::Index i = 0; i < candidate.rows(); ++i) {
    for (Eigen::Index j = 0; j < reference.rows(); ++j) {
      sim(i, j) = cosine_similarity(RowVector(candidate.row(i)), RowVector(reference.row(j)));
    }
  }
  BertScore s;
  s.precision = sim.rowwise().maxCoeff().mean();
  s.recall = sim.colwise().maxCoeff().mean();
  s.f1 = s.precision + s.recall == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

BertScore bert_score(const LanguageModel& model, const RawRequestRecord& candidate,
                     const RawRequestRecord& reference) {
  return bert_score(word_embeddings(model, candidate), word_embeddings(model, reference));
}

double emd(std::span<const double> supply, std::span<const double> demand, const Matrix& cost) {
  const std::size_t m = supply.size();
  const std::size_t n = demand.size();
  if (m == 0 || n == 0) throw Error(ErrorCode::kWeightMismatch, "empty distribution");
  if (static_cast<std::size_t>(cost.rows()) != m || static_cast<std::size_t>(cost.cols()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, "cost matrix shape does not match the weights");
  }
  auto check = [](std::span<const double> w, const char* what) {
    double sum = 0.0;
    for (double x : w) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw Error(ErrorCode::kWeightMismatch, std::string(what) + " has a negative weight");
      }
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(ErrorCode::kWeightMismatch, std::string(what) + " sums to " + std::to_string(sum));
    }
  };
  check(supply, "supply");
  check(demand, "demand");
  if (!(cost.array() >= 0.0).all() || !cost.allFinite()) {
    throw Error(ErrorCode::kNegativeCost, "cost matrix has a negative or non-finite entry");
  }

  // Successive shortest paths on the bipartite residual graph. Nodes: source
  // 0, supplies 1..m, demands m+1..m+n, sink m+n+1.
  const std::size_t nodes = m + n + 2;
  const std::size_t sink = nodes - 1;
  Matrix flow = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  std::vector<double> supply_left(supply.begin(), supply.end());
  std::vector<double> demand_left(demand.begin(), demand.end());
  double remaining = std::min(1.0, std::accumulate(supply.begin(), supply.end(), 0.0));
  const double inf = std::numeric_limits<double>::infinity();

  for (std::size_t guard = 0; remaining > kFlowEps && guard < 4 * (m + 1) * (n + 1); ++guard) {
    std::vector<double> dist(nodes, inf);
    std::vector<std::ptrdiff_t> parent(nodes, -1);
    dist[0] = 0.0;
    // Bellman-Ford; reverse edges carry negative costs.
    for (std::size_t round = 0; round < nodes; ++round) {
      bool changed = false;
      auto relax = [&](std::size_t from, std::size_t to, double c) {
        if (dist[from] + c < dist[to] - 1e-15) {
          dist[to] = dist[from] + c;
          parent[to] = static_cast<std::ptrdiff_t>(from);
          changed = true;
        }
      };
      for (std::size_t i = 0; i < m; ++i) {
        if (supply_left[i] > kFlowEps) relax(0, 1 + i, 0.0);
      }
      for (std::size_t i = 0; i < m; ++i) {
        if (dist[1 + i] == inf) continue;
        for (std::size_t j = 0; j < n; ++j) relax(1 + i, 1 + m + j, cost(i, j));
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (dist[1 + m + j] == inf) continue;
        for (std::size_t i = 0; i < m; ++i) {
          if (flow(i, j) > kFlowEps) relax(1 + m + j, 1 + i, -cost(i, j));
        }
        if (demand_left[j] > kFlowEps) relax(1 + m + j, sink, 0.0);
      }
      if (!changed) break;
    }
    if (dist[sink] == inf) break;

    double push = remaining;
    for (std::size_t v = sink; v != 0; v = static_cast<std::size_t>(parent[v])) {
      const auto u = static_cast<std::size_t>(parent[v]);
      if (u == 0) push = std::min(push, supply_left[v - 1]);
      else if (v == sink) push = std::min(push, demand_left[u - 1 - m]);
      else if (u > m) push = std::min(push, flow(v - 1, u - 1 - m));
    }
    for (std::size_t v = sink; v != 0; v = static_cast<std::size_t>(parent[v])) {
      const auto u = static_cast<std::size_t>(parent[v]);
      if (u == 0) supply_left[v - 1] -= push;
      else if (v == sink) demand_left[u - 1 - m] -= push;
      else if (u <= m) flow(u - 1, v - 1 - m) += push;
      else flow(v - 1, u - 1 - m) -= push;
    }
    remaining -= push;
  }
  return std::max(0.0, (flow.array() * cost.array()).sum());
}

IdfTable::IdfTable(const RequestCorpus& references) : documents_(references.size()) {
  for (const auto& r : references.records()) {
    const std::vector<std::string> texts = tokenize_entities(r.raw).texts();
    for (const auto& t : std::set<std::string>(texts.begin(), texts.end())) ++df_[t];
  }
}

double IdfTable::idf(const std::string& token) const {
  const auto it = df_.find(token);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((static_cast<double>(documents_) + 1.0) / (df + 1.0));
}

std::vector<double> idf_weights(const IdfTable& idf, const std::vector<std::string>& tokens) {
  std::vector<double> w(tokens.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    w[i] = std::max(0.0, idf.idf(tokens[i]));
    sum += w[i];
  }
  for (double& x : w) x = sum > 0.0 ? x / sum : 1.0 / static_cast<double>(w.size());
  return w;
}

double mover_score(const Matrix& candidate, std::span<const double> candidate_weights,
                   const Matrix& reference, std::span<const double> reference_weights) {
  if (candidate.rows() == 0 || reference.rows() == 0) {
    throw Error(ErrorCode::kEmptyRequest, "MoverScore of an empty request");
  }
  Matrix cost(candidate.rows(), reference.rows());
  for (Eigen::Index i = 0; i < candidate.rows(); ++i) {
    for (Eigen::Index j = 0; j < reference.rows(); ++j) {
      if (candidate.row(i) == reference.row(j)) {
        cost(i, j) = 0.0;
      } else {
        cost(i, j) = std::max(
            0.0, 1.0 - cosine_similarity(RowVector(candidate.row(i)), RowVector(reference.row(j))));
      }
    }
  }
  return std::clamp(1.0 - emd(candidate_weights, reference_weights, cost), 0.0, 1.0);
}

double mover_score(const LanguageModel& model, const RawRequestRecord& candidate,
                   const RawRequestRecord& reference, const IdfTable& idf) {
  const TokenizedRequest cand = tokenize_entities(candidate.raw);
  const TokenizedRequest ref = tokenize_entities(reference.raw);
  return mover_score(word_embeddings(model, cand), idf_weights(idf, cand.texts()),
                     word_embeddings(model, ref), idf_weights(idf, ref.texts()));
}

SimilarityReport similarity_report(
    const LanguageModel& model,
    std::span<const std::pair<RawRequestRecord, RawRequestRecord>> pairs, const IdfTable& idf) {
  SimilarityReport report;
  report.pairs = pairs.size();
  if (pairs.empty()) return report;
  for (const auto& [cand, ref] : pairs) {
    report.bleu += bleu(tokenize_entities(cand.raw).texts(), tokenize_entities(ref.raw).texts());
    const BertScore b = bert_score(model, cand, ref);
    report.bert_p += b.precision;
    report.bert_r += b.recall;
    report.bert_f1 += b.f1;
    report.mover += mover_score(model, cand, ref, idf);
  }
  const auto n = static_cast<double>(pairs.size());
  report.bleu /= n;
  report.bert_p /= n;
  report.bert_r /= n;
  report.bert_f1 /= n;
  report.mover /= n;
  return report;
}

nlohmann::json to_json(const ClassificationReport& r) {
  return nlohmann::json{{"tp", r.cm.tp},           {"fp", r.cm.fp},     {"tn", r.cm.tn},
                        {"fn", r.cm.fn},           {"precision", r.precision},
                        {"recall", r.recall},      {"f1", r.f1},        {"mcc", r.mcc},
                        {"degenerate", r.degenerate}};
}

nlohmann::json to_json(const SimilarityReport& r) {
  return nlohmann::json{{"bleu", r.bleu},       {"bert_p", r.bert_p}, {"bert_r", r.bert_r},
                        {"bert_f1", r.bert_f1}, {"mover", r.mover},   {"pairs", r.pairs}};
}

std::vector<ReportRow> report_rows(const ClassificationReport& r, const std::string& arm) {
  return {{"precision", arm, r.precision}, {"recall", arm, r.recall},
          {"f1", arm, r.f1},               {"mcc", arm, r.mcc}};
}

std::vector<ReportRow> report_rows(const SimilarityReport& r, const std::string& arm) {
  return {{"bleu", arm, r.bleu},       {"bert_p", arm, r.bert_p}, {"bert_r", arm, r.bert_r},
          {"bert_f1", arm, r.bert_f1}, {"mover", arm, r.mover}};
}

void write_report_tsv(std::span<const ReportRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kUnreadablePath, "cannot write " + path.string());
  out << "metric\tarm\tvalue\n";
  for (const auto& row : rows) {
    out << row.metric << '\t' << row.arm << '\t' << internal::format_double(row.value) << '\n';
  }
}

}  // namespace reqaug
