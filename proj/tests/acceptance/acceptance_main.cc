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

// Acceptance runner: one PASS/FAIL/SKIP line per criterion.
//
//   reqaug_acceptance [--only 1,2,7]
//
// Exit status is 0 when every selected criterion passes, 77 when every
// selected criterion was skipped and 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reqaug/augment.h"
#include "reqaug/bbpe.h"
#include "reqaug/detect.h"
#include "reqaug/error.h"
#include "reqaug/lexicon.h"
#include "reqaug/metrics.h"
#include "reqaug/pipeline.h"
#include "reqaug_test_support.h"

namespace {

using namespace reqaug;
namespace fs = std::filesystem;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kPass;
  std::string detail;
};

Outcome pass(std::string detail) { return {Status::kPass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Status::kFail, std::move(detail)}; }
Outcome verdict(bool ok, std::string detail) { return {ok ? Status::kPass : Status::kFail, std::move(detail)}; }

template <typename... Args>
std::string cat(const Args&... args) {
  std::ostringstream out;
  out.precision(10);
  (out << ... << args);
  return out.str();
}

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> cell(0, 500);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const ConfusionMatrix cm{cell(rng), cell(rng), cell(rng), cell(rng)};
    const double tp = cm.tp, fp = cm.fp, tn = cm.tn, fn = cm.fn;
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    const double m = den > 0 ? (tp * tn - fp * fn) / std::sqrt(den) : 0.0;
    mismatches += std::abs(precision(cm) - p) > 1e-9 || std::abs(recall(cm) - r) > 1e-9 ||
                  std::abs(f1(cm) - f) > 1e-9 || std::abs(mcc(cm) - m) > 1e-9;
  }
  const double example = mcc(ConfusionMatrix{.tp = 9, .fp = 1, .tn = 8, .fn = 2});
  return verdict(mismatches == 0 && std::abs(example - 0.70353) <= 1e-4,
                 cat(mismatches, "/20 mismatches, mcc(9,1,8,2)=", example));
}

Outcome bleu_examples() {
  const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> identical = {
      {{"get", "/", "a"}, {"get", "/", "a"}}, {{"post", "/", "b", "=", "1"}, {"post", "/", "b", "=", "1"}}};
  const double self = corpus_bleu(identical);
  const double ex = bleu(std::vector<std::string>{"a", "b", "c"}, std::vector<std::string>{"a", "b", "d"}, 2);
  return verdict(self == 1.0 && std::abs(ex - 0.57735) <= 1e-4, cat("identical=", self, " example=", ex));
}

Outcome threshold_oracles() {
  std::mt19937_64 rng(77);
  std::size_t threshold_mismatch = 0, set_mismatch = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::string, std::uint64_t> counts;
    const std::size_t distinct = 1 + rng() % 60;
    std::uniform_int_distribution<std::uint64_t> count(1, 1 + rng() % 5000);
    for (std::size_t i = 0; i < distinct; ++i) counts["t" + std::to_string(i)] = count(rng);
    const TokenFrequencyTable table(counts);
    const double z = std::uniform_real_distribution<double>(-1.0, 6.0)(rng);

    double mean = 0.0;
    for (const auto& [t, c] : counts) mean += static_cast<double>(c);
    mean /= static_cast<double>(counts.size());
    double var = 0.0;
    for (const auto& [t, c] : counts) var += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
    const double expected = mean + z * std::sqrt(var / static_cast<double>(counts.size()));
    const double got = frequency_threshold(table, z);
    threshold_mismatch += std::abs(got - expected) > 1e-9 * std::max(1.0, std::abs(expected));

    std::set<std::string> want;
    for (const auto& [t, c] : counts) {
      if (static_cast<double>(c) > got) want.insert(t);
    }
    set_mismatch += reserved_tokens(table, got).tokens != want;
  }
  return verdict(threshold_mismatch == 0 && set_mismatch == 0,
                 cat(threshold_mismatch, " threshold and ", set_mismatch, " set mismatches over 50 tables"));
}

Outcome tokenizer_round_trip() {
  const RequestCorpus corpus = make_smoke_corpus(150, 50, 1);
  const BbpeTokenizer tok = train_bbpe(corpus, 2048);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::size_t> len(0, 512);
  std::size_t failures = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s(len(rng), '\0');
    for (auto& c : s) c = static_cast<char>(byte(rng));
    failures += tok.decode(tok.encode(s)) != s;
  }
  return verdict(failures == 0, cat(failures, "/10000 failures, vocab ", tok.vocab_size()));
}

Outcome gradient_check() {
  auto tok = std::make_shared<const BbpeTokenizer>();
  LmConfig c = testing::tiny_lm(8, 2);
  c.vocab_size = kFirstMergeId;
  c.max_seq_len = 32;
  c.block_size = 32;
  LanguageModel model(tok, c);
  std::mt19937_64 rng(3);
  init_normal(model.tensors(), rng, 0.3);
  std::vector<int> ids = {kClsId};
  for (int id : tok->encode("get /a b=1")) ids.push_back(id);
  ids.push_back(kSepId);
  std::vector<int> targets(ids.size(), -1);
  for (std::size_t p : {2u, 6u}) {
    targets[p] = ids[p];
    ids[p] = kMaskId;
  }
  const auto check = testing::check_mlm_gradients(model, ids, targets, 150, 99);
  return verdict(check.checked >= 100 && check.failures == 0,
                 cat(check.failures, "/", check.checked, " over 1e-4, max relative error ",
                     check.max_relative_error));
}

Outcome outlier_equivalence() {
  const RequestCorpus corpus = make_smoke_corpus(35, 15, 6);
  const auto toy = testing::train_toy(corpus, testing::tiny_lm(16, 1, 20));
  const auto table = build_frequency_table(corpus);
  const ReservedTokenSet reserved = reserved_tokens(table, frequency_threshold(table, z_from_confidence(0.9999)));
  std::size_t agree = 0;
  for (const auto& r : corpus.records()) {
    const TokenizedRequest t = tokenize_entities(r.raw);
    const Matrix words = word_embeddings(*toy.model, t);
    const RowVector sentence = sentence_embedding(*toy.model, t);
    std::size_t best = t.size();
    double best_cos = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (reserved.contains(t.tokens[i].text)) continue;
      const RowVector w = words.row(static_cast<Eigen::Index>(i));
      const double cs = w.dot(sentence) / (w.norm() * sentence.norm());
      if (cs < best_cos) {
        best_cos = cs;
        best = i;
      }
    }
    agree += find_outlier_token(*toy.model, r, reserved) == best;
  }
  return verdict(agree == corpus.size(), cat(agree, "/", corpus.size(), " agree, ", reserved.tokens.size(),
                                             " reserved"));
}

// Shared by criteria 7 and 8: desk stages up to the detector with the
// acceptance filter off.
struct DeskRun {
  testing::TempDir dir;
  PipelineConfig config;
};

const DeskRun& desk_run() {
  static const std::unique_ptr<DeskRun> run = [] {
    auto r = std::make_unique<DeskRun>();
    r->config = PipelineConfig::desk();
    r->config.discriminator_options.tau_accept = 0.0;
    r->config.output_dir = r->dir.path();
    cmd_ingest(r->config);
    cmd_augment(r->config);
    cmd_train_detector(r->config);
    return r;
  }();
  return *run;
}

Outcome single_edit_invariants() {
  const DeskRun& run = desk_run();
  const fs::path out = run.config.output_dir;
  const RequestCorpus corpus = read_canonical(out / artifact::kCorpus);
  const RequestCorpus train = read_canonical(out / artifact::kTrain);
  const AugmentedDatastore store = read_datastore(out / artifact::kDatastore);
  const ReservedTokenSet reserved = read_reserved_tokens(out / artifact::kReserved);
  std::set<std::string> attacks;
  for (const auto& r : corpus.records()) {
    if (r.label == Label::kAbnormal && r.attack_type) attacks.insert(*r.attack_type);
  }

  std::map<std::string, const RawRequestRecord*> by_id;
  for (const auto& r : train.records()) by_id[r.id] = &r;
  std::size_t violations = 0;
  for (const auto& s : store.synthetics) {
    const auto it = by_id.find(s.source_id);
    if (it == by_id.end()) {
      ++violations;
      continue;
    }
    const TokenizedRequest a = tokenize_entities(it->second->raw);
    const TokenizedRequest b = tokenize_entities(s.filled_request.raw);
    if (a.size() != b.size()) {
      ++violations;
      continue;
    }
    std::size_t edits = 0;
    bool reserved_ok = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.tokens[i].text == b.tokens[i].text) continue;
      ++edits;
      reserved_ok = reserved_ok && !reserved.contains(a.tokens[i].text) && !reserved.contains(b.tokens[i].text);
    }
    violations += edits != 1 || !reserved_ok || s.filled_request.label != it->second->label;
  }
  const bool doubled = store.originals.size() == train.size() && store.synthetics.size() == train.size();
  return verdict(corpus.size() == 200 && attacks.size() == 2 && doubled && violations == 0,
                 cat(corpus.size(), " requests, ", attacks.size(), " attack types, ", train.size(),
                     " train -> ", store.originals.size() + store.synthetics.size(), " datastore, ", violations,
                     " invariant violations"));
}

Outcome calibration_guarantee() {
  const DeskRun& run = desk_run();
  const fs::path out = run.config.output_dir;
  const DetectorModel detector = DetectorModel::load(out / artifact::kDetector);
  const AugmentedDatastore store = read_datastore(out / artifact::kDatastore);
  const RequestCorpus calibration = store.combined();
  std::size_t normals = 0, flagged = 0;
  for (const auto& r : calibration.records()) {
    if (r.label != Label::kNormal) continue;
    ++normals;
    flagged += classify(detector, r, true).flagged == Label::kAbnormal;
  }
  const double fraction = normals ? static_cast<double>(flagged) / static_cast<double>(normals) : 1.0;
  return verdict(normals >= 100 && fraction <= 0.01,
                 cat(flagged, "/", normals, " calibration normals flagged, theta=", detector.theta()));
}

Outcome fill_mask_recovery() {
  const RequestCorpus corpus = testing::smoke_normals(10, 21);
  LmConfig c = testing::tiny_lm(64, 2, 300);
  c.batch_size = 2;
  c.learning_rate = 5e-3;
  const auto toy = testing::train_toy(corpus, c);
  const auto table = build_frequency_table(corpus);
  const ReservedTokenSet reserved = reserved_tokens(table, frequency_threshold(table, z_from_confidence(0.9999)));
  std::size_t trials = 0, hits = 0;
  for (const auto& r : corpus.records()) {
    const TokenizedRequest t = tokenize_entities(r.raw);
    for (std::size_t i = 0; i < t.size(); ++i) {
      // Punctuation and multi-piece words cannot come back from one slot.
      if (t.tokens[i].kind == TokenKind::kPunctuation || reserved.contains(t.tokens[i].text)) continue;
      if (toy.tokenizer->encode_chunk(t.tokens[i].text).size() != 1) continue;
      const MaskedRequest m = mask_at(r, i, reserved);
      ++trials;
      hits += fill_mask(*toy.model, m, 1)[0].text == t.tokens[i].text;
    }
  }
  const double rate = trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
  return verdict(trials > 0 && rate >= 0.9, cat(hits, "/", trials, " recovered top-1"));
}

std::vector<fs::path> files_below(const fs::path& p) {
  if (fs::is_regular_file(p)) return {p};
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(p)) {
    if (e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism() {
  testing::TempDir a, b;
  PipelineConfig c = PipelineConfig::desk();
  c.seed = 7;
  c.output_dir = a.path();
  run_all(c);
  c.output_dir = b.path();
  run_all(c);
  std::size_t compared = 0, differing = 0;
  for (const char* name : {artifact::kCorpus, artifact::kTrain, artifact::kTest, artifact::kReserved,
                           artifact::kGenerator, artifact::kDatastore, artifact::kDetector,
                           artifact::kBaselineDetector, artifact::kVerdicts, artifact::kReportTsv}) {
    const auto fa = files_below(a / name);
    const auto fb = files_below(b / name);
    if (fa.size() != fb.size() || fa.empty()) {
      ++differing;
      continue;
    }
    for (std::size_t i = 0; i < fa.size(); ++i) {
      ++compared;
      differing += fs::relative(fa[i], a.path()) != fs::relative(fb[i], b.path()) ||
                   testing::read_text(fa[i]) != testing::read_text(fb[i]);
    }
  }
  return verdict(differing == 0, cat(compared, " files compared, ", differing, " differ"));
}

// Counting-only check on the public datasets, located through environment
// variables.
Outcome full_dataset_thresholds() {
  const char* csic = std::getenv("REQAUG_CSIC_DIR");
  const char* atrdf = std::getenv("REQAUG_ATRDF_PATH");
  if (csic == nullptr && atrdf == nullptr) {
    return {Status::kSkip, "set REQAUG_CSIC_DIR and/or REQAUG_ATRDF_PATH to the full datasets"};
  }
  const double z = z_from_confidence(0.9999, 5.73);
  bool ok = true;
  std::string detail;
  auto check = [&](const char* name, const char* path, CorpusFormat format, double expected,
                   std::optional<std::size_t> expected_reserved) {
    const RequestCorpus corpus = load_corpus(path, format);
    const auto table = build_frequency_table(corpus);
    const double t = frequency_threshold(table, z);
    const std::size_t n_reserved = reserved_tokens(table, t).tokens.size();
    const double rel = std::abs(t - expected) / expected;
    const bool this_ok = rel <= 0.01 && (!expected_reserved || n_reserved == *expected_reserved);
    ok = ok && this_ok;
    detail += cat(name, " T=", t, " (rel err ", rel, ", ", n_reserved, " reserved) ");
  };
  if (csic != nullptr) check("csic", csic, CorpusFormat::kCsicRaw, 6177.41, std::nullopt);
  if (atrdf != nullptr) check("atrdf", atrdf, CorpusFormat::kAtrdf, 4977.74, 32);
  return verdict(ok, detail);
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reqaug acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "classification metrics match formula oracles", metric_oracles},
      {2, "BLEU identity and worked example", bleu_examples},
      {3, "frequency threshold and reserved set oracles", threshold_oracles},
      {4, "tokenizer byte round trip", tokenizer_round_trip},
      {5, "LM analytic gradients match finite differences", gradient_check},
      {6, "outlier selection equals brute force", outlier_equivalence},
      {7, "desk run single-edit and reserved invariants, datastore doubles", single_edit_invariants},
      {8, "calibration flags at most 1% of training normals", calibration_guarantee},
      {9, "overfit LM recovers masked tokens", fill_mask_recovery},
      {10, "identical runs give identical artifacts", determinism},
      {11, "reserved-token thresholds on the full datasets", full_dataset_thresholds},
  };

  std::size_t passed = 0, failed = 0, skipped = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    (o.status == Status::kPass ? passed : o.status == Status::kFail ? failed : skipped) += 1;
    std::cout << "criterion " << c.id << ": " << tag << "  " << c.name << "  [" << o.detail << "] ("
              << cat(std::round(secs * 10) / 10) << " s)" << std::endl;
  }
  std::cout << passed << " passed, " << failed << " failed, " << skipped << " skipped" << std::endl;
  if (failed > 0) return 1;
  if (passed == 0 && skipped > 0) return 77;
  return 0;
}
