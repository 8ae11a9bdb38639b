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

#ifndef REQAUG_DETECT_H_
#define REQAUG_DETECT_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reqaug/augment.h"
#include "reqaug/ingest.h"
#include "reqaug/language_model.h"

namespace reqaug {

struct FeatureVector {
  RowVector sentence_embedding;
  double nll_mean = 0.0;
  double nll_max = 0.0;
  double nll_std = 0.0;
  std::size_t entity_count = 0;

  std::size_t dim() const { return static_cast<std::size_t>(sentence_embedding.size()) + 4; }
  // Embedding, then nll mean, max, std and the entity count.
  std::vector<double> values() const;
};

// With `truncate` set, entities past max_seq_len are dropped instead of
// raising SequenceTooLong.
FeatureVector extract_features(const LanguageModel& mlm, const RawRequestRecord& request,
                               bool truncate = false);

// One row per feature vector.
Matrix feature_matrix(std::span<const FeatureVector> features);

struct ForestConfig {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_depth;
  std::size_t min_leaf = 1;
  // ceil(sqrt(dim)) when unset.
  std::optional<std::size_t> features_per_split;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static ForestConfig from_json(const nlohmann::json& j);
};

// Axis-aligned binary tree stored as a flat node array; node 0 is the root.
// A sample goes left when x[feature] <= threshold.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    Label leaf = Label::kNormal;
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  Label predict(std::span<const double> x) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t depth() const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);

 private:
  std::vector<Node> nodes_;
};

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(std::vector<DecisionTree> trees, std::size_t dim)
      : trees_(std::move(trees)), dim_(dim) {}

  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t dim() const { return dim_; }
  std::size_t abnormal_votes(std::span<const double> x) const;
  // Fraction of trees voting abnormal.
  double probability(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

 private:
  std::vector<DecisionTree> trees_;
  std::size_t dim_ = 0;
};

// Grows one tree on the given rows of `x`.
DecisionTree grow_tree(const Matrix& x, std::span<const Label> y,
                       std::span<const std::size_t> rows, const ForestConfig& config,
                       std::mt19937_64& rng);

RandomForest train_forest(const Matrix& x, std::span<const Label> y, const ForestConfig& config);

double forest_probability(const RandomForest& forest, const FeatureVector& fv);

// Nearest-rank percentile: the value at rank ceil(percentile / 100 * N) of
// the sorted scores.
double nearest_rank_percentile(std::span<const double> scores, double percentile);
double calibrate_threshold(const RandomForest& forest, const Matrix& normal_features,
                           double percentile = 99.0);

struct Verdict {
  std::string id;
  double p_abnormal = 0.0;
  Label flagged = Label::kNormal;
};

class DetectorModel {
 public:
  DetectorModel(LanguageModel mlm, RandomForest forest, double theta, double percentile);

  const BbpeTokenizer& tokenizer() const { return mlm_.tokenizer(); }
  const LanguageModel& mlm() const { return mlm_; }
  const RandomForest& forest() const { return forest_; }
  double theta() const { return theta_; }
  double calibration_percentile() const { return percentile_; }

  void save(const std::filesystem::path& dir) const;
  static DetectorModel load(const std::filesystem::path& dir);

 private:
  LanguageModel mlm_;
  RandomForest forest_;
  double theta_;
  double percentile_;
};

// Abnormal iff p_abnormal > theta.
Verdict classify(const DetectorModel& detector, const RawRequestRecord& request,
                 bool truncate = false);
Verdict verdict_for(const std::string& id, double p_abnormal, double theta);

struct DetectorLog {
  std::size_t tokenizer_records = 0;
  std::vector<std::string> mlm_record_ids;
  std::size_t forest_records = 0;
  std::size_t calibration_records = 0;
  TrainingLog mlm;
};

// Tokenizer on originals and synthetics, MLM on the normal records only,
// forest on every record, theta from the normal records' forest scores.
DetectorModel train_detector(const AugmentedDatastore& datastore, const LmConfig& lm_config,
                             const ForestConfig& forest_config, double percentile = 99.0,
                             bool truncate = true, DetectorLog* log = nullptr);

void write_verdicts(std::span<const Verdict> verdicts, const std::filesystem::path& path);
std::vector<Verdict> read_verdicts(const std::filesystem::path& path);

}  // namespace reqaug

#endif  // REQAUG_DETECT_H_
