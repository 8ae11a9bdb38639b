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
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "reqaug/detect.h"
#include "reqaug/error.h"
#include "reqaug_test_support.h"

namespace reqaug {
namespace {

using testing::TempDir;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no reqaug::Error thrown";
  return ErrorCode::kCorruptArtifact;
}

std::span<const double> row_span(const Matrix& x, Eigen::Index i) {
  return {x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())};
}

// Two Gaussian blobs in `dim` dimensions, shifted apart along the first two.
void blobs(std::size_t n, std::size_t dim, std::uint64_t seed, Matrix& x, std::vector<Label>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 3 == 0 ? Label::kAbnormal : Label::kNormal;
    for (std::size_t d = 0; d < dim; ++d) {
      const double shift = (d < 2 && y[i] == Label::kAbnormal) ? 1.5 : 0.0;
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = noise(rng) + shift;
    }
  }
}

DecisionTree leaf(Label l) {
  DecisionTree::Node n;
  n.leaf = l;
  return DecisionTree({n});
}

TEST(Forest, TwoSeparablePoints) {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  const std::vector<Label> y = {Label::kNormal, Label::kAbnormal};
  ForestConfig c;
  c.n_trees = 1;
  c.bootstrap = false;
  const RandomForest f = train_forest(x, y, c);
  EXPECT_EQ(f.trees()[0].predict(row_span(x, 0)), Label::kNormal);
  EXPECT_EQ(f.trees()[0].predict(row_span(x, 1)), Label::kAbnormal);
  EXPECT_DOUBLE_EQ(f.trees()[0].nodes()[0].threshold, 0.5);
}

TEST(Forest, Deterministic) {
  Matrix x;
  std::vector<Label> y;
  blobs(90, 6, 1, x, y);
  ForestConfig c;
  c.n_trees = 15;
  c.seed = 77;
  const auto first = train_forest(x, y, c).to_json();
  EXPECT_EQ(first, train_forest(x, y, c).to_json());
  c.seed = 78;
  EXPECT_NE(first, train_forest(x, y, c).to_json());
}

TEST(Forest, UnbootstrappedTreesFitTrainingData) {
  Matrix x;
  std::vector<Label> y;
  blobs(60, 5, 2, x, y);
  ForestConfig c;
  c.n_trees = 8;
  c.bootstrap = false;
  const RandomForest f = train_forest(x, y, c);
  for (const auto& tree : f.trees()) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      EXPECT_EQ(tree.predict(row_span(x, i)), y[static_cast<std::size_t>(i)]);
    }
  }
}

TEST(Forest, MoreTreesKeepEarlierOnes) {
  Matrix x;
  std::vector<Label> y;
  blobs(80, 6, 3, x, y);
  ForestConfig small;
  small.n_trees = 5;
  small.seed = 4;
  ForestConfig big = small;
  big.n_trees = 12;
  const RandomForest a = train_forest(x, y, small);
  const RandomForest b = train_forest(x, y, big);
  for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(a.trees()[t].to_json(), b.trees()[t].to_json());
}

TEST(Forest, DepthAndLeafLimits) {
  Matrix x;
  std::vector<Label> y;
  blobs(100, 4, 5, x, y);
  ForestConfig c;
  c.n_trees = 4;
  c.max_depth = 2;
  const RandomForest shallow = train_forest(x, y, c);
  for (const auto& t : shallow.trees()) EXPECT_LE(t.depth(), 2u);
  c.max_depth.reset();
  c.min_leaf = 10;
  c.bootstrap = false;
  const RandomForest f = train_forest(x, y, c);
  for (const auto& t : f.trees()) {
    std::vector<std::size_t> per_leaf(t.nodes().size(), 0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      int node = 0;
      while (t.nodes()[node].feature >= 0) {
        node = x(i, t.nodes()[node].feature) <= t.nodes()[node].threshold ? t.nodes()[node].left
                                                                          : t.nodes()[node].right;
      }
      ++per_leaf[node];
    }
    for (std::size_t n = 0; n < per_leaf.size(); ++n) {
      if (t.nodes()[n].feature < 0) EXPECT_GE(per_leaf[n], 10u);
    }
  }
}

TEST(Forest, VoteCountOracle) {
  Matrix x;
  std::vector<Label> y;
  blobs(70, 5, 6, x, y);
  ForestConfig c;
  c.n_trees = 13;
  const RandomForest f = train_forest(x, y, c);
  Matrix probe;
  std::vector<Label> ignored;
  blobs(40, 5, 99, probe, ignored);
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    std::size_t votes = 0;
    for (const auto& t : f.trees()) votes += t.predict(row_span(probe, i)) == Label::kAbnormal;
    const double p = f.probability(row_span(probe, i));
    EXPECT_DOUBLE_EQ(p, static_cast<double>(votes) / 13.0);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_EQ(f.abnormal_votes(row_span(probe, i)), votes);
  }
}

TEST(Forest, HandBuiltVotes) {
  std::vector<DecisionTree> trees;
  for (int i = 0; i < 10; ++i) trees.push_back(leaf(i < 7 ? Label::kAbnormal : Label::kNormal));
  const RandomForest seven(trees, 1);
  const std::vector<double> x = {0.0};
  EXPECT_DOUBLE_EQ(seven.probability(x), 0.7);
  const RandomForest all(std::vector<DecisionTree>(4, leaf(Label::kAbnormal)), 1);
  EXPECT_DOUBLE_EQ(all.probability(x), 1.0);
}

TEST(Forest, InputErrors) {
  Matrix x(3, 1);
  x << 1, 2, 3;
  const std::vector<Label> same(3, Label::kNormal);
  EXPECT_EQ(code_of([&] { train_forest(x, same, ForestConfig{}); }), ErrorCode::kSingleClassInput);
  const std::vector<Label> short_labels = {Label::kNormal, Label::kAbnormal};
  EXPECT_EQ(code_of([&] { train_forest(x, short_labels, ForestConfig{}); }), ErrorCode::kLengthMismatch);
  ForestConfig bad;
  bad.n_trees = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Forest, JsonRoundTrip) {
  Matrix x;
  std::vector<Label> y;
  blobs(50, 3, 7, x, y);
  ForestConfig c;
  c.n_trees = 6;
  c.max_depth = 4;
  c.features_per_split = 2;
  c.seed = 12345678901234ULL;
  const ForestConfig back_config = ForestConfig::from_json(c.to_json());
  EXPECT_EQ(back_config.to_json(), c.to_json());
  const RandomForest f = train_forest(x, y, c);
  const RandomForest back = RandomForest::from_json(nlohmann::json::parse(f.to_json().dump()));
  EXPECT_EQ(back.dim(), f.dim());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    EXPECT_EQ(back.probability(row_span(x, i)), f.probability(row_span(x, i)));
  }
}

TEST(Percentile, NearestRank) {
  std::vector<double> s;
  for (int i = 1; i <= 100; ++i) s.push_back(i / 100.0);
  std::shuffle(s.begin(), s.end(), std::mt19937_64(1));
  EXPECT_DOUBLE_EQ(nearest_rank_percentile(s, 99.0), 0.99);
  EXPECT_DOUBLE_EQ(nearest_rank_percentile(s, 100.0), 1.0);
  EXPECT_DOUBLE_EQ(nearest_rank_percentile(s, 50.0), 0.5);
  EXPECT_DOUBLE_EQ(nearest_rank_percentile(std::vector<double>(7, 0.3), 99.0), 0.3);
  EXPECT_EQ(code_of([] { nearest_rank_percentile(std::vector<double>{}, 99.0); }),
            ErrorCode::kEmptyCalibrationSet);
  EXPECT_EQ(code_of([] { nearest_rank_percentile(std::vector<double>{1.0}, 0.0); }), ErrorCode::kOutOfRange);
}

// The fraction of scores strictly above theta never exceeds (100 - p) / 100.
TEST(Percentile, ThresholdGuarantee) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 400)(rng);
    const int levels = std::uniform_int_distribution<int>(1, 20)(rng);
    std::vector<double> s(n);
    for (auto& v : s) v = std::uniform_int_distribution<int>(0, levels)(rng) / static_cast<double>(levels);
    const double p = std::uniform_real_distribution<double>(50.0, 100.0)(rng);
    const double theta = nearest_rank_percentile(s, p);
    const auto above = std::count_if(s.begin(), s.end(), [&](double v) { return v > theta; });
    EXPECT_LE(static_cast<double>(above) / static_cast<double>(n), (100.0 - p) / 100.0 + 1e-12);
    // The rank is the smallest one meeting the guarantee.
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) / 100.0 - 1e-9));
    EXPECT_EQ(theta, sorted[std::clamp<std::size_t>(rank, 1, n) - 1]);
  }
}

TEST(Verdict, StrictInequality) {
  EXPECT_EQ(verdict_for("a", 0.5, 0.5).flagged, Label::kNormal);
  EXPECT_EQ(verdict_for("a", 1.0, 0.99).flagged, Label::kAbnormal);
  EXPECT_EQ(verdict_for("a", 0.0, 0.0).flagged, Label::kNormal);
}

TEST(Verdict, FileRoundTrip) {
  TempDir dir;
  const std::vector<Verdict> v = {{"a", 0.25, Label::kNormal}, {"b", 0.9, Label::kAbnormal}};
  write_verdicts(v, dir / "v.jsonl");
  const auto back = read_verdicts(dir / "v.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].id, "b");
  EXPECT_DOUBLE_EQ(back[1].p_abnormal, 0.9);
  EXPECT_EQ(back[1].flagged, Label::kAbnormal);
}

class FeatureFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    toy_ = new testing::ToyModel(testing::train_toy(testing::smoke_normals(40, 8), testing::tiny_lm(16, 1, 40)));
  }
  static void TearDownTestSuite() { delete toy_; }
  static testing::ToyModel* toy_;
};
testing::ToyModel* FeatureFixture::toy_ = nullptr;

TEST_F(FeatureFixture, ShapeAndSummaries) {
  const auto& r = toy_->corpus[0];
  const FeatureVector fv = extract_features(*toy_->model, r);
  EXPECT_EQ(fv.dim(), 16u + 4u);
  EXPECT_EQ(fv.values().size(), fv.dim());
  const auto nll = token_nll(*toy_->model, r);
  EXPECT_EQ(fv.entity_count, nll.size());
  EXPECT_DOUBLE_EQ(fv.nll_max, *std::max_element(nll.begin(), nll.end()));
  double mean = 0.0;
  for (double v : nll) mean += v;
  mean /= static_cast<double>(nll.size());
  EXPECT_NEAR(fv.nll_mean, mean, 1e-12);
  EXPECT_LE(fv.nll_mean, fv.nll_max);
  EXPECT_EQ(fv.values().back(), static_cast<double>(nll.size()));
}

TEST_F(FeatureFixture, NovelTokenRaisesMaxNll) {
  std::size_t raised = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& r = toy_->corpus[i];
    auto injected = r;
    injected.raw += " zqxjvk";
    raised += extract_features(*toy_->model, injected).nll_max > extract_features(*toy_->model, r).nll_max;
  }
  EXPECT_EQ(raised, 10u);
}

TEST_F(FeatureFixture, TruncationDropsTrailingEntities) {
  auto r = toy_->corpus[0];
  for (int i = 0; i < 100; ++i) r.raw += " w" + std::to_string(i);
  EXPECT_EQ(code_of([&] { extract_features(*toy_->model, r); }), ErrorCode::kSequenceTooLong);
  const FeatureVector fv = extract_features(*toy_->model, r, true);
  EXPECT_LT(fv.entity_count, tokenize_entities(r.raw).size());
}

class DetectorFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const RequestCorpus corpus = make_smoke_corpus(120, 40, 13);
    store_ = new AugmentedDatastore;
    store_->originals = corpus;
    forest_.n_trees = 30;
    forest_.seed = 2;
    detector_ = new DetectorModel(train_detector(*store_, lm(), forest_, 99.0, true, &log_));
  }
  static void TearDownTestSuite() {
    delete store_;
    delete detector_;
  }
  static LmConfig lm() { return testing::tiny_lm(16, 1, 8); }
  static AugmentedDatastore* store_;
  static DetectorModel* detector_;
  static DetectorLog log_;
  static ForestConfig forest_;
};
AugmentedDatastore* DetectorFixture::store_ = nullptr;
DetectorModel* DetectorFixture::detector_ = nullptr;
DetectorLog DetectorFixture::log_;
ForestConfig DetectorFixture::forest_;

TEST_F(DetectorFixture, MlmSeesOnlyNormals) {
  std::set<std::string> normal_ids;
  for (const auto& r : store_->originals.records()) {
    if (r.label == Label::kNormal) normal_ids.insert(r.id);
  }
  EXPECT_EQ(std::set<std::string>(log_.mlm_record_ids.begin(), log_.mlm_record_ids.end()), normal_ids);
  EXPECT_EQ(log_.mlm_record_ids.size(), 120u);
  EXPECT_EQ(log_.forest_records, 160u);
  EXPECT_EQ(log_.calibration_records, 120u);
  EXPECT_EQ(log_.tokenizer_records, 160u);
}

TEST_F(DetectorFixture, CalibrationNormalsMostlyPass) {
  std::size_t flagged = 0, normals = 0;
  for (const auto& r : store_->originals.records()) {
    if (r.label != Label::kNormal) continue;
    ++normals;
    flagged += classify(*detector_, r, true).flagged == Label::kAbnormal;
  }
  EXPECT_LE(static_cast<double>(flagged) / static_cast<double>(normals), 0.01);
  const double p = detector_->theta() * forest_.n_trees;
  EXPECT_NEAR(p, std::round(p), 1e-9) << "theta is a vote fraction";
}

TEST_F(DetectorFixture, SaveLoadKeepsVerdicts) {
  TempDir dir;
  detector_->save(dir.path());
  const DetectorModel back = DetectorModel::load(dir.path());
  EXPECT_EQ(back.theta(), detector_->theta());
  EXPECT_EQ(back.calibration_percentile(), 99.0);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& r = store_->originals[i * 7];
    const Verdict a = classify(*detector_, r, true);
    const Verdict b = classify(back, r, true);
    EXPECT_EQ(a.p_abnormal, b.p_abnormal);
    EXPECT_EQ(a.flagged, b.flagged);
  }
}

TEST_F(DetectorFixture, EmptySyntheticsMatchBaseline) {
  AugmentedDatastore originals_only;
  originals_only.originals = store_->originals;
  const DetectorModel again = train_detector(originals_only, lm(), forest_, 99.0, true);
  EXPECT_EQ(again.theta(), detector_->theta());
  EXPECT_EQ(again.forest().to_json(), detector_->forest().to_json());
}

TEST(Detector, NeedsBothClasses) {
  AugmentedDatastore store;
  store.originals = testing::smoke_normals(10);
  EXPECT_EQ(code_of([&] { train_detector(store, testing::tiny_lm(), ForestConfig{}); }),
            ErrorCode::kSingleClassInput);
}

}  // namespace
}  // namespace reqaug
