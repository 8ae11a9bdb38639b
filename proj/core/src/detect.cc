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

#include "reqaug/detect.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "reqaug/bbpe.h"
#include "reqaug/error.h"

namespace reqaug {
namespace {

constexpr const char* kDetectorFormat = "reqaug-detector-1";

TokenizedRequest fitting_prefix(const LanguageModel& mlm, TokenizedRequest tokens) {
  const EncodedRequest encoded =
      mlm.encode(tokens, std::nullopt, mlm.config().max_seq_len);
  if (encoded.spans.size() < tokens.tokens.size()) {
    tokens.tokens.resize(encoded.spans.size());
    tokens.separators.resize(encoded.spans.size() + 1);
  }
  return tokens;
}

double gini(std::size_t abnormal, std::size_t n) {
  if (n == 0) return 0.0;
  const double p = static_cast<double>(abnormal) / static_cast<double>(n);
  return 2.0 * p * (1.0 - p);
}

Label majority(std::span<const Label> y, std::span<const std::size_t> rows) {
  std::size_t abnormal = 0;
  for (std::size_t r : rows) abnormal += y[r] == Label::kAbnormal ? 1 : 0;
  return 2 * abnormal > rows.size() ? Label::kAbnormal : Label::kNormal;
}

struct Grower {
  const Matrix& x;
  std::span<const Label> y;
  const ForestConfig& config;
  std::size_t per_split;
  std::mt19937_64& rng;
  std::vector<DecisionTree::Node> nodes;

  int grow(std::vector<std::size_t> rows, std::size_t depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    std::size_t abnormal = 0;
    for (std::size_t r : rows) abnormal += y[r] == Label::kAbnormal ? 1 : 0;
    const bool pure = abnormal == 0 || abnormal == rows.size();
    const bool depth_cap = config.max_depth && depth >= *config.max_depth;
    if (pure || depth_cap || rows.size() < 2 * config.min_leaf) {
      nodes[id].leaf = majority(y, rows);
      return id;
    }

    // Candidate features in random order; stop after `per_split` of them had
    // at least one valid cut.
    std::vector<int> features(static_cast<std::size_t>(x.cols()));
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng);

    const double n = static_cast<double>(rows.size());
    double best_score = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    std::size_t tried = 0;
    std::vector<std::pair<double, Label>> column(rows.size());
    for (int f : features) {
      if (tried >= per_split) break;
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x(rows[i], f), y[rows[i]]};
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      bool valid = false;
      std::size_t left_abnormal = 0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        left_abnormal += column[i].second == Label::kAbnormal ? 1 : 0;
        if (column[i].first == column[i + 1].first) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = column.size() - nl;
        if (nl < config.min_leaf || nr < config.min_leaf) continue;
        valid = true;
        const double score = (static_cast<double>(nl) * gini(left_abnormal, nl) +
                              static_cast<double>(nr) * gini(abnormal - left_abnormal, nr)) / n;
        if (score < best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
          // Midpoints can round up onto the upper value.
          if (!(best_threshold < column[i + 1].first)) best_threshold = column[i].first;
        }
      }
      if (valid) ++tried;
    }
    if (best_feature < 0) {
      nodes[id].leaf = majority(y, rows);
      return id;
    }

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (x(r, best_feature) <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }
};

nlohmann::json node_json(const std::vector<DecisionTree::Node>& nodes, int id) {
  const auto& node = nodes[id];
  if (node.feature < 0) return nlohmann::json{{"leaf", std::string(label_name(node.leaf))}};
  return nlohmann::json{{"feature", node.feature},
                        {"threshold", node.threshold},
                        {"left", node_json(nodes, node.left)},
                        {"right", node_json(nodes, node.right)}};
}

int node_from_json(const nlohmann::json& j, std::vector<DecisionTree::Node>& nodes) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (j.contains("leaf")) {
    nodes[id].leaf = parse_label(j.at("leaf").get<std::string>());
    return id;
  }
  nodes[id].feature = j.at("feature").get<int>();
  nodes[id].threshold = j.at("threshold").get<double>();
  const int l = node_from_json(j.at("left"), nodes);
  const int r = node_from_json(j.at("right"), nodes);
  nodes[id].left = l;
  nodes[id].right = r;
  return id;
}

std::mt19937_64 tree_rng(std::uint64_t seed, std::size_t tree) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tree), 0x7265u};
  return std::mt19937_64(seq);
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kUnreadablePath, "cannot write " + path.string());
  out << j.dump(1) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadablePath, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, path.string() + ": " + e.what());
  }
}

}  // namespace

std::vector<double> FeatureVector::values() const {
  std::vector<double> out(sentence_embedding.data(),
                          sentence_embedding.data() + sentence_embedding.size());
  out.push_back(nll_mean);
  out.push_back(nll_max);
  out.push_back(nll_std);
  out.push_back(static_cast<double>(entity_count));
  return out;
}

FeatureVector extract_features(const LanguageModel& mlm, const RawRequestRecord& request,
                               bool truncate) {
  TokenizedRequest tokens = tokenize_entities(request.raw);
  if (tokens.tokens.empty()) throw Error(ErrorCode::kEmptyRequest, "request " + request.id);
  if (truncate) tokens = fitting_prefix(mlm, std::move(tokens));
  FeatureVector fv;
  fv.sentence_embedding = sentence_embedding(mlm, tokens);
  const std::vector<double> nll = token_nll(mlm, tokens);
  const double n = static_cast<double>(nll.size());
  fv.nll_mean = std::accumulate(nll.begin(), nll.end(), 0.0) / n;
  fv.nll_max = *std::max_element(nll.begin(), nll.end());
  double var = 0.0;
  for (double v : nll) var += (v - fv.nll_mean) * (v - fv.nll_mean);
  fv.nll_std = std::sqrt(var / n);
  fv.entity_count = tokens.tokens.size();
  return fv;
}

Matrix feature_matrix(std::span<const FeatureVector> features) {
  if (features.empty()) return Matrix(0, 0);
  const auto dim = static_cast<Eigen::Index>(features.front().dim());
  Matrix out(static_cast<Eigen::Index>(features.size()), dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::vector<double> v = features[i].values();
    if (static_cast<Eigen::Index>(v.size()) != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "feature vectors of different sizes");
    }
    out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const RowVector>(v.data(), dim);
  }
  return out;
}

void ForestConfig::validate() const {
  if (n_trees < 1) throw Error(ErrorCode::kInvalidConfig, "n_trees must be >= 1");
  if (min_leaf < 1) throw Error(ErrorCode::kInvalidConfig, "min_leaf must be >= 1");
  if (features_per_split && *features_per_split < 1) {
    throw Error(ErrorCode::kInvalidConfig, "features_per_split must be >= 1");
  }
}

nlohmann::json ForestConfig::to_json() const {
  nlohmann::json j{{"n_trees", n_trees}, {"min_leaf", min_leaf},
                   {"bootstrap", bootstrap}, {"seed", seed}};
  j["max_depth"] = max_depth ? nlohmann::json(*max_depth) : nlohmann::json(nullptr);
  j["features_per_split"] =
      features_per_split ? nlohmann::json(*features_per_split) : nlohmann::json(nullptr);
  return j;
}

ForestConfig ForestConfig::from_json(const nlohmann::json& j) {
  ForestConfig c;
  c.n_trees = j.value("n_trees", c.n_trees);
  c.min_leaf = j.value("min_leaf", c.min_leaf);
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  c.seed = j.value("seed", c.seed);
  if (j.contains("max_depth") && !j.at("max_depth").is_null()) {
    c.max_depth = j.at("max_depth").get<std::size_t>();
  }
  if (j.contains("features_per_split") && !j.at("features_per_split").is_null()) {
    c.features_per_split = j.at("features_per_split").get<std::size_t>();
  }
  return c;
}

Label DecisionTree::predict(std::span<const double> x) const {
  if (nodes_.empty()) throw Error(ErrorCode::kCorruptArtifact, "empty decision tree");
  int id = 0;
  while (nodes_[id].feature >= 0) {
    const auto& node = nodes_[id];
    if (static_cast<std::size_t>(node.feature) >= x.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "feature index past the input");
    }
    id = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes_[id].leaf;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    if (node.feature < 0) continue;
    depth[node.left] = depth[i] + 1;
    depth[node.right] = depth[i] + 1;
    best = std::max(best, depth[i] + 1);
  }
  return best;
}

nlohmann::json DecisionTree::to_json() const {
  if (nodes_.empty()) return nlohmann::json(nullptr);
  return node_json(nodes_, 0);
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  std::vector<Node> nodes;
  node_from_json(j, nodes);
  return DecisionTree(std::move(nodes));
}

std::size_t RandomForest::abnormal_votes(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "forest expects " + std::to_string(dim_) +
                                                   " features, got " + std::to_string(x.size()));
  }
  std::size_t votes = 0;
  for (const auto& tree : trees_) votes += tree.predict(x) == Label::kAbnormal ? 1 : 0;
  return votes;
}

double RandomForest::probability(std::span<const double> x) const {
  if (trees_.empty()) throw Error(ErrorCode::kCorruptArtifact, "forest has no trees");
  return static_cast<double>(abnormal_votes(x)) / static_cast<double>(trees_.size());
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return nlohmann::json{{"dim", dim_}, {"class_order", {"normal", "abnormal"}}, {"trees", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  std::vector<DecisionTree> trees;
  for (const auto& t : j.at("trees")) trees.push_back(DecisionTree::from_json(t));
  return RandomForest(std::move(trees), j.at("dim").get<std::size_t>());
}

DecisionTree grow_tree(const Matrix& x, std::span<const Label> y,
                       std::span<const std::size_t> rows, const ForestConfig& config,
                       std::mt19937_64& rng) {
  const auto dim = static_cast<std::size_t>(x.cols());
  const std::size_t per_split = config.features_per_split.value_or(
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim)))));
  Grower grower{x, y, config, std::max<std::size_t>(1, per_split), rng, {}};
  grower.grow(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
  return DecisionTree(std::move(grower.nodes));
}

RandomForest train_forest(const Matrix& x, std::span<const Label> y, const ForestConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  if (n != y.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(n) + " feature rows for " +
                                                std::to_string(y.size()) + " labels");
  }
  const auto abnormal = static_cast<std::size_t>(std::count(y.begin(), y.end(), Label::kAbnormal));
  if (n < 2 || abnormal == 0 || abnormal == n) {
    throw Error(ErrorCode::kSingleClassInput, "forest training needs both classes");
  }
  std::vector<DecisionTree> trees;
  trees.reserve(config.n_trees);
  std::vector<std::size_t> rows(n);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    std::mt19937_64 rng = tree_rng(config.seed, t);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (auto& r : rows) r = draw(rng);
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    trees.push_back(grow_tree(x, y, rows, config, rng));
  }
  return RandomForest(std::move(trees), static_cast<std::size_t>(x.cols()));
}

double forest_probability(const RandomForest& forest, const FeatureVector& fv) {
  return forest.probability(fv.values());
}

double nearest_rank_percentile(std::span<const double> scores, double percentile) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyCalibrationSet, "no calibration scores");
  if (!(percentile > 0.0 && percentile <= 100.0)) {
    throw Error(ErrorCode::kOutOfRange, "percentile must lie in (0, 100]");
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double exact = percentile * static_cast<double>(sorted.size()) / 100.0;
  // Guard against p * N / 100 landing a hair above an integer.
  auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double calibrate_threshold(const RandomForest& forest, const Matrix& normal_features,
                           double percentile) {
  std::vector<double> scores(static_cast<std::size_t>(normal_features.rows()));
  for (Eigen::Index i = 0; i < normal_features.rows(); ++i) {
    const RowVector row = normal_features.row(i);
    scores[static_cast<std::size_t>(i)] =
        forest.probability(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  }
  return nearest_rank_percentile(scores, percentile);
}

DetectorModel::DetectorModel(LanguageModel mlm, RandomForest forest, double theta,
                             double percentile)
    : mlm_(std::move(mlm)), forest_(std::move(forest)), theta_(theta), percentile_(percentile) {
  if (!(theta_ >= 0.0 && theta_ <= 1.0)) throw Error(ErrorCode::kOutOfRange, "theta outside [0, 1]");
}

void DetectorModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  mlm_.save(dir / "mlm");
  write_json(forest_.to_json(), dir / "forest.json");
  write_json(nlohmann::json{{"format", kDetectorFormat},
                            {"theta", theta_},
                            {"calibration_percentile", percentile_},
                            {"n_trees", forest_.trees().size()},
                            {"feature_dim", forest_.dim()}},
             dir / "calibration.json");
}

DetectorModel DetectorModel::load(const std::filesystem::path& dir) {
  const nlohmann::json calibration = read_json(dir / "calibration.json");
  if (calibration.value("format", std::string()) != kDetectorFormat) {
    throw Error(ErrorCode::kCorruptArtifact, "unknown detector artifact format");
  }
  RandomForest forest;
  try {
    forest = RandomForest::from_json(read_json(dir / "forest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, std::string("forest.json: ") + e.what());
  }
  return DetectorModel(LanguageModel::load(dir / "mlm"), std::move(forest),
                       calibration.at("theta").get<double>(),
                       calibration.at("calibration_percentile").get<double>());
}

Verdict verdict_for(const std::string& id, double p_abnormal, double theta) {
  return Verdict{id, p_abnormal, p_abnormal > theta ? Label::kAbnormal : Label::kNormal};
}

Verdict classify(const DetectorModel& detector, const RawRequestRecord& request, bool truncate) {
  const FeatureVector fv = extract_features(detector.mlm(), request, truncate);
  return verdict_for(request.id, forest_probability(detector.forest(), fv), detector.theta());
}

DetectorModel train_detector(const AugmentedDatastore& datastore, const LmConfig& lm_config,
                             const ForestConfig& forest_config, double percentile,
                             bool truncate, DetectorLog* log) {
  const RequestCorpus all = datastore.combined();
  const RequestCorpus normals = all.filter(Label::kNormal);
  if (normals.empty() || normals.size() == all.size()) {
    throw Error(ErrorCode::kSingleClassInput, "detector training needs both classes");
  }
  DetectorLog local;
  local.tokenizer_records = all.size();
  auto tokenizer = std::make_shared<const BbpeTokenizer>(
      train_bbpe(all, static_cast<std::size_t>(lm_config.vocab_size), lm_config.seed));
  for (const auto& r : normals.records()) local.mlm_record_ids.push_back(r.id);
  LanguageModel mlm = train_mlm(tokenizer, normals, lm_config, &local.mlm);

  std::vector<FeatureVector> features;
  std::vector<Label> labels;
  features.reserve(all.size());
  for (const auto& r : all.records()) {
    features.push_back(extract_features(mlm, r, truncate));
    labels.push_back(r.label);
  }
  const Matrix x = feature_matrix(features);
  RandomForest forest = train_forest(x, labels, forest_config);

  std::vector<Eigen::Index> normal_rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::kNormal) normal_rows.push_back(static_cast<Eigen::Index>(i));
  }
  Matrix normal_x(static_cast<Eigen::Index>(normal_rows.size()), x.cols());
  for (std::size_t i = 0; i < normal_rows.size(); ++i) {
    normal_x.row(static_cast<Eigen::Index>(i)) = x.row(normal_rows[i]);
  }
  const double theta = calibrate_threshold(forest, normal_x, percentile);
  local.forest_records = all.size();
  local.calibration_records = normal_rows.size();
  if (log != nullptr) *log = std::move(local);
  return DetectorModel(std::move(mlm), std::move(forest), theta, percentile);
}

void write_verdicts(std::span<const Verdict> verdicts, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kUnreadablePath, "cannot write " + path.string());
  for (const auto& v : verdicts) {
    out << nlohmann::json{{"id", v.id},
                          {"p_abnormal", v.p_abnormal},
                          {"flagged", std::string(label_name(v.flagged))}}
               .dump()
        << '\n';
  }
}

std::vector<Verdict> read_verdicts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadablePath, "cannot open " + path.string());
  std::vector<Verdict> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back(Verdict{j.at("id").get<std::string>(), j.at("p_abnormal").get<double>(),
                            parse_label(j.at("flagged").get<std::string>())});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptArtifact, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace reqaug
