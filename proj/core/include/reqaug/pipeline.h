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

#ifndef REQAUG_PIPELINE_H_
#define REQAUG_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reqaug/augment.h"
#include "reqaug/detect.h"
#include "reqaug/ingest.h"
#include "reqaug/language_model.h"
#include "reqaug/metrics.h"

namespace reqaug {

enum class Profile { kDesk, kPaper };
Profile parse_profile(std::string_view text);
std::string_view profile_name(Profile profile);

struct PipelineConfig {
  // Input. A smoke corpus is generated instead of read when format is smoke.
  std::vector<std::filesystem::path> dataset_paths;
  CorpusFormat format = CorpusFormat::kSmoke;
  std::size_t smoke_normal = 150;
  std::size_t smoke_abnormal = 50;

  double train_fraction = 0.7;
  std::uint64_t seed = 0;

  double confidence = 0.9999;
  std::optional<double> z_override = 5.73;

  LmConfig generator;
  LmConfig discriminator;
  LmConfig detector;
  DiscriminatorOptions discriminator_options;
  FillStrategy strategy;
  ForestConfig forest;
  double percentile = 99.0;

  std::vector<double> ablation_levels = {0.97, 0.98, 0.99, 0.995};
  std::filesystem::path output_dir = "reqaug-out";

  static PipelineConfig desk();
  static PipelineConfig paper();
  static PipelineConfig for_profile(Profile profile);

  // Keys present in `j` override the fields of `base`.
  static PipelineConfig from_json(const nlohmann::json& j, PipelineConfig base);
  nlohmann::json to_json() const;
  void validate() const;

  // Every stage seed derives from `seed`.
  std::uint64_t split_seed() const { return seed; }
  std::uint64_t generator_seed() const { return seed * 8 + 1; }
  std::uint64_t discriminator_seed() const { return seed * 8 + 2; }
  std::uint64_t detector_seed() const { return seed * 8 + 3; }
  std::uint64_t forest_seed() const { return seed * 8 + 4; }
  std::uint64_t fill_seed() const { return seed * 8 + 5; }
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path, Profile profile);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> checksums;  // relative path -> sha256 hex
  std::map<std::string, double> timings;          // stage -> seconds
  nlohmann::json counts = nlohmann::json::object();

  nlohmann::json to_json() const;
  // Hashes `path` (a file, or every file below a directory) relative to `root`.
  void add_checksums(const std::filesystem::path& root, const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
};

std::string sha256_file(const std::filesystem::path& path);

// Fixed artifact names under the output directory.
namespace artifact {
inline constexpr const char* kCorpus = "corpus.jsonl";
inline constexpr const char* kTrain = "train.jsonl";
inline constexpr const char* kTest = "test.jsonl";
inline constexpr const char* kReserved = "reserved_tokens.txt";
inline constexpr const char* kGenerator = "generator";
inline constexpr const char* kDatastore = "datastore.jsonl";
inline constexpr const char* kDetector = "detector";
inline constexpr const char* kBaselineDetector = "detector_baseline";
inline constexpr const char* kVerdicts = "verdicts.jsonl";
inline constexpr const char* kReportTsv = "report.tsv";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kAblationTsv = "ablation.tsv";
inline constexpr const char* kAblationJson = "ablation.json";
}  // namespace artifact

// Loads the dataset and writes the canonical corpus plus the train and test
// splits.
RunManifest cmd_ingest(const PipelineConfig& config);

// Reserved tokens, generator LM, candidates, discriminator and the datastore.
RunManifest cmd_augment(const PipelineConfig& config);

// Detector on the datastore plus a no-augmentation baseline detector on the
// original training records.
RunManifest cmd_train_detector(const PipelineConfig& config);

// Verdicts for `input` (the test split when empty).
RunManifest cmd_detect(const PipelineConfig& config,
                       const std::optional<std::filesystem::path>& input = std::nullopt);

// Classification reports for both detectors on the test split and the
// similarity of every synthetic to its source.
RunManifest cmd_evaluate(const PipelineConfig& config);

struct AblationRow {
  double confidence = 0.0;
  double z = 0.0;
  std::size_t reserved = 0;
  std::size_t synthetics = 0;
  double f1_baseline = 0.0;
  double f1_augmented = 0.0;
  double delta() const { return f1_augmented - f1_baseline; }
};

RunManifest cmd_ablate(const PipelineConfig& config, const std::vector<double>& levels,
                       std::vector<AblationRow>* rows = nullptr);

// ingest, augment, train-detector, detect and evaluate in order.
RunManifest run_all(const PipelineConfig& config);

}  // namespace reqaug

#endif  // REQAUG_PIPELINE_H_
