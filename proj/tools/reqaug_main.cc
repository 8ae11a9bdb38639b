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

// reqaug command-line driver.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reqaug/error.h"
#include "reqaug/pipeline.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int exit_code_for(reqaug::ErrorCategory category) {
  switch (category) {
    case reqaug::ErrorCategory::kConfig: return kExitConfig;
    case reqaug::ErrorCategory::kData: return kExitData;
    case reqaug::ErrorCategory::kNumerical: return kExitNumerical;
  }
  return kExitData;
}

void print_manifest(const reqaug::RunManifest& m) {
  std::cout << m.command << ": " << m.counts.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reqaug: fill-mask augmentation and anomaly detection for HTTP request corpora"};
  app.require_subcommand(1);

  std::string config_path;
  if (const char* env = std::getenv("REQAUG_CONFIG")) config_path = env;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string profile = "desk";
  app.add_option("--config", config_path, "JSON pipeline config (default: $REQAUG_CONFIG)");
  app.add_option("--seed", seed, "Master seed for every stage");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--profile", profile, "Preset the config file is layered on")
      ->check(CLI::IsMember({"desk", "paper"}));

  auto* ingest = app.add_subcommand("ingest", "Load the dataset and write corpus and split files");
  auto* augment = app.add_subcommand("augment", "Build the augmented datastore");
  auto* train = app.add_subcommand("train-detector", "Train augmented and baseline detectors");
  auto* detect = app.add_subcommand("detect", "Classify a canonical corpus");
  std::string detect_input;
  detect->add_option("--input", detect_input, "Canonical corpus (default: the test split)");
  auto* evaluate = app.add_subcommand("evaluate", "Write similarity and classification reports");
  auto* ablate = app.add_subcommand("ablate", "Sweep reserved-token confidence levels");
  std::vector<double> levels;
  ablate->add_option("--levels", levels, "Confidence levels in (0, 1)");
  auto* all = app.add_subcommand("all", "ingest, augment, train-detector, detect and evaluate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const reqaug::Profile p = reqaug::parse_profile(profile);
    reqaug::PipelineConfig config = config_path.empty()
                                        ? reqaug::PipelineConfig::for_profile(p)
                                        : reqaug::load_pipeline_config(config_path, p);
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.output_dir = out_dir;

    if (ingest->parsed()) print_manifest(reqaug::cmd_ingest(config));
    if (augment->parsed()) print_manifest(reqaug::cmd_augment(config));
    if (train->parsed()) print_manifest(reqaug::cmd_train_detector(config));
    if (detect->parsed()) {
      std::optional<std::filesystem::path> input;
      if (!detect_input.empty()) input = detect_input;
      print_manifest(reqaug::cmd_detect(config, input));
    }
    if (evaluate->parsed()) print_manifest(reqaug::cmd_evaluate(config));
    if (ablate->parsed()) {
      print_manifest(reqaug::cmd_ablate(config, levels.empty() ? config.ablation_levels : levels));
    }
    if (all->parsed()) print_manifest(reqaug::run_all(config));
  } catch (const reqaug::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
