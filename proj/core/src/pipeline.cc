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

#include "reqaug/pipeline.h"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <fstream>
#include <set>

#include "escape.h"
#include "reqaug/error.h"
#include "reqaug/lexicon.h"

namespace reqaug {
namespace {

namespace fs = std::filesystem;

class StageTimer {
 public:
  StageTimer(RunManifest& manifest, std::string stage)
      : manifest_(manifest), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
    manifest_.timings[stage_] += elapsed.count();
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  RunManifest& manifest_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

RunManifest start_manifest(const PipelineConfig& config, std::string command) {
  RunManifest m;
  m.command = std::move(command);
  m.config = config.to_json();
  m.seeds = {{"seed", config.seed},
             {"split", config.split_seed()},
             {"generator", config.generator_seed()},
             {"discriminator", config.discriminator_seed()},
             {"detector", config.detector_seed()},
             {"forest", config.forest_seed()},
             {"fill", config.fill_seed()}};
  return m;
}

void finish_manifest(const PipelineConfig& config, const RunManifest& m) {
  m.write(config.output_dir / ("manifest-" + m.command + ".json"));
}

fs::path require(const PipelineConfig& config, const char* name, const char* producer) {
  const fs::path p = config.output_dir / name;
  if (!fs::exists(p)) {
    throw Error(ErrorCode::kUnreadablePath,
                p.string() + " is missing; run '" + producer + "' first");
  }
  return p;
}

LmConfig seeded(LmConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

ForestConfig seeded(ForestConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

void write_json_file(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kUnreadablePath, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ReservedTokenSet reserved_for(const RequestCorpus& train, double confidence,
                              std::optional<double> z_override) {
  const TokenFrequencyTable table = build_frequency_table(train);
  const double z = z_from_confidence(confidence, z_override);
  ReservedTokenSet reserved = reserved_tokens(table, frequency_threshold(table, z));
  reserved.z = z;
  if (!z_override) reserved.confidence = confidence;
  return reserved;
}

struct AugmentOutcome {
  AugmentedDatastore store;
  AugmentStats stats;
};

AugmentOutcome augment_with(const PipelineConfig& config, const RequestCorpus& train,
                            const LanguageModel& generator, const ReservedTokenSet& reserved,
                            RunManifest& manifest) {
  AugmentOutcome out;
  std::vector<CandidateSample> candidates;
  {
    StageTimer t(manifest, "generate");
    candidates = generate_candidates(train, generator, reserved, config.strategy,
                                     config.fill_seed(), &out.stats);
  }
  if (candidates.empty()) {
    out.store.originals = train;
    return out;
  }
  StageTimer t(manifest, "discriminate");
  const Discriminator disc = train_discriminator(
      generator.tokenizer_ptr(), seeded(config.discriminator, config.discriminator_seed()), train,
      candidates, config.discriminator_options);
  out.store = build_datastore(train, candidates, disc, &out.stats);
  return out;
}

nlohmann::json stats_json(const AugmentStats& s) {
  return nlohmann::json{{"attempted", s.attempted}, {"generated", s.generated},
                        {"no_maskable", s.no_maskable}, {"no_viable", s.no_viable},
                        {"too_long", s.too_long},     {"rejected", s.rejected},
                        {"accepted", s.accepted}};
}

DetectorModel detector_for(const PipelineConfig& config, const AugmentedDatastore& store,
                           DetectorLog* log) {
  return train_detector(store, seeded(config.detector, config.detector_seed()),
                        seeded(config.forest, config.forest_seed()), config.percentile, true, log);
}

std::vector<Verdict> classify_all(const DetectorModel& detector, const RequestCorpus& corpus) {
  std::vector<Verdict> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus.records()) out.push_back(classify(detector, r, true));
  return out;
}

std::vector<Label> labels_of(const RequestCorpus& corpus) {
  std::vector<Label> out;
  for (const auto& r : corpus.records()) out.push_back(r.label);
  return out;
}

double f1_on(const DetectorModel& detector, const RequestCorpus& test) {
  const auto verdicts = classify_all(detector, test);
  return f1(confusion(verdicts, labels_of(test)));
}

}  // namespace

Profile parse_profile(std::string_view text) {
  if (text == "desk") return Profile::kDesk;
  if (text == "paper") return Profile::kPaper;
  throw Error(ErrorCode::kInvalidConfig, "unknown profile '" + std::string(text) + "'");
}

std::string_view profile_name(Profile profile) {
  return profile == Profile::kDesk ? "desk" : "paper";
}

PipelineConfig PipelineConfig::desk() {
  PipelineConfig c;
  c.generator = LmConfig::desk();
  c.discriminator = LmConfig::desk();
  c.discriminator.epochs = 5;
  c.detector = LmConfig::desk();
  return c;
}

PipelineConfig PipelineConfig::paper() {
  PipelineConfig c;
  c.generator = LmConfig::paper();
  c.discriminator = LmConfig::paper();
  c.discriminator.epochs = 5;
  c.detector = LmConfig::paper();
  c.ablation_levels = {0.97, 0.98, 0.99, 0.995};
  return c;
}

PipelineConfig PipelineConfig::for_profile(Profile profile) {
  return profile == Profile::kDesk ? desk() : paper();
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, PipelineConfig c) {
  static const std::set<std::string> kKnown = {
      "profile",   "dataset",   "split",    "seed",        "lexicon", "generator",
      "discriminator", "detector", "augment", "forest", "calibration", "ablation",
      "output_dir"};
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (kKnown.count(key) == 0) throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
  }
  try {
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      if (d.contains("format")) c.format = parse_corpus_format(d.at("format").get<std::string>());
      if (d.contains("paths")) {
        c.dataset_paths.clear();
        for (const auto& p : d.at("paths")) c.dataset_paths.emplace_back(p.get<std::string>());
      }
      c.smoke_normal = d.value("smoke_normal", c.smoke_normal);
      c.smoke_abnormal = d.value("smoke_abnormal", c.smoke_abnormal);
    }
    if (j.contains("split")) c.train_fraction = j.at("split").value("train_fraction", c.train_fraction);
    c.seed = j.value("seed", c.seed);
    if (j.contains("lexicon")) {
      const auto& l = j.at("lexicon");
      c.confidence = l.value("confidence", c.confidence);
      if (l.contains("z_override")) {
        c.z_override = l.at("z_override").is_null()
                           ? std::nullopt
                           : std::optional<double>(l.at("z_override").get<double>());
      }
    }
    auto lm = [&](const char* key, LmConfig& target) {
      if (!j.contains(key)) return;
      nlohmann::json merged = target.to_json();
      merged.update(j.at(key));
      target = LmConfig::from_json(merged);
    };
    lm("generator", c.generator);
    lm("discriminator", c.discriminator);
    lm("detector", c.detector);
    if (j.contains("augment")) {
      const auto& a = j.at("augment");
      c.discriminator_options.tau_accept = a.value("tau_accept", c.discriminator_options.tau_accept);
      c.discriminator_options.tau_uncertainty =
          a.value("tau_uncertainty", c.discriminator_options.tau_uncertainty);
      if (a.contains("strategy")) {
        const FillStrategy parsed = FillStrategy::parse(a.at("strategy").get<std::string>());
        c.strategy.kind = parsed.kind;
      }
      c.strategy.k = a.value("k", c.strategy.k);
      c.strategy.temperature = a.value("temperature", c.strategy.temperature);
    }
    if (j.contains("forest")) {
      nlohmann::json merged = c.forest.to_json();
      merged.update(j.at("forest"));
      c.forest = ForestConfig::from_json(merged);
    }
    if (j.contains("calibration")) c.percentile = j.at("calibration").value("percentile", c.percentile);
    if (j.contains("ablation")) {
      c.ablation_levels = j.at("ablation").value("levels", c.ablation_levels);
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  return c;
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json paths = nlohmann::json::array();
  for (const auto& p : dataset_paths) paths.push_back(p.string());
  return nlohmann::json{
      {"dataset",
       {{"format", std::string(corpus_format_name(format))},
        {"paths", paths},
        {"smoke_normal", smoke_normal},
        {"smoke_abnormal", smoke_abnormal}}},
      {"split", {{"train_fraction", train_fraction}}},
      {"seed", seed},
      {"lexicon",
       {{"confidence", confidence},
        {"z_override", z_override ? nlohmann::json(*z_override) : nlohmann::json(nullptr)}}},
      {"generator", generator.to_json()},
      {"discriminator", discriminator.to_json()},
      {"detector", detector.to_json()},
      {"augment",
       {{"tau_accept", discriminator_options.tau_accept},
        {"tau_uncertainty", discriminator_options.tau_uncertainty},
        {"strategy", strategy.name()},
        {"k", strategy.k},
        {"temperature", strategy.temperature}}},
      {"forest", forest.to_json()},
      {"calibration", {{"percentile", percentile}}},
      {"ablation", {{"levels", ablation_levels}}},
      {"output_dir", output_dir.string()}};
}

void PipelineConfig::validate() const {
  if (format != CorpusFormat::kSmoke) {
    if (dataset_paths.empty()) throw Error(ErrorCode::kInvalidConfig, "dataset.paths is empty");
    for (const auto& p : dataset_paths) {
      if (!fs::exists(p)) throw Error(ErrorCode::kUnreadablePath, "dataset " + p.string() + " not found");
    }
  } else if (smoke_normal == 0 || smoke_abnormal == 0) {
    throw Error(ErrorCode::kInvalidConfig, "smoke corpus needs both classes");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "train_fraction must lie in (0, 1)");
  }
  if (!z_override && !(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "confidence must lie in (0, 1)");
  }
  generator.validate();
  discriminator.validate();
  detector.validate();
  discriminator_options.validate();
  forest.validate();
  if (!(percentile > 0.0 && percentile <= 100.0)) {
    throw Error(ErrorCode::kOutOfRange, "percentile must lie in (0, 100]");
  }
  for (double level : ablation_levels) {
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::kOutOfRange, "ablation level outside (0, 1)");
  }
  if (output_dir.empty()) throw Error(ErrorCode::kInvalidConfig, "output_dir is empty");
}

PipelineConfig load_pipeline_config(const fs::path& path, Profile profile) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadablePath, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
  if (j.contains("profile")) profile = parse_profile(j.at("profile").get<std::string>());
  PipelineConfig c = PipelineConfig::from_json(j, PipelineConfig::for_profile(profile));
  // Relative dataset paths are taken from the config file's directory.
  const fs::path base = path.parent_path();
  for (auto& p : c.dataset_paths) {
    if (p.is_relative()) p = base / p;
  }
  return c;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadablePath, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kCorruptArtifact, "sha256 unavailable");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

nlohmann::json RunManifest::to_json() const {
  return nlohmann::json{{"command", command}, {"config", config}, {"seeds", seeds},
                        {"checksums", checksums}, {"timings_seconds", timings},
                        {"counts", counts}};
}

void RunManifest::add_checksums(const fs::path& root, const fs::path& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) checksums[fs::relative(f, root).generic_string()] = sha256_file(f);
  } else {
    checksums[fs::relative(path, root).generic_string()] = sha256_file(path);
  }
}

void RunManifest::write(const fs::path& path) const { write_json_file(to_json(), path); }

RunManifest cmd_ingest(const PipelineConfig& config) {
  config.validate();
  RunManifest m = start_manifest(config, "ingest");
  fs::create_directories(config.output_dir);
  RequestCorpus corpus;
  LoadStats total;
  {
    StageTimer t(m, "load");
    if (config.format == CorpusFormat::kSmoke) {
      corpus = make_smoke_corpus(config.smoke_normal, config.smoke_abnormal, config.split_seed());
      total.parsed = corpus.size();
    } else {
      std::set<std::string> ids;
      for (const auto& p : config.dataset_paths) {
        LoadStats stats;
        const RequestCorpus part = load_corpus(p, config.format, &stats);
        total.parsed += stats.parsed;
        total.malformed += stats.malformed;
        for (const auto& r : part.records()) {
          RawRequestRecord copy = r;
          // Files loaded together may reuse ids.
          if (!ids.insert(copy.id).second) {
            copy.id += "-" + std::to_string(ids.size());
            ids.insert(copy.id);
          }
          corpus.add(std::move(copy));
        }
      }
    }
  }
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "dataset produced no records");
  CorpusSplit split;
  {
    StageTimer t(m, "split");
    split = split_corpus(corpus, config.train_fraction, config.split_seed());
  }
  write_canonical(corpus, config.output_dir / artifact::kCorpus);
  write_canonical(split.train, config.output_dir / artifact::kTrain);
  write_canonical(split.test, config.output_dir / artifact::kTest);
  for (const char* name : {artifact::kCorpus, artifact::kTrain, artifact::kTest}) {
    m.add_checksums(config.output_dir, config.output_dir / name);
  }
  m.counts = {{"records", corpus.size()},
              {"normal", corpus.count(Label::kNormal)},
              {"abnormal", corpus.count(Label::kAbnormal)},
              {"malformed", total.malformed},
              {"train", split.train.size()},
              {"test", split.test.size()}};
  finish_manifest(config, m);
  return m;
}

RunManifest cmd_augment(const PipelineConfig& config) {
  config.validate();
  RunManifest m = start_manifest(config, "augment");
  const RequestCorpus train = read_canonical(require(config, artifact::kTrain, "ingest"));
  ReservedTokenSet reserved;
  {
    StageTimer t(m, "lexicon");
    reserved = reserved_for(train, config.confidence, config.z_override);
  }
  write_reserved_tokens(reserved, config.output_dir / artifact::kReserved);

  std::optional<LanguageModel> generator;
  TrainingLog lm_log;
  {
    StageTimer t(m, "generator");
    auto tokenizer = std::make_shared<const BbpeTokenizer>(train_bbpe(
        train, static_cast<std::size_t>(config.generator.vocab_size), config.generator_seed()));
    generator.emplace(
        train_mlm(tokenizer, train, seeded(config.generator, config.generator_seed()), &lm_log));
  }
  generator->save(config.output_dir / artifact::kGenerator);

  AugmentOutcome outcome = augment_with(config, train, *generator, reserved, m);
  write_datastore(outcome.store, config.output_dir / artifact::kDatastore);

  for (const char* name : {artifact::kReserved, artifact::kGenerator, artifact::kDatastore}) {
    m.add_checksums(config.output_dir, config.output_dir / name);
  }
  m.counts = stats_json(outcome.stats);
  m.counts["reserved_tokens"] = reserved.tokens.size();
  m.counts["threshold"] = reserved.threshold;
  m.counts["z"] = reserved.z;
  m.counts["train"] = train.size();
  m.counts["synthetics"] = outcome.store.synthetics.size();
  m.counts["generator_vocab"] = generator->tokenizer().vocab_size();
  m.counts["generator_final_loss"] = lm_log.epoch_loss.empty() ? 0.0 : lm_log.epoch_loss.back();
  finish_manifest(config, m);
  return m;
}

RunManifest cmd_train_detector(const PipelineConfig& config) {
  config.validate();
  RunManifest m = start_manifest(config, "train-detector");
  const AugmentedDatastore store = read_datastore(require(config, artifact::kDatastore, "augment"));
  DetectorLog log;
  {
    StageTimer t(m, "detector");
    detector_for(config, store, &log).save(config.output_dir / artifact::kDetector);
  }
  AugmentedDatastore baseline;
  baseline.originals = store.originals;
  DetectorLog baseline_log;
  {
    StageTimer t(m, "baseline_detector");
    detector_for(config, baseline, &baseline_log).save(config.output_dir / artifact::kBaselineDetector);
  }
  for (const char* name : {artifact::kDetector, artifact::kBaselineDetector}) {
    m.add_checksums(config.output_dir, config.output_dir / name);
  }
  const DetectorModel detector = DetectorModel::load(config.output_dir / artifact::kDetector);
  m.counts = {{"tokenizer_records", log.tokenizer_records},
              {"mlm_records", log.mlm_record_ids.size()},
              {"mlm_record_ids", log.mlm_record_ids},
              {"forest_records", log.forest_records},
              {"calibration_records", log.calibration_records},
              {"theta", detector.theta()},
              {"baseline_mlm_records", baseline_log.mlm_record_ids.size()}};
  finish_manifest(config, m);
  return m;
}

RunManifest cmd_detect(const PipelineConfig& config, const std::optional<fs::path>& input) {
  config.validate();
  RunManifest m = start_manifest(config, "detect");
  const DetectorModel detector =
      DetectorModel::load(require(config, artifact::kDetector, "train-detector"));
  const fs::path source = input ? *input : require(config, artifact::kTest, "ingest");
  const RequestCorpus corpus = read_canonical(source);
  std::vector<Verdict> verdicts;
  {
    StageTimer t(m, "classify");
    verdicts = classify_all(detector, corpus);
  }
  write_verdicts(verdicts, config.output_dir / artifact::kVerdicts);
  m.add_checksums(config.output_dir, config.output_dir / artifact::kVerdicts);
  const auto flagged = std::count_if(verdicts.begin(), verdicts.end(),
                                     [](const Verdict& v) { return v.flagged == Label::kAbnormal; });
  m.counts = {{"records", verdicts.size()}, {"flagged", flagged}, {"theta", detector.theta()},
              {"input", source.string()}};
  finish_manifest(config, m);
  return m;
}

RunManifest cmd_evaluate(const PipelineConfig& config) {
  config.validate();
  RunManifest m = start_manifest(config, "evaluate");
  const RequestCorpus test = read_canonical(require(config, artifact::kTest, "ingest"));
  const AugmentedDatastore store = read_datastore(require(config, artifact::kDatastore, "augment"));
  const DetectorModel augmented =
      DetectorModel::load(require(config, artifact::kDetector, "train-detector"));
  const DetectorModel baseline =
      DetectorModel::load(require(config, artifact::kBaselineDetector, "train-detector"));
  const LanguageModel generator =
      LanguageModel::load(require(config, artifact::kGenerator, "augment"));

  ClassificationReport base_report;
  ClassificationReport aug_report;
  {
    StageTimer t(m, "classify");
    const auto labels = labels_of(test);
    base_report = classification_report(confusion(classify_all(baseline, test), labels));
    aug_report = classification_report(confusion(classify_all(augmented, test), labels));
  }
  SimilarityReport similarity;
  {
    StageTimer t(m, "similarity");
    std::map<std::string, const RawRequestRecord*> by_id;
    for (const auto& r : store.originals.records()) by_id.emplace(r.id, &r);
    std::vector<std::pair<RawRequestRecord, RawRequestRecord>> pairs;
    for (const auto& s : store.synthetics) {
      const auto it = by_id.find(s.source_id);
      if (it == by_id.end()) {
        throw Error(ErrorCode::kCorruptArtifact, "synthetic " + s.filled_request.id +
                                                     " has no source record");
      }
      pairs.emplace_back(s.filled_request, *it->second);
    }
    similarity = similarity_report(generator, pairs, IdfTable(store.originals));
  }

  // Similarity is undefined without synthetics.
  std::vector<ReportRow> rows;
  if (similarity.pairs > 0) rows = report_rows(similarity, "synthetic-vs-source");
  for (auto& r : report_rows(base_report, "baseline")) rows.push_back(r);
  for (auto& r : report_rows(aug_report, "augmented")) rows.push_back(r);
  rows.push_back({"f1_delta", "augmented-minus-baseline", aug_report.f1 - base_report.f1});
  write_report_tsv(rows, config.output_dir / artifact::kReportTsv);
  write_json_file(nlohmann::json{{"similarity", to_json(similarity)},
                                 {"baseline", to_json(base_report)},
                                 {"augmented", to_json(aug_report)},
                                 {"f1_delta", aug_report.f1 - base_report.f1}},
                  config.output_dir / artifact::kReportJson);
  for (const char* name : {artifact::kReportTsv, artifact::kReportJson}) {
    m.add_checksums(config.output_dir, config.output_dir / name);
  }
  m.counts = {{"test", test.size()}, {"pairs", similarity.pairs}};
  finish_manifest(config, m);
  return m;
}

RunManifest cmd_ablate(const PipelineConfig& config, const std::vector<double>& levels,
                       std::vector<AblationRow>* rows_out) {
  config.validate();
  for (double level : levels) {
    if (!(level > 0.0 && level < 1.0)) {
      throw Error(ErrorCode::kOutOfRange, "confidence level outside (0, 1)");
    }
  }
  RunManifest m = start_manifest(config, "ablate");
  const RequestCorpus train = read_canonical(require(config, artifact::kTrain, "ingest"));
  const RequestCorpus test = read_canonical(require(config, artifact::kTest, "ingest"));

  const fs::path generator_dir = config.output_dir / artifact::kGenerator;
  std::optional<LanguageModel> generator;
  {
    StageTimer t(m, "generator");
    if (fs::exists(generator_dir)) {
      generator.emplace(LanguageModel::load(generator_dir));
    } else {
      auto tokenizer = std::make_shared<const BbpeTokenizer>(train_bbpe(
          train, static_cast<std::size_t>(config.generator.vocab_size), config.generator_seed()));
      generator.emplace(train_mlm(tokenizer, train, seeded(config.generator, config.generator_seed())));
    }
  }
  double f1_baseline = 0.0;
  {
    StageTimer t(m, "baseline");
    const fs::path baseline_dir = config.output_dir / artifact::kBaselineDetector;
    if (fs::exists(baseline_dir)) {
      f1_baseline = f1_on(DetectorModel::load(baseline_dir), test);
    } else {
      AugmentedDatastore plain;
      plain.originals = train;
      f1_baseline = f1_on(detector_for(config, plain, nullptr), test);
    }
  }

  std::vector<AblationRow> rows;
  for (double level : levels) {
    AblationRow row;
    row.confidence = level;
    const ReservedTokenSet reserved = reserved_for(train, level, std::nullopt);
    row.z = reserved.z;
    row.reserved = reserved.tokens.size();
    const AugmentOutcome outcome = augment_with(config, train, *generator, reserved, m);
    row.synthetics = outcome.store.synthetics.size();
    row.f1_baseline = f1_baseline;
    {
      StageTimer t(m, "detector");
      row.f1_augmented = f1_on(detector_for(config, outcome.store, nullptr), test);
    }
    rows.push_back(row);
  }

  {
    std::ofstream tsv(config.output_dir / artifact::kAblationTsv, std::ios::binary);
    if (!tsv) throw Error(ErrorCode::kUnreadablePath, "cannot write ablation table");
    tsv << "confidence\tz\treserved\tsynthetics\tf1_baseline\tf1_augmented\tdelta_f1\n";
    for (const auto& r : rows) {
      tsv << internal::format_double(r.confidence) << '\t' << internal::format_double(r.z) << '\t'
          << r.reserved << '\t' << r.synthetics << '\t' << internal::format_double(r.f1_baseline)
          << '\t' << internal::format_double(r.f1_augmented) << '\t'
          << internal::format_double(r.delta()) << '\n';
    }
  }
  nlohmann::json table = nlohmann::json::array();
  for (const auto& r : rows) {
    table.push_back({{"confidence", r.confidence}, {"z", r.z}, {"reserved", r.reserved},
                     {"synthetics", r.synthetics}, {"f1_baseline", r.f1_baseline},
                     {"f1_augmented", r.f1_augmented}, {"delta_f1", r.delta()}});
  }
  write_json_file(table, config.output_dir / artifact::kAblationJson);
  for (const char* name : {artifact::kAblationTsv, artifact::kAblationJson}) {
    m.add_checksums(config.output_dir, config.output_dir / name);
  }
  m.counts = {{"levels", rows.size()}};
  finish_manifest(config, m);
  if (rows_out != nullptr) *rows_out = std::move(rows);
  return m;
}

RunManifest run_all(const PipelineConfig& config) {
  RunManifest all = start_manifest(config, "all");
  for (const RunManifest& m :
       {cmd_ingest(config), cmd_augment(config), cmd_train_detector(config), cmd_detect(config),
        cmd_evaluate(config)}) {
    for (const auto& [k, v] : m.checksums) all.checksums[k] = v;
    for (const auto& [k, v] : m.timings) all.timings[m.command + "." + k] = v;
    all.counts[m.command] = m.counts;
  }
  finish_manifest(config, all);
  return all;
}

}  // namespace reqaug
