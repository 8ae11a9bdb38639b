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

#ifndef REQAUG_AUGMENT_H_
#define REQAUG_AUGMENT_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "reqaug/ingest.h"
#include "reqaug/language_model.h"
#include "reqaug/lexicon.h"

namespace reqaug {

// Class order of the discriminator head.
enum class SampleClass { kReal = 0, kSynthetic = 1 };

double cosine_similarity(std::span<const double> u, std::span<const double> v);
double cosine_similarity(const RowVector& u, const RowVector& v);

// Index of the row of `words` least similar to `sentence`, over rows where
// `maskable` is set. Ties go to the lowest index.
std::size_t least_similar_row(const Matrix& words, const RowVector& sentence,
                              const std::vector<bool>& maskable);

// Position of the non-reserved entity whose word embedding has the lowest
// cosine similarity to the sentence embedding.
std::size_t find_outlier_token(const LanguageModel& model,
                               const RawRequestRecord& request,
                               const ReservedTokenSet& reserved);

MaskedRequest mask_at(const RawRequestRecord& request, std::size_t index,
                      const ReservedTokenSet& reserved);

// The masked request with `fill` written into the masked slot.
std::string fill_text(const MaskedRequest& masked, std::string_view fill);

struct FillStrategy {
  enum class Kind { kTop1Novel, kSampleTopK };
  Kind kind = Kind::kTop1Novel;
  std::size_t k = 10;
  double temperature = 1.0;

  static FillStrategy parse(std::string_view text);
  std::string name() const;
};

struct CandidateSample {
  RawRequestRecord filled_request;
  std::string filled_token;
  std::string original_token;
  std::size_t masked_index = 0;
  double generator_probability = 0.0;
  std::string source_id;
  // Discriminator confidence, set once validated.
  double confidence = 0.0;
};

// True when `fill` may replace `original` without changing how many entity
// tokens the request splits into: a lowercase alphanumeric run for a word or
// number, one printable punctuation character for punctuation.
bool fill_fits(std::string_view fill, const EntityToken& original);

// Fill for the masked slot. Candidates come from fill_mask with reserved
// symbols removed, then anything equal to the original token or not fitting
// the slot is dropped. `rng` is only drawn from by sample-topk.
CandidateSample generate_candidate(const LanguageModel& model,
                                   const MaskedRequest& masked,
                                   const RawRequestRecord& source,
                                   const FillStrategy& strategy,
                                   std::mt19937_64& rng,
                                   const ReservedTokenSet* reserved = nullptr);

// Normalized entropy -sum p ln p / ln K.
double uncertainty(std::span<const double> probabilities);

struct DiscriminatorOptions {
  double tau_uncertainty = 0.3;
  // 0 turns the filter off: every candidate is accepted.
  double tau_accept = 0.9;

  void validate() const;
};

struct DiscriminatorLog {
  std::vector<double> epoch_loss;
  // Candidates carrying the real pseudo-label after each epoch's relabeling.
  std::vector<std::size_t> relabeled_real;
};

class Discriminator {
 public:
  Discriminator(std::shared_ptr<const BbpeTokenizer> tokenizer,
                const LmConfig& encoder_config, DiscriminatorOptions options);

  const LanguageModel& encoder() const { return encoder_; }
  LanguageModel& encoder() { return encoder_; }
  const LinearHead& head() const { return head_; }
  LinearHead& head() { return head_; }
  const DiscriminatorOptions& options() const { return options_; }
  void set_options(const DiscriminatorOptions& options);

  // [P(real), P(synthetic)].
  std::array<double, 2> probabilities(const TokenizedRequest& tokens) const;
  std::array<double, 2> probabilities(const RawRequestRecord& request) const;

  // Cross-entropy of one request against `target` with gradients scaled by
  // `scale` and added into the gradient buffers. Returns the loss.
  double loss_and_gradients(const std::vector<int>& ids, SampleClass target,
                            double scale, EncoderParams* encoder_grads,
                            LinearHead* head_grads) const;

 private:
  LanguageModel encoder_;
  LinearHead head_;
  DiscriminatorOptions options_;
};

Discriminator train_discriminator(std::shared_ptr<const BbpeTokenizer> tokenizer,
                                  const LmConfig& encoder_config,
                                  const RequestCorpus& originals,
                                  const std::vector<CandidateSample>& candidates,
                                  const DiscriminatorOptions& options,
                                  DiscriminatorLog* log = nullptr);

struct Validation {
  bool accepted = false;
  double confidence = 0.0;
  double p_real = 0.0;
};

Validation validate_probabilities(const std::array<double, 2>& p,
                                  const DiscriminatorOptions& options);
Validation validate_candidate(const Discriminator& disc,
                              const CandidateSample& candidate);

struct AugmentStats {
  std::size_t attempted = 0;
  std::size_t generated = 0;
  std::size_t no_maskable = 0;
  std::size_t no_viable = 0;
  std::size_t too_long = 0;
  std::size_t rejected = 0;
  std::size_t accepted = 0;
};

struct AugmentedDatastore {
  RequestCorpus originals;
  std::vector<CandidateSample> synthetics;
  std::map<std::string, std::string> provenance;  // synthetic id -> source id

  // Originals followed by synthetic records.
  RequestCorpus combined() const;
};

// One candidate attempt per record. Records with no maskable entity, no
// viable fill or too many pieces are counted and skipped.
std::vector<CandidateSample> generate_candidates(const RequestCorpus& train,
                                                 const LanguageModel& model,
                                                 const ReservedTokenSet& reserved,
                                                 const FillStrategy& strategy,
                                                 std::uint64_t seed,
                                                 AugmentStats* stats = nullptr);

// Keeps the candidates the discriminator accepts.
AugmentedDatastore build_datastore(const RequestCorpus& train,
                                   const std::vector<CandidateSample>& candidates,
                                   const Discriminator& disc,
                                   AugmentStats* stats = nullptr);

AugmentedDatastore build_datastore(const RequestCorpus& train,
                                   const LanguageModel& model,
                                   const Discriminator& disc,
                                   const ReservedTokenSet& reserved,
                                   const FillStrategy& strategy, std::uint64_t seed,
                                   AugmentStats* stats = nullptr);

// Line-delimited JSON: original records, then synthetic records with
// source_id, confidence, generator_probability and edit details.
void write_datastore(const AugmentedDatastore& store,
                     const std::filesystem::path& path);
AugmentedDatastore read_datastore(const std::filesystem::path& path);

}  // namespace reqaug

#endif  // REQAUG_AUGMENT_H_
