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

#ifndef REQAUG_LANGUAGE_MODEL_H_
#define REQAUG_LANGUAGE_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "reqaug/bbpe.h"
#include "reqaug/encoder.h"
#include "reqaug/ingest.h"
#include "reqaug/lexicon.h"

namespace reqaug {

struct LmConfig {
  int layers = 2;
  int heads = 4;
  int hidden = 128;
  int vocab_size = 2048;
  int block_size = 128;   // training sequences are truncated to this
  int max_seq_len = 512;  // inference sequences longer than this are errors
  int epochs = 30;
  int batch_size = 32;
  double warmup_fraction = 0.05;
  double learning_rate = 5e-4;
  double weight_decay = 0.01;
  double mask_rate = 0.15;
  std::uint64_t seed = 0;

  static LmConfig desk();
  static LmConfig paper();

  // Throws InvalidConfig when an invariant is broken.
  void validate() const;

  nlohmann::json to_json() const;
  static LmConfig from_json(const nlohmann::json& j);

  bool operator==(const LmConfig&) const = default;
};

inline constexpr const char* kMaskText = "<MASK>";

// A request with exactly one entity replaced by <MASK>.
struct MaskedRequest {
  TokenizedRequest tokens;
  std::size_t masked_index = 0;
  std::string original_token;
  std::string source_id;

  std::string text() const { return tokens.detokenize(); }
};

// Reads "get /pagar.jsp modo=<MASK>" style text; "<mask>" in any case marks
// the masked entity. Every other entity comes from tokenize_entities.
MaskedRequest masked_from_text(std::string_view text);

// Model input for one request: <CLS> pieces... <SEP>, plus where each
// entity's pieces sit.
struct EncodedRequest {
  std::vector<int> ids;
  std::vector<std::pair<int, int>> spans;  // [begin, end) per entity
};

struct FillCandidate {
  std::string text;
  double probability = 0.0;
  int id = 0;
};

struct TrainingLog {
  std::vector<double> epoch_loss;
  std::size_t steps = 0;
  std::size_t skipped_sequences = 0;
};

class LanguageModel {
 public:
  LanguageModel(std::shared_ptr<const BbpeTokenizer> tokenizer,
                const LmConfig& config);

  const LmConfig& config() const { return config_; }
  const BbpeTokenizer& tokenizer() const { return *tokenizer_; }
  std::shared_ptr<const BbpeTokenizer> tokenizer_ptr() const { return tokenizer_; }
  TransformerEncoder& encoder() { return encoder_; }
  const TransformerEncoder& encoder() const { return encoder_; }
  LinearHead& mlm_head() { return mlm_head_; }
  const LinearHead& mlm_head() const { return mlm_head_; }

  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;

  // Encodes entity by entity; `mask_index` turns that entity into one <MASK>.
  // Throws SequenceTooLong past max_seq_len unless `truncate_to` is set, in
  // which case trailing entities that do not fit are dropped.
  EncodedRequest encode(const TokenizedRequest& tokens,
                        std::optional<std::size_t> mask_index = std::nullopt,
                        std::optional<int> truncate_to = std::nullopt) const;

  // Final hidden states for an encoded sequence.
  Matrix hidden_states(const EncodedRequest& encoded) const;

  // Softmax over the vocabulary at one position of the hidden states.
  RowVector vocab_distribution(const Matrix& hidden, int position) const;

  // True when every parameter is finite.
  bool all_finite() const;

  void save(const std::filesystem::path& dir) const;
  static LanguageModel load(const std::filesystem::path& dir);

 private:
  std::shared_ptr<const BbpeTokenizer> tokenizer_;
  LmConfig config_;
  TransformerEncoder encoder_;
  LinearHead mlm_head_;
};

// Whole-word masked LM training from scratch. `log` receives per-epoch mean
// loss over masked pieces.
LanguageModel train_mlm(std::shared_ptr<const BbpeTokenizer> tokenizer,
                        const RequestCorpus& corpus, const LmConfig& config,
                        TrainingLog* log = nullptr);

// Masked-LM loss and its parameter gradients for one sequence with fixed
// inputs and targets (target id -1 means "not scored"). Gradients are scaled
// by `scale` and added to `grads`. Returns the summed negative log-likelihood.
double mlm_loss_and_gradients(const LanguageModel& model,
                              const std::vector<int>& input_ids,
                              const std::vector<int>& targets, double scale,
                              EncoderParams* encoder_grads, LinearHead* head_grads);

// One vector per entity: mean of the final hidden states over its pieces.
Matrix word_embeddings(const LanguageModel& model, const RawRequestRecord& request);
Matrix word_embeddings(const LanguageModel& model, const TokenizedRequest& tokens);

// Mean of the final hidden states over every non-special position.
RowVector sentence_embedding(const LanguageModel& model, const RawRequestRecord& request);
RowVector sentence_embedding(const LanguageModel& model, const TokenizedRequest& tokens);

// Candidates for the masked entity, most probable first. Probabilities come
// from the softmax over the whole vocabulary; special symbols and symbols
// spelling a reserved token are left out of the listing.
std::vector<FillCandidate> fill_mask(const LanguageModel& model,
                                     const MaskedRequest& masked, std::size_t k,
                                     const ReservedTokenSet* reserved = nullptr);

// Per-entity negative log-likelihood with that entity's pieces masked,
// averaged over its pieces.
std::vector<double> token_nll(const LanguageModel& model, const RawRequestRecord& request);
std::vector<double> token_nll(const LanguageModel& model, const TokenizedRequest& tokens);

}  // namespace reqaug

#endif  // REQAUG_LANGUAGE_MODEL_H_
