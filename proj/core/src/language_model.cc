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

#include "reqaug/language_model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "reqaug/error.h"
#include "reqaug/optimizer.h"
#include "reqaug/weights_io.h"

namespace reqaug {
namespace {

constexpr const char* kLmFormat = "reqaug-lm-1";

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

EncoderShape shape_for(const BbpeTokenizer& tokenizer, const LmConfig& config) {
  EncoderShape s;
  s.vocab_size = static_cast<int>(tokenizer.vocab_size());
  s.hidden = config.hidden;
  s.heads = config.heads;
  s.layers = config.layers;
  s.max_positions = config.max_seq_len;
  s.ffn = 4 * config.hidden;
  return s;
}

// Inputs and targets for one training sequence after whole-word masking.
struct MaskedSequence {
  std::vector<int> inputs;
  std::vector<int> targets;
  std::size_t scored = 0;
};

MaskedSequence whole_word_mask(const EncodedRequest& encoded, double mask_rate,
                               int vocab_size, std::mt19937_64& rng) {
  MaskedSequence out;
  out.inputs = encoded.ids;
  out.targets.assign(encoded.ids.size(), -1);
  const std::size_t n = encoded.spans.size();
  const auto k = static_cast<std::size_t>(
      std::floor(mask_rate * static_cast<double>(n) + 0.5));
  if (k == 0) return out;
  std::vector<std::size_t> words(n);
  std::iota(words.begin(), words.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(words[i], words[pick(rng)]);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> random_token(kFirstByteId, vocab_size - 1);
  for (std::size_t i = 0; i < k; ++i) {
    const auto [begin, end] = encoded.spans[words[i]];
    const double r = unit(rng);
    for (int p = begin; p < end; ++p) {
      out.targets[p] = encoded.ids[p];
      ++out.scored;
      if (r < 0.8) {
        out.inputs[p] = kMaskId;
      } else if (r < 0.9) {
        out.inputs[p] = random_token(rng);
      }
    }
  }
  return out;
}

}  // namespace

LmConfig LmConfig::desk() { return LmConfig{}; }

LmConfig LmConfig::paper() {
  LmConfig c;
  c.layers = 6;
  c.heads = 12;
  c.hidden = 768;
  c.vocab_size = 52000;
  c.block_size = 128;
  c.max_seq_len = 512;
  c.epochs = 20;
  c.batch_size = 32;
  c.warmup_fraction = 0.05;
  return c;
}

void LmConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidConfig, what);
  };
  if (layers < 1) fail("layers must be >= 1");
  if (heads < 1 || hidden < 1 || hidden % heads != 0) {
    fail("hidden must be a positive multiple of heads");
  }
  if (vocab_size < kFirstMergeId) fail("vocab_size below the byte alphabet plus specials");
  if (max_seq_len < 3) fail("max_seq_len must be >= 3");
  if (block_size < 3 || block_size > max_seq_len) fail("block_size must lie in [3, max_seq_len]");
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) fail("warmup_fraction must lie in [0, 1)");
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) fail("mask_rate must lie in (0, 1)");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
}

nlohmann::json LmConfig::to_json() const {
  return nlohmann::json{{"layers", layers},
                        {"heads", heads},
                        {"hidden", hidden},
                        {"vocab_size", vocab_size},
                        {"block_size", block_size},
                        {"max_seq_len", max_seq_len},
                        {"epochs", epochs},
                        {"batch_size", batch_size},
                        {"warmup_fraction", warmup_fraction},
                        {"learning_rate", learning_rate},
                        {"weight_decay", weight_decay},
                        {"mask_rate", mask_rate},
                        {"seed", seed}};
}

LmConfig LmConfig::from_json(const nlohmann::json& j) {
  LmConfig c;
  c.layers = j.value("layers", c.layers);
  c.heads = j.value("heads", c.heads);
  c.hidden = j.value("hidden", c.hidden);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.block_size = j.value("block_size", c.block_size);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.mask_rate = j.value("mask_rate", c.mask_rate);
  c.seed = j.value("seed", c.seed);
  return c;
}

MaskedRequest masked_from_text(std::string_view text) {
  const std::string lower = ascii_lower(text);
  const std::string needle = ascii_lower(kMaskText);
  MaskedRequest out;
  out.tokens.separators = {""};
  auto append = [&](const TokenizedRequest& part) {
    out.tokens.separators.back() += part.separators.front();
    for (std::size_t i = 0; i < part.tokens.size(); ++i) {
      out.tokens.tokens.push_back(part.tokens[i]);
      out.tokens.separators.push_back(part.separators[i + 1]);
    }
  };
  bool found = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t hit = lower.find(needle, pos);
    const std::size_t end = hit == std::string::npos ? text.size() : hit;
    append(tokenize_entities(text.substr(pos, end - pos)));
    if (hit == std::string::npos) break;
    if (!found) out.masked_index = out.tokens.tokens.size();
    found = true;
    TokenizedRequest mask;
    mask.tokens.push_back(EntityToken{kMaskText, 0, TokenKind::kWord});
    mask.separators = {"", ""};
    append(mask);
    pos = hit + needle.size();
  }
  for (std::size_t i = 0; i < out.tokens.tokens.size(); ++i) {
    out.tokens.tokens[i].position = i;
  }
  return out;
}

LanguageModel::LanguageModel(std::shared_ptr<const BbpeTokenizer> tokenizer,
                             const LmConfig& config)
    : tokenizer_(std::move(tokenizer)), config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  const EncoderShape shape = shape_for(*tokenizer_, config_);
  encoder_ = TransformerEncoder(shape, rng);
  mlm_head_ = LinearHead::zeros(shape.hidden, shape.vocab_size);
  init_normal(mlm_head_.tensors("mlm_head."), rng);
}

std::vector<NamedTensor> LanguageModel::tensors() {
  std::vector<NamedTensor> out = encoder_.params().tensors();
  for (auto& t : mlm_head_.tensors("mlm_head.")) out.push_back(t);
  return out;
}

std::vector<ConstNamedTensor> LanguageModel::tensors() const {
  std::vector<ConstNamedTensor> out = encoder_.params().tensors();
  for (auto& t : mlm_head_.tensors("mlm_head.")) out.push_back(t);
  return out;
}

EncodedRequest LanguageModel::encode(const TokenizedRequest& tokens,
                                     std::optional<std::size_t> mask_index,
                                     std::optional<int> truncate_to) const {
  EncodedRequest out;
  out.ids.push_back(kClsId);
  const int limit = truncate_to.value_or(config_.max_seq_len);
  for (std::size_t i = 0; i < tokens.tokens.size(); ++i) {
    std::vector<int> pieces;
    if (mask_index && *mask_index == i) {
      pieces = {kMaskId};
    } else {
      pieces = tokenizer_->encode_chunk(tokens.tokens[i].text);
    }
    const auto needed = out.ids.size() + pieces.size() + 1;
    if (needed > static_cast<std::size_t>(limit)) {
      if (truncate_to) break;
      throw Error(ErrorCode::kSequenceTooLong,
                  "request needs more than " + std::to_string(limit) + " positions");
    }
    const int begin = static_cast<int>(out.ids.size());
    out.ids.insert(out.ids.end(), pieces.begin(), pieces.end());
    out.spans.emplace_back(begin, static_cast<int>(out.ids.size()));
  }
  out.ids.push_back(kSepId);
  return out;
}

Matrix LanguageModel::hidden_states(const EncodedRequest& encoded) const {
  return encoder_.forward(encoded.ids, nullptr);
}

RowVector LanguageModel::vocab_distribution(const Matrix& hidden, int position) const {
  RowVector logits = hidden.row(position) * mlm_head_.weight;
  logits += mlm_head_.bias.row(0);
  return softmax(logits);
}

bool LanguageModel::all_finite() const {
  for (const auto& t : tensors()) {
    if (!t.value->allFinite()) return false;
  }
  return true;
}

void LanguageModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  tokenizer_->save(dir / "tokenizer");
  nlohmann::json manifest;
  manifest["format"] = kLmFormat;
  manifest["config"] = config_.to_json();
  manifest["vocab_size"] = tokenizer_->vocab_size();
  manifest["weights"] = "weights.bin";
  nlohmann::json names = nlohmann::json::array();
  for (const auto& t : tensors()) names.push_back(t.name);
  manifest["tensors"] = names;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error(ErrorCode::kUnreadablePath, "cannot write " + dir.string());
  out << manifest.dump(2) << '\n';
  write_weights(dir / "weights.bin", tensors());
}

LanguageModel LanguageModel::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json", std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadablePath, "cannot open " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, std::string("bad LM manifest: ") + e.what());
  }
  if (manifest.value("format", std::string()) != kLmFormat) {
    throw Error(ErrorCode::kCorruptArtifact, "unknown LM artifact format");
  }
  auto tokenizer = std::make_shared<const BbpeTokenizer>(BbpeTokenizer::load(dir / "tokenizer"));
  LanguageModel model(tokenizer, LmConfig::from_json(manifest.at("config")));
  assign_weights(read_weights(dir / manifest.value("weights", std::string("weights.bin"))),
                 model.tensors());
  return model;
}

double mlm_loss_and_gradients(const LanguageModel& model,
                              const std::vector<int>& input_ids,
                              const std::vector<int>& targets, double scale,
                              EncoderParams* encoder_grads, LinearHead* head_grads) {
  const bool want_grads = encoder_grads != nullptr && head_grads != nullptr;
  TransformerEncoder::Cache cache;
  const Matrix hidden = model.encoder().forward(input_ids, want_grads ? &cache : nullptr);
  std::vector<int> positions;
  for (std::size_t p = 0; p < targets.size(); ++p) {
    if (targets[p] >= 0) positions.push_back(static_cast<int>(p));
  }
  if (positions.empty()) return 0.0;

  const auto n = static_cast<Eigen::Index>(positions.size());
  Matrix h(n, hidden.cols());
  for (Eigen::Index i = 0; i < n; ++i) h.row(i) = hidden.row(positions[i]);
  const LinearHead& head = model.mlm_head();
  Matrix logits = h * head.weight;
  logits.rowwise() += head.bias.row(0);

  double loss = 0.0;
  Matrix dlogits(n, logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const RowVector p = softmax(logits.row(i));
    const int target = targets[positions[i]];
    loss -= std::log(std::max(p(target), 1e-300));
    dlogits.row(i) = p * scale;
    dlogits(i, target) -= scale;
  }
  if (!want_grads) return loss;

  head_grads->weight.noalias() += h.transpose() * dlogits;
  head_grads->bias += dlogits.colwise().sum();
  const Matrix dh = dlogits * head.weight.transpose();
  Matrix d_hidden = Matrix::Zero(hidden.rows(), hidden.cols());
  for (Eigen::Index i = 0; i < n; ++i) d_hidden.row(positions[i]) = dh.row(i);
  model.encoder().backward(cache, d_hidden, *encoder_grads);
  return loss;
}

LanguageModel train_mlm(std::shared_ptr<const BbpeTokenizer> tokenizer,
                        const RequestCorpus& corpus, const LmConfig& config,
                        TrainingLog* log) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "MLM training corpus is empty");
  LanguageModel model(std::move(tokenizer), config);
  const int vocab = static_cast<int>(model.tokenizer().vocab_size());

  std::vector<EncodedRequest> sequences;
  sequences.reserve(corpus.size());
  for (const auto& record : corpus.records()) {
    sequences.push_back(model.encode(tokenize_entities(record.raw), std::nullopt,
                                     config.block_size));
  }

  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (sequences.size() + batch - 1) / batch;
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(config.epochs);
  const LinearWarmupSchedule schedule(config.learning_rate, total_steps, config.warmup_fraction);
  AdamW optimizer(model.tensors(), config.weight_decay);

  EncoderParams encoder_grads = EncoderParams::zeros(model.encoder().shape());
  LinearHead head_grads = LinearHead::zeros(config.hidden, vocab);
  std::vector<NamedTensor> grads = encoder_grads.tensors();
  for (auto& t : head_grads.tensors("mlm_head.")) grads.push_back(t);

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  TrainingLog local;
  std::vector<std::size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t epoch_scored = 0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++step) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<MaskedSequence> masked;
      std::size_t scored = 0;
      for (std::size_t i = start; i < end; ++i) {
        MaskedSequence m = whole_word_mask(sequences[order[i]], config.mask_rate, vocab, rng);
        if (m.scored == 0) {
          if (epoch == 0) ++local.skipped_sequences;
          continue;
        }
        scored += m.scored;
        masked.push_back(std::move(m));
      }
      if (scored == 0) continue;
      set_zero(grads);
      const double scale = 1.0 / static_cast<double>(scored);
      double loss = 0.0;
      for (const auto& m : masked) {
        loss += mlm_loss_and_gradients(model, m.inputs, m.targets, scale,
                                       &encoder_grads, &head_grads);
      }
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "loss " << loss << " at epoch " << epoch << ", step " << step
            << " (lr " << schedule.rate(step) << ")";
        throw Error(ErrorCode::kNonFiniteLoss, msg.str());
      }
      optimizer.step(grads, schedule.rate(step));
      epoch_loss += loss;
      epoch_scored += scored;
    }
    local.epoch_loss.push_back(epoch_scored > 0 ? epoch_loss / static_cast<double>(epoch_scored)
                                                : 0.0);
  }
  local.steps = step;
  round_to_float(model.tensors());
  if (!model.all_finite()) {
    throw Error(ErrorCode::kNonFiniteLoss, "non-finite parameters after training");
  }
  if (log != nullptr) *log = std::move(local);
  return model;
}

Matrix word_embeddings(const LanguageModel& model, const TokenizedRequest& tokens) {
  const EncodedRequest encoded = model.encode(tokens);
  const Matrix hidden = model.hidden_states(encoded);
  Matrix out(static_cast<Eigen::Index>(encoded.spans.size()), hidden.cols());
  for (std::size_t i = 0; i < encoded.spans.size(); ++i) {
    const auto [begin, end] = encoded.spans[i];
    out.row(static_cast<Eigen::Index>(i)) =
        hidden.middleRows(begin, end - begin).colwise().mean();
  }
  return out;
}

Matrix word_embeddings(const LanguageModel& model, const RawRequestRecord& request) {
  return word_embeddings(model, tokenize_entities(request.raw));
}

RowVector sentence_embedding(const LanguageModel& model, const TokenizedRequest& tokens) {
  if (tokens.tokens.empty()) throw Error(ErrorCode::kEmptyRequest, "request has no entities");
  const EncodedRequest encoded = model.encode(tokens);
  const Matrix hidden = model.hidden_states(encoded);
  const auto inner = static_cast<Eigen::Index>(encoded.ids.size()) - 2;
  return hidden.middleRows(1, inner).colwise().mean();
}

RowVector sentence_embedding(const LanguageModel& model, const RawRequestRecord& request) {
  return sentence_embedding(model, tokenize_entities(request.raw));
}

std::vector<FillCandidate> fill_mask(const LanguageModel& model,
                                     const MaskedRequest& masked, std::size_t k,
                                     const ReservedTokenSet* reserved) {
  std::size_t masks = 0;
  for (const auto& t : masked.tokens.tokens) {
    if (t.text == kMaskText) ++masks;
  }
  if (masks == 0) throw Error(ErrorCode::kNoMaskToken, "request has no <MASK>");
  if (masks > 1) throw Error(ErrorCode::kMultipleMaskTokens, "request has several <MASK>");
  if (masked.masked_index >= masked.tokens.size() ||
      masked.tokens.tokens[masked.masked_index].text != kMaskText) {
    throw Error(ErrorCode::kNoMaskToken, "masked_index does not point at <MASK>");
  }

  const EncodedRequest encoded = model.encode(masked.tokens, masked.masked_index);
  const Matrix hidden = model.hidden_states(encoded);
  const int position = encoded.spans[masked.masked_index].first;
  const RowVector probs = model.vocab_distribution(hidden, position);

  std::vector<FillCandidate> all;
  const BbpeTokenizer& tok = model.tokenizer();
  for (int id = kFirstByteId; id < static_cast<int>(tok.vocab_size()); ++id) {
    const std::string& text = tok.symbol(id);
    if (reserved != nullptr && reserved->contains(text)) continue;
    all.push_back({text, probs(id), id});
  }
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    [](const FillCandidate& a, const FillCandidate& b) {
                      if (a.probability != b.probability) return a.probability > b.probability;
                      return a.id < b.id;
                    });
  all.resize(keep);
  return all;
}

std::vector<double> token_nll(const LanguageModel& model, const TokenizedRequest& tokens) {
  const EncodedRequest encoded = model.encode(tokens);
  std::vector<double> out;
  out.reserve(encoded.spans.size());
  for (const auto& [begin, end] : encoded.spans) {
    std::vector<int> ids = encoded.ids;
    for (int p = begin; p < end; ++p) ids[p] = kMaskId;
    const Matrix hidden = model.encoder().forward(ids, nullptr);
    double nll = 0.0;
    for (int p = begin; p < end; ++p) {
      const RowVector probs = model.vocab_distribution(hidden, p);
      nll -= std::log(std::max(probs(encoded.ids[p]), 1e-300));
    }
    out.push_back(nll / static_cast<double>(end - begin));
  }
  return out;
}

std::vector<double> token_nll(const LanguageModel& model, const RawRequestRecord& request) {
  return token_nll(model, tokenize_entities(request.raw));
}

}  // namespace reqaug
