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

#include "reqaug/augment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "reqaug/error.h"
#include "reqaug/optimizer.h"

namespace reqaug {
namespace {

constexpr std::uint64_t kHeadSeedSalt = 0xd1b54a32d192ed03ULL;
constexpr std::uint64_t kShuffleSeedSalt = 0x8cb92ba72f3d8dd7ULL;

bool is_lower_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x21 && u <= 0x7e && !is_lower_alnum(c) && !(c >= 'A' && c <= 'Z');
}

std::mt19937_64 record_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "cosine of vectors with sizes " +
                                                   std::to_string(u.size()) + " and " +
                                                   std::to_string(v.size()));
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

double cosine_similarity(const RowVector& u, const RowVector& v) {
  return cosine_similarity(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                           std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

std::size_t least_similar_row(const Matrix& words, const RowVector& sentence,
                              const std::vector<bool>& maskable) {
  if (maskable.size() != static_cast<std::size_t>(words.rows())) {
    throw Error(ErrorCode::kLengthMismatch, "maskable flags do not match embedding rows");
  }
  std::optional<std::size_t> best;
  double best_sim = 0.0;
  for (std::size_t i = 0; i < maskable.size(); ++i) {
    if (!maskable[i]) continue;
    const RowVector row = words.row(static_cast<Eigen::Index>(i));
    const double sim = cosine_similarity(row, sentence);
    if (!best || sim < best_sim) {
      best = i;
      best_sim = sim;
    }
  }
  if (!best) throw Error(ErrorCode::kNoMaskableToken, "every entity is reserved");
  return *best;
}

std::size_t find_outlier_token(const LanguageModel& model,
                               const RawRequestRecord& request,
                               const ReservedTokenSet& reserved) {
  const TokenizedRequest tokens = tokenize_entities(request.raw);
  if (tokens.size() == 0) throw Error(ErrorCode::kEmptyRequest, "request " + request.id);
  std::vector<bool> maskable(tokens.size());
  bool any = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    maskable[i] = !reserved.contains(tokens.tokens[i].text);
    any = any || maskable[i];
  }
  if (!any) throw Error(ErrorCode::kNoMaskableToken, "every entity of " + request.id + " is reserved");
  return least_similar_row(word_embeddings(model, tokens), sentence_embedding(model, tokens),
                           maskable);
}

MaskedRequest mask_at(const RawRequestRecord& request, std::size_t index,
                      const ReservedTokenSet& reserved) {
  MaskedRequest out;
  out.tokens = tokenize_entities(request.raw);
  if (index >= out.tokens.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "index " + std::to_string(index) + " of " +
                                                 std::to_string(out.tokens.size()));
  }
  EntityToken& token = out.tokens.tokens[index];
  if (reserved.contains(token.text)) {
    throw Error(ErrorCode::kReservedPosition, "'" + token.text + "' is reserved");
  }
  out.original_token = token.text;
  token.text = kMaskText;
  out.masked_index = index;
  out.source_id = request.id;
  return out;
}

std::string fill_text(const MaskedRequest& masked, std::string_view fill) {
  TokenizedRequest tokens = masked.tokens;
  tokens.tokens.at(masked.masked_index).text = std::string(fill);
  return tokens.detokenize();
}

FillStrategy FillStrategy::parse(std::string_view text) {
  FillStrategy s;
  if (text == "top1-novel") return s;
  if (text == "sample-topk") {
    s.kind = Kind::kSampleTopK;
    return s;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown fill strategy '" + std::string(text) + "'");
}

std::string FillStrategy::name() const {
  return kind == Kind::kTop1Novel ? "top1-novel" : "sample-topk";
}

bool fill_fits(std::string_view fill, const EntityToken& original) {
  if (fill.empty() || fill == original.text) return false;
  if (original.kind == TokenKind::kPunctuation) {
    return fill.size() == 1 && is_ascii_punct(fill[0]);
  }
  return std::all_of(fill.begin(), fill.end(), is_lower_alnum);
}

CandidateSample generate_candidate(const LanguageModel& model,
                                   const MaskedRequest& masked,
                                   const RawRequestRecord& source,
                                   const FillStrategy& strategy,
                                   std::mt19937_64& rng,
                                   const ReservedTokenSet* reserved) {
  // mask_at keeps the original kind on the masked slot.
  EntityToken original = masked.tokens.tokens.at(masked.masked_index);
  original.text = masked.original_token;
  std::vector<FillCandidate> listing =
      fill_mask(model, masked, model.tokenizer().vocab_size(), reserved);
  std::erase_if(listing, [&](const FillCandidate& c) { return !fill_fits(c.text, original); });
  if (listing.empty()) {
    throw Error(ErrorCode::kNoViableCandidate, "no fill differs from '" + masked.original_token + "'");
  }

  const FillCandidate* chosen = &listing.front();
  if (strategy.kind == FillStrategy::Kind::kSampleTopK) {
    if (strategy.k == 0 || !(strategy.temperature > 0.0)) {
      throw Error(ErrorCode::kInvalidConfig, "sample-topk needs k >= 1 and temperature > 0");
    }
    const std::size_t k = std::min(strategy.k, listing.size());
    std::vector<double> weights(k);
    for (std::size_t i = 0; i < k; ++i) {
      weights[i] = std::pow(std::max(listing[i].probability, 1e-300), 1.0 / strategy.temperature);
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = k - 1;
    for (std::size_t i = 0; i < k; ++i) {
      if (u < weights[i]) {
        pick = i;
        break;
      }
      u -= weights[i];
    }
    chosen = &listing[pick];
  }

  CandidateSample out;
  out.filled_request = source;
  out.filled_request.id = source.id + "-syn";
  out.filled_request.raw = fill_text(masked, chosen->text);
  out.filled_token = chosen->text;
  out.original_token = masked.original_token;
  out.masked_index = masked.masked_index;
  out.generator_probability = chosen->probability;
  out.source_id = source.id;
  return out;
}

double uncertainty(std::span<const double> p) {
  if (p.size() < 2) throw Error(ErrorCode::kNotADistribution, "need at least two classes");
  double sum = 0.0;
  double h = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw Error(ErrorCode::kNotADistribution, "negative or non-finite probability");
    }
    sum += x;
    if (x > 0.0) h -= x * std::log(x);
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::kNotADistribution, "probabilities sum to " + std::to_string(sum));
  }
  return std::clamp(h / std::log(static_cast<double>(p.size())), 0.0, 1.0);
}

void DiscriminatorOptions::validate() const {
  if (!(tau_uncertainty >= 0.0 && tau_uncertainty <= 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "tau_uncertainty must lie in [0, 1]");
  }
  if (!(tau_accept >= 0.0)) throw Error(ErrorCode::kOutOfRange, "tau_accept must be >= 0");
}

Discriminator::Discriminator(std::shared_ptr<const BbpeTokenizer> tokenizer,
                             const LmConfig& encoder_config, DiscriminatorOptions options)
    : encoder_(std::move(tokenizer), encoder_config), options_(options) {
  options_.validate();
  std::mt19937_64 rng(encoder_config.seed ^ kHeadSeedSalt);
  head_ = LinearHead::zeros(encoder_config.hidden, 2);
  init_normal(head_.tensors("head."), rng);
}

void Discriminator::set_options(const DiscriminatorOptions& options) {
  options.validate();
  options_ = options;
}

std::array<double, 2> Discriminator::probabilities(const TokenizedRequest& tokens) const {
  const EncodedRequest encoded =
      encoder_.encode(tokens, std::nullopt, encoder_.config().max_seq_len);
  const Matrix hidden = encoder_.hidden_states(encoded);
  RowVector logits = hidden.row(0) * head_.weight;
  logits += head_.bias.row(0);
  const RowVector p = softmax(logits);
  return {p(0), p(1)};
}

std::array<double, 2> Discriminator::probabilities(const RawRequestRecord& request) const {
  return probabilities(tokenize_entities(request.raw));
}

double Discriminator::loss_and_gradients(const std::vector<int>& ids, SampleClass target,
                                         double scale, EncoderParams* encoder_grads,
                                         LinearHead* head_grads) const {
  TransformerEncoder::Cache cache;
  const bool want_grads = encoder_grads != nullptr && head_grads != nullptr;
  const Matrix hidden = encoder_.encoder().forward(ids, want_grads ? &cache : nullptr);
  RowVector logits = hidden.row(0) * head_.weight;
  logits += head_.bias.row(0);
  const RowVector p = softmax(logits);
  const int t = static_cast<int>(target);
  const double loss = -std::log(std::max(p(t), 1e-300));
  if (!want_grads) return loss;
  RowVector dlogits = p * scale;
  dlogits(t) -= scale;
  head_grads->weight.noalias() += hidden.row(0).transpose() * dlogits;
  head_grads->bias.row(0) += dlogits;
  Matrix d_hidden = Matrix::Zero(hidden.rows(), hidden.cols());
  d_hidden.row(0) = dlogits * head_.weight.transpose();
  encoder_.encoder().backward(cache, d_hidden, *encoder_grads);
  return loss;
}

Discriminator train_discriminator(std::shared_ptr<const BbpeTokenizer> tokenizer,
                                  const LmConfig& encoder_config,
                                  const RequestCorpus& originals,
                                  const std::vector<CandidateSample>& candidates,
                                  const DiscriminatorOptions& options,
                                  DiscriminatorLog* log) {
  if (originals.empty() || candidates.empty()) {
    throw Error(ErrorCode::kEmptyInput, "discriminator needs originals and candidates");
  }
  Discriminator disc(std::move(tokenizer), encoder_config, options);
  const LmConfig& config = disc.encoder().config();

  struct Example {
    std::vector<int> ids;
    TokenizedRequest tokens;
    SampleClass label;
    bool candidate;
  };
  std::vector<Example> examples;
  examples.reserve(originals.size() + candidates.size());
  auto add = [&](const std::string& raw, SampleClass label, bool candidate) {
    TokenizedRequest tokens = tokenize_entities(raw);
    std::vector<int> ids = disc.encoder().encode(tokens, std::nullopt, config.block_size).ids;
    examples.push_back({std::move(ids), std::move(tokens), label, candidate});
  };
  for (const auto& r : originals.records()) add(r.raw, SampleClass::kReal, false);
  for (const auto& c : candidates) add(c.filled_request.raw, SampleClass::kSynthetic, true);

  std::vector<NamedTensor> params = disc.encoder().encoder().params().tensors();
  for (auto& t : disc.head().tensors("head.")) params.push_back(t);
  EncoderParams encoder_grads = EncoderParams::zeros(disc.encoder().encoder().shape());
  LinearHead head_grads = LinearHead::zeros(config.hidden, 2);
  std::vector<NamedTensor> grads = encoder_grads.tensors();
  for (auto& t : head_grads.tensors("head.")) grads.push_back(t);

  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (examples.size() + batch - 1) / batch;
  const LinearWarmupSchedule schedule(config.learning_rate,
                                      steps_per_epoch * static_cast<std::size_t>(config.epochs),
                                      config.warmup_fraction);
  AdamW optimizer(params, config.weight_decay);
  std::mt19937_64 rng(config.seed ^ kShuffleSeedSalt);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  DiscriminatorLog local;
  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch > 0) {
      std::size_t real = 0;
      for (auto& ex : examples) {
        if (!ex.candidate) continue;
        const auto p = disc.probabilities(ex.tokens);
        const double u = uncertainty(p);
        ex.label = u <= options.tau_uncertainty && p[0] > p[1] ? SampleClass::kReal
                                                               : SampleClass::kSynthetic;
        if (ex.label == SampleClass::kReal) ++real;
      }
      local.relabeled_real.push_back(real);
    }
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++step) {
      const std::size_t end = std::min(order.size(), start + batch);
      set_zero(grads);
      const double scale = 1.0 / static_cast<double>(end - start);
      double loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = examples[order[i]];
        loss += disc.loss_and_gradients(ex.ids, ex.label, scale, &encoder_grads, &head_grads);
      }
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kNonFiniteLoss, "discriminator loss at epoch " +
                                                   std::to_string(epoch));
      }
      optimizer.step(grads, schedule.rate(step));
      epoch_loss += loss;
    }
    local.epoch_loss.push_back(epoch_loss / static_cast<double>(examples.size()));
  }
  round_to_float(params);
  if (log != nullptr) *log = std::move(local);
  return disc;
}

Validation validate_probabilities(const std::array<double, 2>& p,
                                  const DiscriminatorOptions& options) {
  Validation v;
  v.p_real = p[0];
  v.confidence = 1.0 - uncertainty(p);
  if (options.tau_accept <= 0.0) {
    v.accepted = true;
  } else {
    v.accepted = p[0] > p[1] && v.confidence >= options.tau_accept;
  }
  return v;
}

Validation validate_candidate(const Discriminator& disc, const CandidateSample& candidate) {
  return validate_probabilities(disc.probabilities(candidate.filled_request), disc.options());
}

RequestCorpus AugmentedDatastore::combined() const {
  RequestCorpus out = originals;
  for (const auto& s : synthetics) out.add(s.filled_request);
  return out;
}

std::vector<CandidateSample> generate_candidates(const RequestCorpus& train,
                                                 const LanguageModel& model,
                                                 const ReservedTokenSet& reserved,
                                                 const FillStrategy& strategy,
                                                 std::uint64_t seed, AugmentStats* stats) {
  AugmentStats local;
  std::vector<CandidateSample> out;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const RawRequestRecord& record = train[i];
    ++local.attempted;
    try {
      const std::size_t index = find_outlier_token(model, record, reserved);
      const MaskedRequest masked = mask_at(record, index, reserved);
      std::mt19937_64 rng = record_rng(seed, i);
      out.push_back(generate_candidate(model, masked, record, strategy, rng, &reserved));
      ++local.generated;
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::kNoMaskableToken:
        case ErrorCode::kEmptyRequest: ++local.no_maskable; break;
        case ErrorCode::kNoViableCandidate: ++local.no_viable; break;
        case ErrorCode::kSequenceTooLong: ++local.too_long; break;
        default: throw;
      }
    }
  }
  if (stats != nullptr) *stats = local;
  return out;
}

AugmentedDatastore build_datastore(const RequestCorpus& train,
                                   const std::vector<CandidateSample>& candidates,
                                   const Discriminator& disc, AugmentStats* stats) {
  AugmentedDatastore store;
  store.originals = train;
  std::size_t rejected = 0;
  for (const auto& c : candidates) {
    const Validation v = validate_candidate(disc, c);
    if (!v.accepted) {
      ++rejected;
      continue;
    }
    CandidateSample s = c;
    s.confidence = v.confidence;
    store.provenance.emplace(s.filled_request.id, s.source_id);
    store.synthetics.push_back(std::move(s));
  }
  if (stats != nullptr) {
    stats->rejected = rejected;
    stats->accepted = store.synthetics.size();
  }
  return store;
}

AugmentedDatastore build_datastore(const RequestCorpus& train, const LanguageModel& model,
                                   const Discriminator& disc, const ReservedTokenSet& reserved,
                                   const FillStrategy& strategy, std::uint64_t seed,
                                   AugmentStats* stats) {
  AugmentStats local;
  const auto candidates = generate_candidates(train, model, reserved, strategy, seed, &local);
  AugmentedDatastore store = build_datastore(train, candidates, disc, &local);
  if (stats != nullptr) *stats = local;
  return store;
}

void write_datastore(const AugmentedDatastore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kUnreadablePath, "cannot write " + path.string());
  for (const auto& r : store.originals.records()) out << record_to_json(r).dump() << '\n';
  for (const auto& s : store.synthetics) {
    nlohmann::json j = record_to_json(s.filled_request);
    j["source_id"] = s.source_id;
    j["confidence"] = s.confidence;
    j["generator_probability"] = s.generator_probability;
    j["filled_token"] = s.filled_token;
    j["original_token"] = s.original_token;
    j["masked_index"] = s.masked_index;
    out << j.dump() << '\n';
  }
}

AugmentedDatastore read_datastore(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadablePath, "cannot open " + path.string());
  AugmentedDatastore store;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      RawRequestRecord r = record_from_json(j);
      if (!ids.insert(r.id).second) {
        throw Error(ErrorCode::kCorruptArtifact, "duplicate id " + r.id);
      }
      if (!j.contains("source_id")) {
        store.originals.add(std::move(r));
        continue;
      }
      CandidateSample s;
      s.source_id = j.at("source_id").get<std::string>();
      s.confidence = j.value("confidence", 0.0);
      s.generator_probability = j.value("generator_probability", 0.0);
      s.filled_token = j.value("filled_token", std::string());
      s.original_token = j.value("original_token", std::string());
      s.masked_index = j.value("masked_index", std::size_t{0});
      s.filled_request = std::move(r);
      store.provenance.emplace(s.filled_request.id, s.source_id);
      store.synthetics.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptArtifact, path.string() + ":" + std::to_string(line_no) +
                                                   ": " + e.what());
    }
  }
  return store;
}

}  // namespace reqaug
