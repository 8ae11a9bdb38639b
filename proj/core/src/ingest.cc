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

#include "reqaug/ingest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <utility>

#include "reqaug/error.h"

namespace reqaug {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' ||
         c == '\r';
}

// Bytes >= 0x80 join word runs so UTF-8 sequences stay in one entity.
bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

// Length of the valid UTF-8 sequence starting at i, or 0.
std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0 && c >= 0xC2) len = 2;
  else if ((c & 0xF0) == 0xE0) len = 3;
  else if ((c & 0xF8) == 0xF0 && c <= 0xF4) len = 4;
  else return 0;
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 0;
  }
  return len;
}

// Bytes that do not form valid UTF-8 are taken as Latin-1 (CSIC 2010 encodes
// Spanish text that way) and re-encoded.
std::string to_valid_utf8(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const std::size_t len = utf8_sequence_length(s, i);
    if (len > 0) {
      out.append(s.substr(i, len));
      i += len;
    } else {
      const auto c = static_cast<unsigned char>(s[i]);
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
      ++i;
    }
  }
  return out;
}

// Whitespace runs (including decoded CR/LF) collapse to one space.
std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

const std::set<std::string>& http_methods() {
  static const std::set<std::string> methods = {
      "get", "post", "put", "delete", "head", "options", "patch", "trace",
      "connect"};
  return methods;
}

bool is_request_line(std::string_view line) {
  const std::string t = trim(line);
  const std::size_t space = t.find(' ');
  if (space == std::string::npos) return false;
  return http_methods().count(ascii_lower(t.substr(0, space))) > 0;
}

std::string strip_scheme_and_host(std::string_view target) {
  const std::size_t scheme = target.find("://");
  if (scheme == std::string_view::npos) return std::string(target);
  const std::size_t path = target.find('/', scheme + 3);
  if (path == std::string_view::npos) return "/";
  return std::string(target.substr(path));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kUnreadablePath, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string make_id(std::string_view prefix, std::size_t index) {
  std::ostringstream ss;
  ss << prefix << '-';
  ss.width(6);
  ss.fill('0');
  ss << index;
  return ss.str();
}

// CSIC 2010: requests separated by blank lines, bodies follow the header
// block after one blank line. A request starts at any request line.
void parse_csic_file(const std::filesystem::path& file, Label label,
                     RequestCorpus& corpus, LoadStats& stats) {
  const std::string text = read_file(file);
  const std::vector<std::string> lines = split_lines(text);
  std::vector<std::string> current;
  auto flush = [&]() {
    if (current.empty()) return;
    std::string joined;
    for (const auto& l : current) joined += l + "\n";
    current.clear();
    try {
      RawRequestRecord r;
      r.raw = normalize_request(joined);
      r.label = label;
      r.source_dataset = "csic2010";
      r.id = make_id(std::string("csic-") + (label == Label::kNormal ? "n" : "a"),
                     corpus.count(label));
      corpus.add(std::move(r));
      ++stats.parsed;
    } catch (const Error&) {
      ++stats.malformed;
    }
  };
  for (const auto& line : lines) {
    if (is_request_line(line)) {
      flush();
    } else if (current.empty()) {
      if (!is_blank(line)) ++stats.malformed;
      continue;
    }
    current.push_back(line);
  }
  flush();
}

Label label_from_filename(const std::filesystem::path& file) {
  const std::string name = ascii_lower(file.filename().string());
  if (name.find("anomal") != std::string::npos ||
      name.find("attack") != std::string::npos ||
      name.find("abnormal") != std::string::npos) {
    return Label::kAbnormal;
  }
  if (name.find("normal") != std::string::npos) return Label::kNormal;
  throw Error(ErrorCode::kUnknownFormat,
              "cannot infer label from CSIC file name " + file.string());
}

std::vector<std::filesystem::path> list_files(
    const std::filesystem::path& path) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  return files;
}

std::string json_scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

// ATRDF 2023 pairs: {"request": {"method", "url", "headers", "body",
// "Attack_Tag"?}, "response": {...}}. A non-empty Attack_Tag marks the
// request abnormal.
void parse_atrdf_item(const nlohmann::json& item, RequestCorpus& corpus,
                      LoadStats& stats) {
  static const NormalizeOptions kAtrdfOptions{.include_headers = true};
  try {
    const nlohmann::json& req = item.contains("request") ? item.at("request")
                                                         : item;
    std::string http = json_scalar_text(req.at("method")) + " " +
                       json_scalar_text(req.at("url")) + "\n";
    if (req.contains("headers") && req.at("headers").is_object()) {
      for (const auto& [name, value] : req.at("headers").items()) {
        http += name + ": " + json_scalar_text(value) + "\n";
      }
    }
    http += "\n";
    if (req.contains("body")) http += json_scalar_text(req.at("body"));

    RawRequestRecord r;
    r.raw = normalize_request(http, kAtrdfOptions);
    std::string tag;
    if (req.contains("Attack_Tag")) tag = json_scalar_text(req.at("Attack_Tag"));
    if (tag.empty() && item.contains("request.Attack_Tag")) {
      tag = json_scalar_text(item.at("request.Attack_Tag"));
    }
    if (tag.empty() && item.contains("attack_type")) {
      tag = json_scalar_text(item.at("attack_type"));
    }
    r.label = tag.empty() ? Label::kNormal : Label::kAbnormal;
    if (item.contains("label")) {
      r.label = parse_label(ascii_lower(json_scalar_text(item.at("label"))));
    }
    if (!tag.empty()) r.attack_type = tag;
    r.source_dataset = "atrdf2023";
    r.id = make_id("atrdf", corpus.size());
    corpus.add(std::move(r));
    ++stats.parsed;
  } catch (const Error&) {
    ++stats.malformed;
  } catch (const nlohmann::json::exception&) {
    ++stats.malformed;
  }
}

void parse_atrdf_file(const std::filesystem::path& file, RequestCorpus& corpus,
                      LoadStats& stats) {
  const std::string text = read_file(file);
  const std::string head = trim(text.substr(0, std::min<std::size_t>(64, text.size())));
  if (!head.empty() && head.front() == '[') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kUnknownFormat,
                  file.string() + " is not ATRDF JSON: " + e.what());
    }
    for (const auto& item : doc) parse_atrdf_item(item, corpus, stats);
    return;
  }
  // Line-delimited variant.
  for (const auto& line : split_lines(text)) {
    if (is_blank(line)) continue;
    try {
      parse_atrdf_item(nlohmann::json::parse(line), corpus, stats);
    } catch (const nlohmann::json::exception&) {
      ++stats.malformed;
    }
  }
}

}  // namespace

std::string_view label_name(Label label) {
  return label == Label::kNormal ? "normal" : "abnormal";
}

Label parse_label(std::string_view text) {
  if (text == "normal") return Label::kNormal;
  if (text == "abnormal" || text == "anomalous") return Label::kAbnormal;
  throw Error(ErrorCode::kUnknownFormat, "unknown label '" + std::string(text) + "'");
}

std::string_view split_name(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw Error(ErrorCode::kUnknownFormat, "unknown split '" + std::string(text) + "'");
}

CorpusFormat parse_corpus_format(std::string_view text) {
  if (text == "csic-raw") return CorpusFormat::kCsicRaw;
  if (text == "atrdf") return CorpusFormat::kAtrdf;
  if (text == "canonical") return CorpusFormat::kCanonical;
  if (text == "smoke") return CorpusFormat::kSmoke;
  throw Error(ErrorCode::kUnknownFormat, "unknown corpus format '" + std::string(text) + "'");
}

std::string_view corpus_format_name(CorpusFormat format) {
  switch (format) {
    case CorpusFormat::kCsicRaw: return "csic-raw";
    case CorpusFormat::kAtrdf: return "atrdf";
    case CorpusFormat::kCanonical: return "canonical";
    case CorpusFormat::kSmoke: return "smoke";
  }
  return "unknown";
}

std::string TokenizedRequest::detokenize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out += separators[i];
    out += tokens[i].text;
  }
  out += separators.back();
  return out;
}

std::vector<std::string> TokenizedRequest::texts() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

RequestCorpus::RequestCorpus(std::vector<RawRequestRecord> records) {
  records_.reserve(records.size());
  for (auto& r : records) add(std::move(r));
}

void RequestCorpus::add(RawRequestRecord record) {
  (record.label == Label::kNormal ? normal_ : abnormal_) += 1;
  records_.push_back(std::move(record));
}

RequestCorpus RequestCorpus::filter(Label label) const {
  RequestCorpus out;
  for (const auto& r : records_) {
    if (r.label == label) out.add(r);
  }
  return out;
}

std::string percent_decode(std::string_view text, bool plus_as_space) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '%' && i + 2 < text.size()) {
      const int hi = hex_value(text[i + 1]);
      const int lo = hex_value(text[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(plus_as_space && c == '+' ? ' ' : c);
  }
  return out;
}

std::string normalize_request(std::string_view raw_http,
                              const NormalizeOptions& options) {
  const std::vector<std::string> lines = split_lines(raw_http);
  std::size_t i = 0;
  while (i < lines.size() && is_blank(lines[i])) ++i;
  if (i == lines.size()) {
    throw Error(ErrorCode::kEmptyRequest, "no request line");
  }

  std::istringstream request_line(trim(lines[i]));
  std::string method, target;
  request_line >> method >> target;
  ++i;

  std::vector<std::pair<std::string, std::string>> headers;
  for (; i < lines.size() && !is_blank(lines[i]); ++i) {
    const std::size_t colon = lines[i].find(':');
    if (colon == std::string::npos) continue;
    headers.emplace_back(ascii_lower(trim(lines[i].substr(0, colon))),
                         trim(lines[i].substr(colon + 1)));
  }
  std::string body;
  for (; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    if (!body.empty()) body += ' ';
    body += trim(lines[i]);
  }

  bool form_body = true;
  for (const auto& [name, value] : headers) {
    if (name == "content-type" &&
        ascii_lower(value).find("json") != std::string::npos) {
      form_body = false;
    }
  }

  std::vector<std::string> fields;
  fields.push_back(method);
  if (!target.empty()) {
    const std::string stripped = strip_scheme_and_host(target);
    const std::size_t q = stripped.find('?');
    fields.push_back(percent_decode(stripped.substr(0, q), false));
    if (q != std::string::npos && q + 1 < stripped.size()) {
      fields.push_back(percent_decode(stripped.substr(q + 1), true));
    }
  }
  if (options.include_headers) {
    std::sort(headers.begin(), headers.end());
    for (const auto& [name, value] : headers) {
      if (options.skipped_headers.count(name) > 0) continue;
      fields.push_back(name + ": " + percent_decode(value, false));
    }
  }
  if (!body.empty()) fields.push_back(percent_decode(body, form_body));

  std::string joined;
  for (const auto& f : fields) {
    if (!joined.empty()) joined += ' ';
    joined += f;
  }
  return collapse_whitespace(ascii_lower(to_valid_utf8(joined)));
}

TokenizedRequest tokenize_entities(std::string_view normalized) {
  TokenizedRequest out;
  std::string sep;
  std::size_t i = 0;
  while (i < normalized.size()) {
    const auto c = static_cast<unsigned char>(normalized[i]);
    if (is_space(c)) {
      sep.push_back(static_cast<char>(c));
      ++i;
      continue;
    }
    EntityToken token;
    token.position = out.tokens.size();
    if (is_word_byte(c)) {
      std::size_t j = i;
      bool all_digits = true;
      while (j < normalized.size() &&
             is_word_byte(static_cast<unsigned char>(normalized[j]))) {
        if (normalized[j] < '0' || normalized[j] > '9') all_digits = false;
        ++j;
      }
      token.text = std::string(normalized.substr(i, j - i));
      token.kind = all_digits ? TokenKind::kNumber : TokenKind::kWord;
      i = j;
    } else {
      token.text = std::string(1, static_cast<char>(c));
      token.kind = TokenKind::kPunctuation;
      ++i;
    }
    out.separators.push_back(std::move(sep));
    sep.clear();
    out.tokens.push_back(std::move(token));
  }
  out.separators.push_back(std::move(sep));
  return out;
}

RequestCorpus load_corpus(const std::filesystem::path& path,
                          CorpusFormat format, LoadStats* stats) {
  if (format != CorpusFormat::kSmoke && !std::filesystem::exists(path)) {
    throw Error(ErrorCode::kUnreadablePath, path.string() + " does not exist");
  }
  LoadStats local;
  RequestCorpus corpus;
  switch (format) {
    case CorpusFormat::kCanonical:
      corpus = read_canonical(path, &local);
      break;
    case CorpusFormat::kCsicRaw:
      for (const auto& file : list_files(path)) {
        parse_csic_file(file, label_from_filename(file), corpus, local);
      }
      break;
    case CorpusFormat::kAtrdf:
      for (const auto& file : list_files(path)) {
        parse_atrdf_file(file, corpus, local);
      }
      break;
    case CorpusFormat::kSmoke:
      throw Error(ErrorCode::kUnknownFormat,
                  "smoke corpora are generated, not loaded; use make_smoke_corpus");
  }
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "no records parsed from " + path.string());
  }
  if (stats != nullptr) *stats = local;
  return corpus;
}

CorpusSplit split_corpus(const RequestCorpus& corpus, double train_fraction,
                         std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "train_fraction must lie in (0, 1)");
  }
  const std::size_t n = corpus.size();
  const auto n_train_total =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 0.5));

  // Largest-remainder allocation of the global train count across labels.
  const std::array<Label, 2> labels = {Label::kNormal, Label::kAbnormal};
  std::array<std::size_t, 2> quota{};
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (std::size_t l = 0; l < 2; ++l) {
    const double exact = train_fraction * static_cast<double>(corpus.count(labels[l]));
    quota[l] = static_cast<std::size_t>(std::floor(exact));
    remainder[l] = exact - std::floor(exact);
    assigned += quota[l];
  }
  std::array<std::size_t, 2> order = {0, 1};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t k = 0; assigned < n_train_total && k < 2; ++k) {
    if (quota[order[k]] < corpus.count(labels[order[k]])) {
      ++quota[order[k]];
      ++assigned;
    }
  }

  CorpusSplit split;
  split.train_fraction = train_fraction;
  split.seed = seed;
  std::vector<std::pair<std::size_t, Split>> placement;
  for (std::size_t l = 0; l < 2; ++l) {
    const std::size_t count = corpus.count(labels[l]);
    if (count == 0) continue;
    if (count >= 2 && (quota[l] == 0 || quota[l] == count)) {
      throw Error(ErrorCode::kDegenerateSplit,
                  std::string("label ") + std::string(label_name(labels[l])) +
                      " would be absent from one side of the split");
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (corpus[i].label == labels[l]) idx.push_back(i);
    }
    std::mt19937_64 rng(seed * 2 + l);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      placement.emplace_back(idx[k], k < quota[l] ? Split::kTrain : Split::kTest);
    }
  }
  if (assigned == 0 || assigned == n) {
    throw Error(ErrorCode::kDegenerateSplit, "one side of the split would be empty");
  }
  // Corpus order is kept within each side.
  std::sort(placement.begin(), placement.end());
  for (const auto& [i, side] : placement) {
    RawRequestRecord r = corpus[i];
    r.split = side;
    (side == Split::kTrain ? split.train : split.test).add(std::move(r));
  }
  return split;
}

nlohmann::json record_to_json(const RawRequestRecord& record) {
  nlohmann::json j;
  j["id"] = record.id;
  j["raw"] = record.raw;
  j["label"] = std::string(label_name(record.label));
  if (record.attack_type) j["attack_type"] = *record.attack_type;
  j["source_dataset"] = record.source_dataset;
  if (record.split) j["split"] = std::string(split_name(*record.split));
  return j;
}

RawRequestRecord record_from_json(const nlohmann::json& j) {
  RawRequestRecord r;
  r.id = j.at("id").get<std::string>();
  r.raw = j.at("raw").get<std::string>();
  r.label = parse_label(j.at("label").get<std::string>());
  if (j.contains("attack_type") && !j.at("attack_type").is_null()) {
    r.attack_type = j.at("attack_type").get<std::string>();
  }
  r.source_dataset = j.value("source_dataset", std::string());
  if (j.contains("split") && !j.at("split").is_null()) {
    r.split = parse_split(j.at("split").get<std::string>());
  }
  if (r.raw.empty() || r.id.empty()) {
    throw Error(ErrorCode::kEmptyRequest, "record with empty id or raw text");
  }
  return r;
}

void write_canonical(const RequestCorpus& corpus,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kUnreadablePath, "cannot write " + path.string());
  for (const auto& r : corpus.records()) out << record_to_json(r).dump() << '\n';
}

RequestCorpus read_canonical(const std::filesystem::path& path,
                             LoadStats* stats) {
  const std::string text = read_file(path);
  LoadStats local;
  RequestCorpus corpus;
  std::set<std::string> seen;
  for (const auto& line : split_lines(text)) {
    if (is_blank(line)) continue;
    try {
      RawRequestRecord r = record_from_json(nlohmann::json::parse(line));
      if (!seen.insert(r.id).second) {
        ++local.malformed;
        continue;
      }
      corpus.add(std::move(r));
      ++local.parsed;
    } catch (const Error&) {
      ++local.malformed;
    } catch (const nlohmann::json::exception&) {
      ++local.malformed;
    }
  }
  if (stats != nullptr) *stats = local;
  return corpus;
}

// --- smoke corpus ----------------------------------------------------------

namespace {

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

std::string url_encode(std::string_view text) {
  static const char* kHex = "0123456789ABCDEF";
  std::string out;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c) && c < 0x80) {
      out.push_back(ch);
    } else if (c == ' ') {
      out.push_back('+');
    } else if (c == '.' || c == '-' || c == '_') {
      out.push_back(ch);
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out;
}

struct Endpoint {
  std::string path;
  std::vector<std::string> params;
};

}  // namespace

RequestCorpus make_smoke_corpus(std::size_t n_normal, std::size_t n_abnormal,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<Endpoint> endpoints = {
      {"/tienda1/publico/anadir.jsp", {"id", "nombre", "precio", "cantidad", "b1"}},
      {"/tienda1/publico/pagar.jsp", {"modo"}},
      {"/tienda1/publico/autenticar.jsp", {"modo", "login", "pwd", "remember"}},
      {"/tienda1/publico/registro.jsp", {"modo", "login", "email", "ciudad"}},
      {"/tienda1/publico/caracteristicas.jsp", {"id"}},
      {"/tienda1/publico/vaciar.jsp", {"b2"}},
      {"/tienda1/miembros/editar.jsp", {"modo", "nombre", "apellidos", "ciudad"}},
  };
  const std::map<std::string, std::vector<std::string>> words = {
      {"nombre", {"jamon", "queso", "vino", "aceite", "chorizo", "lomo", "turron", "miel"}},
      {"modo", {"insertar", "entrar", "registro", "actualizar"}},
      {"login", {"macreyno", "alvarez", "berta", "castell", "dorotea", "eulalia", "fermin"}},
      {"pwd", {"clave", "secreto", "azul", "tortuga", "pimiento"}},
      {"remember", {"on", "off"}},
      {"ciudad", {"madrid", "sevilla", "bilbao", "toledo", "zamora", "lugo"}},
      {"apellidos", {"garcia", "lopez", "martin", "sanchez", "romero"}},
      {"b1", {"comprar", "anadir"}},
      {"b2", {"vaciar", "borrar"}},
  };
  const std::vector<std::string> sqli = {
      "' or '1'='1", "1; drop table usuarios --", "admin' --",
      "' union select password from usuarios --", "1' and sleep(5) --",
      "'; exec xp_cmdshell 'dir' --"};
  const std::vector<std::string> xss = {
      "<script>alert('xss')</script>", "<img src=x onerror=alert(1)>",
      "\"><script>document.cookie</script>", "<svg onload=alert(document.domain)>",
      "<iframe src=javascript:alert(2)>"};

  auto value_for = [&](const std::string& param) -> std::string {
    if (param == "id" || param == "cantidad") {
      return std::to_string(std::uniform_int_distribution<int>(1, 99)(rng));
    }
    if (param == "precio") {
      return std::to_string(std::uniform_int_distribution<int>(10, 9999)(rng));
    }
    if (param == "email") {
      return pick(words.at("login"), rng) + "@" + pick(words.at("ciudad"), rng) + ".es";
    }
    return pick(words.at(param), rng);
  };

  std::vector<RawRequestRecord> records;
  const std::size_t total = n_normal + n_abnormal;
  for (std::size_t i = 0; i < total; ++i) {
    const bool abnormal = i >= n_normal;
    const Endpoint& ep = pick(endpoints, rng);
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& p : ep.params) kv.emplace_back(p, value_for(p));
    std::optional<std::string> attack;
    if (abnormal) {
      const bool is_sqli = (i - n_normal) % 2 == 0;
      attack = is_sqli ? "SQLi" : "XSS";
      auto& target = kv[std::uniform_int_distribution<std::size_t>(0, kv.size() - 1)(rng)];
      target.second = pick(is_sqli ? sqli : xss, rng);
    }
    std::string query;
    for (const auto& [k, v] : kv) {
      if (!query.empty()) query += '&';
      query += k + "=" + url_encode(v);
    }
    const bool post = std::uniform_int_distribution<int>(0, 3)(rng) == 0;
    std::string http;
    if (post) {
      http = "POST http://localhost:8080" + ep.path + " HTTP/1.1\n"
             "Host: localhost:8080\n"
             "Content-Type: application/x-www-form-urlencoded\n"
             "Content-Length: " + std::to_string(query.size()) + "\n\n" + query + "\n";
    } else {
      http = "GET http://localhost:8080" + ep.path + "?" + query +
             " HTTP/1.1\nHost: localhost:8080\n\n";
    }
    RawRequestRecord r;
    r.id = make_id("smoke", i);
    r.raw = normalize_request(http);
    r.label = abnormal ? Label::kAbnormal : Label::kNormal;
    r.attack_type = attack;
    r.source_dataset = "smoke";
    records.push_back(std::move(r));
  }
  return RequestCorpus(std::move(records));
}

}  // namespace reqaug
