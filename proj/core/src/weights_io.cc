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

#include "reqaug/weights_io.h"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "reqaug/error.h"

namespace reqaug {
namespace {

constexpr char kMagic[4] = {'R', 'Q', 'A', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  std::uint64_t uint(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  const std::string& data() const { return data_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
      throw Error(ErrorCode::kCorruptArtifact, "weight file truncated");
    }
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_weights(const std::filesystem::path& path,
                   const std::vector<ConstNamedTensor>& tensors) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.value->rows()));
    put_u32(out, static_cast<std::uint32_t>(t.value->cols()));
    put_u64(out, offset);
    offset += static_cast<std::uint64_t>(t.value->size());
  }
  for (const auto& t : tensors) {
    for (Eigen::Index i = 0; i < t.value->size(); ++i) {
      const auto f = static_cast<float>(t.value->data()[i]);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      put_u32(out, bits);
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kUnreadablePath, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::map<std::string, Matrix> read_weights(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kUnreadablePath, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  Reader r(std::move(data));
  if (r.bytes(4) != std::string(kMagic, 4)) {
    throw Error(ErrorCode::kCorruptArtifact, path.string() + " is not a weight file");
  }
  if (r.uint(4) != kVersion) {
    throw Error(ErrorCode::kCorruptArtifact, "unsupported weight file version");
  }
  const auto count = r.uint(4);
  struct Entry {
    std::string name;
    std::uint64_t rows, cols, offset;
  };
  std::vector<Entry> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    Entry e;
    e.name = r.bytes(r.uint(4));
    e.rows = r.uint(4);
    e.cols = r.uint(4);
    e.offset = r.uint(8);
    entries.push_back(std::move(e));
  }
  const std::size_t base = r.pos();
  std::map<std::string, Matrix> out;
  for (const auto& e : entries) {
    const std::size_t start = base + 4 * e.offset;
    const std::size_t n = e.rows * e.cols;
    if (start + 4 * n > r.data().size()) {
      throw Error(ErrorCode::kCorruptArtifact, "tensor " + e.name + " out of bounds");
    }
    Matrix m(static_cast<Eigen::Index>(e.rows), static_cast<Eigen::Index>(e.cols));
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(
                    static_cast<unsigned char>(r.data()[start + 4 * i + b]))
                << (8 * b);
      }
      float f;
      std::memcpy(&f, &bits, sizeof f);
      m.data()[i] = f;
    }
    out.emplace(e.name, std::move(m));
  }
  return out;
}

void assign_weights(const std::map<std::string, Matrix>& loaded,
                    const std::vector<NamedTensor>& targets) {
  for (const auto& t : targets) {
    const auto it = loaded.find(t.name);
    if (it == loaded.end()) {
      throw Error(ErrorCode::kCorruptArtifact, "missing tensor " + t.name);
    }
    if (it->second.rows() != t.value->rows() || it->second.cols() != t.value->cols()) {
      throw Error(ErrorCode::kCorruptArtifact, "shape mismatch for " + t.name);
    }
    *t.value = it->second;
  }
}

}  // namespace reqaug
