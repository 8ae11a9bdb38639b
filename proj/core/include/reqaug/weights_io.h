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

#ifndef REQAUG_WEIGHTS_IO_H_
#define REQAUG_WEIGHTS_IO_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "reqaug/encoder.h"

namespace reqaug {

// Flat little-endian float32 weight file:
//   "RQAW" | u32 version | u32 count |
//   count x (u32 name_len | name | u32 rows | u32 cols | u64 float offset) |
//   float32 data
void write_weights(const std::filesystem::path& path,
                   const std::vector<ConstNamedTensor>& tensors);

std::map<std::string, Matrix> read_weights(const std::filesystem::path& path);

// Copies tensors from `loaded` into `targets` by name; shapes must match.
void assign_weights(const std::map<std::string, Matrix>& loaded,
                    const std::vector<NamedTensor>& targets);

}  // namespace reqaug

#endif  // REQAUG_WEIGHTS_IO_H_
