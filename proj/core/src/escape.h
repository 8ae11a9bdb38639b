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

#ifndef REQAUG_SRC_ESCAPE_H_
#define REQAUG_SRC_ESCAPE_H_

#include <string>
#include <string_view>

namespace reqaug::internal {

// Visible ASCII stays as is, backslash doubles, every other byte becomes \xHH.
// Escaped text never contains whitespace.
std::string escape_bytes(std::string_view bytes);
std::string unescape_bytes(std::string_view text);

// Shortest decimal that reads back to the same double.
std::string format_double(double value);

}  // namespace reqaug::internal

#endif  // REQAUG_SRC_ESCAPE_H_
