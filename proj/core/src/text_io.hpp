// Copyright 2026 The OBIL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OBIL_SRC_TEXT_IO_HPP_
#define OBIL_SRC_TEXT_IO_HPP_

// Token-level helpers shared by the text serializers.

#include <charconv>
#include <cstdint>
#include <istream>
#include <string>
#include <system_error>

#include "obil/error.hpp"

namespace obil::detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string next_token(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw Error(ErrorCode::kFormatError, "unexpected end of input");
  return tok;
}

inline void expect_token(std::istream& in, const std::string& want) {
  const auto tok = next_token(in);
  if (tok != want) {
    throw Error(ErrorCode::kFormatError, "expected '" + want + "', got '" + tok + "'");
  }
}

inline double parse_double(const std::string& tok) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw Error(ErrorCode::kFormatError, "bad number '" + tok + "'");
  }
  return v;
}

inline std::uint64_t parse_u64(const std::string& tok) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw Error(ErrorCode::kFormatError, "bad integer '" + tok + "'");
  }
  return v;
}

inline double read_double(std::istream& in) { return parse_double(next_token(in)); }
inline std::uint64_t read_u64(std::istream& in) { return parse_u64(next_token(in)); }

}  // namespace obil::detail

#endif  // OBIL_SRC_TEXT_IO_HPP_
