/*
 * Copyright 2026 The vfgnn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VFGNN_SRC_BYTE_IO_H_
#define VFGNN_SRC_BYTE_IO_H_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

#include "vfgnn/errors.h"

namespace vfgnn::byte_io {

inline void WriteU64(std::ostream& os, uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline void WriteF64(std::ostream& os, double v) { WriteU64(os, std::bit_cast<uint64_t>(v)); }

// Reads 8 little-endian bytes, advancing `offset`; `what` names the field
// in the FormatError raised on truncation.
inline uint64_t ReadU64(std::istream& is, uint64_t& offset, const char* what) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8))
    throw FormatError(std::string("truncated ") + what, offset);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  offset += 8;
  return v;
}

inline double ReadF64(std::istream& is, uint64_t& offset, const char* what) {
  return std::bit_cast<double>(ReadU64(is, offset, what));
}

}  // namespace vfgnn::byte_io

#endif  // VFGNN_SRC_BYTE_IO_H_
