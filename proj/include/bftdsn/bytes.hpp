/**
 * Copyright 2026 The bftdsn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bftdsn/error.hpp"

namespace bftdsn {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// A 256-bit digest. Ordered so it can key maps.
struct Hash256 {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Hash256&) const = default;
  bool operator==(const Hash256&) const = default;

  [[nodiscard]] ByteView view() const { return {bytes.data(), bytes.size()}; }
  [[nodiscard]] bool is_zero() const;
  /// First eight bytes read big-endian.
  [[nodiscard]] std::uint64_t prefix_u64() const;
  [[nodiscard]] std::string hex() const;
  static Hash256 from_hex(std::string_view text);
};

struct Hash256Hasher {
  std::size_t operator()(const Hash256& h) const noexcept {
    return static_cast<std::size_t>(h.prefix_u64());
  }
};

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view text);

inline ByteView as_view(const Bytes& b) { return {b.data(), b.size()}; }
inline ByteView as_view(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Big-endian, length-prefixed serializer used by every wire and file format.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(std::size_t reserve) { out_.reserve(reserve); }

  ByteWriter& u8(std::uint8_t v);
  ByteWriter& u16(std::uint16_t v);
  ByteWriter& u32(std::uint32_t v);
  ByteWriter& u64(std::uint64_t v);
  ByteWriter& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  ByteWriter& boolean(bool v) { return u8(v ? 1 : 0); }
  ByteWriter& hash(const Hash256& h) { return raw(h.view()); }
  ByteWriter& raw(ByteView data);
  /// u32 length followed by the bytes.
  ByteWriter& blob(ByteView data);
  ByteWriter& str(std::string_view s) { return blob(as_view(s)); }

  [[nodiscard]] const Bytes& bytes() const& { return out_; }
  [[nodiscard]] Bytes take() && { return std::move(out_); }
  [[nodiscard]] std::size_t size() const { return out_.size(); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  bool boolean();
  Hash256 hash();
  ByteView raw(std::size_t n);
  Bytes blob();
  std::string str();

  [[nodiscard]] std::size_t remaining() const { return data_.size() - pos_; }
  [[nodiscard]] bool done() const { return remaining() == 0; }
  /// Throws ParseError unless every byte was consumed.
  void expect_done() const;

 private:
  void need(std::size_t n) const;

  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace bftdsn
