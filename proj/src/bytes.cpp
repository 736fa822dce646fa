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

#include "bftdsn/bytes.hpp"

#include <algorithm>

namespace bftdsn {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

bool Hash256::is_zero() const {
  return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; });
}

std::uint64_t Hash256::prefix_u64() const {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | bytes[i];
  return v;
}

std::string Hash256::hex() const { return to_hex(view()); }

Hash256 Hash256::from_hex(std::string_view text) {
  Bytes raw = bftdsn::from_hex(text);
  if (raw.size() != 32) throw ParseError("hash must be 32 bytes of hex");
  Hash256 h;
  std::copy(raw.begin(), raw.end(), h.bytes.begin());
  return h;
}

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view text) {
  if (text.size() % 2 != 0) throw ParseError("odd-length hex string");
  Bytes out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(text[2 * i]);
    int lo = hex_value(text[2 * i + 1]);
    if (hi < 0 || lo < 0) throw ParseError("invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

ByteWriter& ByteWriter::u8(std::uint8_t v) {
  out_.push_back(v);
  return *this;
}

ByteWriter& ByteWriter::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
  return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  return *this;
}

ByteWriter& ByteWriter::raw(ByteView data) {
  out_.insert(out_.end(), data.begin(), data.end());
  return *this;
}

ByteWriter& ByteWriter::blob(ByteView data) {
  if (data.size() > 0xFFFFFFFFu) throw CapacityError("blob larger than 4 GiB");
  u32(static_cast<std::uint32_t>(data.size()));
  return raw(data);
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) throw ParseError("truncated input");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint16_t ByteReader::u16() {
  need(2);
  std::uint16_t v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

bool ByteReader::boolean() {
  std::uint8_t v = u8();
  if (v > 1) throw ParseError("invalid boolean byte");
  return v == 1;
}

Hash256 ByteReader::hash() {
  need(32);
  Hash256 h;
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(pos_), 32, h.bytes.begin());
  pos_ += 32;
  return h;
}

ByteView ByteReader::raw(std::size_t n) {
  need(n);
  ByteView v = data_.subspan(pos_, n);
  pos_ += n;
  return v;
}

Bytes ByteReader::blob() {
  std::uint32_t n = u32();
  ByteView v = raw(n);
  return Bytes(v.begin(), v.end());
}

std::string ByteReader::str() {
  std::uint32_t n = u32();
  ByteView v = raw(n);
  return std::string(v.begin(), v.end());
}

void ByteReader::expect_done() const {
  if (!done()) throw ParseError("trailing bytes after message");
}

}  // namespace bftdsn
