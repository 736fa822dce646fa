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

#include "bftdsn/gf256.hpp"

#include <cstring>

namespace bftdsn::gf {

namespace {

Tables build_tables() {
  Tables t;
  unsigned x = 1;
  for (unsigned i = 0; i < 255; ++i) {
    t.exp[i] = static_cast<std::uint8_t>(x);
    t.log[x] = static_cast<std::uint8_t>(i);
    x <<= 1;
    if (x & 0x100) x ^= kReductionPolynomial;
  }
  for (unsigned i = 255; i < 512; ++i) t.exp[i] = t.exp[i - 255];
  t.inv[0] = 0;
  for (unsigned a = 1; a < 256; ++a) t.inv[a] = t.exp[255 - t.log[a]];
  for (unsigned a = 0; a < 256; ++a) {
    for (unsigned b = 0; b < 256; ++b) {
      t.mul[a][b] = (a == 0 || b == 0) ? 0 : t.exp[t.log[a] + t.log[b]];
    }
  }
  return t;
}

}  // namespace

const Tables& tables() {
  static const Tables t = build_tables();
  return t;
}

FieldElement inv(FieldElement a) {
  if (a.is_zero()) throw DomainError("zero has no multiplicative inverse in GF(2^8)");
  return FieldElement(tables().inv[a.value]);
}

FieldElement div(FieldElement a, FieldElement b) { return mul(a, inv(b)); }

FieldElement pow(FieldElement a, unsigned e) {
  FieldElement r(1);
  while (e > 0) {
    if (e & 1u) r = mul(r, a);
    a = mul(a, a);
    e >>= 1;
  }
  return r;
}

void mul_add_region(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src,
                    FieldElement coef) {
  if (dst.size() != src.size()) throw ShapeError("region lengths differ");
  if (coef.is_zero()) return;
  if (coef.value == 1) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
    return;
  }
  const auto& row = tables().mul[coef.value];
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= row[src[i]];
}

void mul_region(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src, FieldElement coef) {
  if (dst.size() != src.size()) throw ShapeError("region lengths differ");
  if (coef.is_zero()) {
    std::memset(dst.data(), 0, dst.size());
    return;
  }
  const auto& row = tables().mul[coef.value];
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = row[src[i]];
}

}  // namespace bftdsn::gf
