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
#include <cstdint>
#include <span>

#include "bftdsn/error.hpp"

namespace bftdsn::gf {

/// x^8 + x^4 + x^3 + x^2 + 1; 0x02 generates the multiplicative group.
inline constexpr unsigned kReductionPolynomial = 0x11D;

/// An element of GF(2^8).
struct FieldElement {
  std::uint8_t value = 0;

  constexpr FieldElement() = default;
  constexpr explicit FieldElement(std::uint8_t v) : value(v) {}

  constexpr bool operator==(const FieldElement&) const = default;
  [[nodiscard]] constexpr bool is_zero() const { return value == 0; }
};

struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<std::uint8_t, 256> log{};
  std::array<std::uint8_t, 256> inv{};
  /// mul[a][b] = a*b, 64 KiB, used by the bulk byte kernels.
  std::array<std::array<std::uint8_t, 256>, 256> mul{};
};

const Tables& tables();

inline FieldElement add(FieldElement a, FieldElement b) {
  return FieldElement(static_cast<std::uint8_t>(a.value ^ b.value));
}

inline FieldElement mul(FieldElement a, FieldElement b) {
  return FieldElement(tables().mul[a.value][b.value]);
}

/// Throws DomainError for zero.
FieldElement inv(FieldElement a);
FieldElement div(FieldElement a, FieldElement b);
FieldElement pow(FieldElement a, unsigned e);

inline FieldElement operator+(FieldElement a, FieldElement b) { return add(a, b); }
inline FieldElement operator*(FieldElement a, FieldElement b) { return mul(a, b); }

/// dst[i] ^= coef * src[i]
void mul_add_region(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src,
                    FieldElement coef);
/// dst[i] = coef * src[i]
void mul_region(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src, FieldElement coef);

}  // namespace bftdsn::gf
