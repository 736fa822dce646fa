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
#include <memory>
#include <span>
#include <vector>

#include "bftdsn/bytes.hpp"
#include "bftdsn/gf256.hpp"
#include "bftdsn/reed_solomon.hpp"

namespace bftdsn::hf {

/// GF(2^64) built as the degree-8 extension GF(2^8)[y] / (y^8 + y^3 + 0x08 y^2 + 1).
///
/// Byte j of the 64-bit word is the coefficient of y^j. Multiplying by a
/// GF(2^8) scalar therefore scales each byte independently, which is exactly
/// how a Reed-Solomon generator acts on chunk bytes. That makes the
/// fingerprint commute with encoding.
struct Gf64 {
  std::uint64_t value = 0;

  constexpr Gf64() = default;
  constexpr explicit Gf64(std::uint64_t v) : value(v) {}
  constexpr bool operator==(const Gf64&) const = default;

  [[nodiscard]] constexpr std::uint8_t coefficient(unsigned j) const {
    return static_cast<std::uint8_t>(value >> (8 * j));
  }
};

/// Low coefficients of the reduction polynomial (monic y^8 term implied):
/// index j holds the coefficient of y^j.
inline constexpr std::array<std::uint8_t, 8> kExtensionPolynomial = {1, 0, 0x08, 1, 0, 0, 0, 0};

Gf64 add(Gf64 a, Gf64 b);
Gf64 mul(Gf64 a, Gf64 b);
/// Subfield action: each coefficient byte multiplied by `s`.
Gf64 scale(Gf64 a, gf::FieldElement s);

/// Precomputed "multiply by point" tables: 8 x 256 words.
class PointMultiplier {
 public:
  explicit PointMultiplier(Gf64 point);
  [[nodiscard]] Gf64 point() const { return point_; }
  [[nodiscard]] Gf64 times(Gf64 a) const {
    std::uint64_t r = 0;
    for (unsigned j = 0; j < 8; ++j) r ^= table_[j][a.coefficient(j)];
    return Gf64(r);
  }

 private:
  Gf64 point_;
  std::array<std::array<std::uint64_t, 256>, 8> table_{};
};

/// The network-wide evaluation point, fixed at genesis.
class FingerprintParams {
 public:
  /// Throws ParameterError for the zero point.
  explicit FingerprintParams(Gf64 point);
  /// Derives the point from the genesis hash.
  static FingerprintParams from_genesis(const Hash256& genesis_hash);

  [[nodiscard]] Gf64 point() const { return multiplier_->point(); }
  [[nodiscard]] const PointMultiplier& multiplier() const { return *multiplier_; }

 private:
  std::shared_ptr<const PointMultiplier> multiplier_;
};

struct Fingerprint {
  Gf64 value;
  Gf64 point;

  bool operator==(const Fingerprint&) const = default;
  /// 8-byte big-endian value.
  [[nodiscard]] std::array<std::uint8_t, 8> to_bytes() const;
};

/// Reads 8 bytes big-endian as a field element.
Gf64 load_block(std::span<const std::uint8_t, 8> block);

/// Horner evaluation of the chunk, taken as 8-byte coefficients with the
/// first block highest. Throws ShapeError unless the length is a multiple of 8.
Fingerprint hf_compute(ByteView chunk, const FingerprintParams& params);

/// Applies the generator to the K data fingerprints, giving the n chunk
/// fingerprints. Throws ParameterError on mixed points, ShapeError on count.
std::vector<Fingerprint> hf_encode(std::span<const Fingerprint> data_fingerprints,
                                   const rs::GeneratorMatrix& gen);

bool hf_verify(ByteView chunk, const Fingerprint& expected, const FingerprintParams& params);

}  // namespace bftdsn::hf
