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

#include "bftdsn/fingerprint.hpp"

#include "bftdsn/crypto.hpp"

namespace bftdsn::hf {

namespace {

std::uint64_t set_coefficient(std::uint64_t v, unsigned j, std::uint8_t c) {
  v &= ~(std::uint64_t{0xFF} << (8 * j));
  return v | (std::uint64_t{c} << (8 * j));
}

}  // namespace

Gf64 add(Gf64 a, Gf64 b) { return Gf64(a.value ^ b.value); }

Gf64 mul(Gf64 a, Gf64 b) {
  const auto& t = gf::tables();
  std::array<std::uint8_t, 15> prod{};
  for (unsigned i = 0; i < 8; ++i) {
    std::uint8_t ai = a.coefficient(i);
    if (ai == 0) continue;
    const auto& row = t.mul[ai];
    for (unsigned j = 0; j < 8; ++j) prod[i + j] ^= row[b.coefficient(j)];
  }
  // y^8 = sum_j kExtensionPolynomial[j] y^j (characteristic 2).
  for (unsigned d = 14; d >= 8; --d) {
    std::uint8_t c = prod[d];
    if (c == 0) continue;
    prod[d] = 0;
    for (unsigned j = 0; j < 8; ++j) {
      if (kExtensionPolynomial[j] != 0) prod[d - 8 + j] ^= t.mul[c][kExtensionPolynomial[j]];
    }
  }
  std::uint64_t r = 0;
  for (unsigned j = 0; j < 8; ++j) r = set_coefficient(r, j, prod[j]);
  return Gf64(r);
}

Gf64 scale(Gf64 a, gf::FieldElement s) {
  const auto& row = gf::tables().mul[s.value];
  std::uint64_t r = 0;
  for (unsigned j = 0; j < 8; ++j) r = set_coefficient(r, j, row[a.coefficient(j)]);
  return Gf64(r);
}

PointMultiplier::PointMultiplier(Gf64 point) : point_(point) {
  for (unsigned j = 0; j < 8; ++j) {
    Gf64 basis_times_point = mul(Gf64(std::uint64_t{1} << (8 * j)), point);
    for (unsigned x = 0; x < 256; ++x) {
      table_[j][x] = scale(basis_times_point, gf::FieldElement(static_cast<std::uint8_t>(x))).value;
    }
  }
}

FingerprintParams::FingerprintParams(Gf64 point) {
  if (point.value == 0) throw ParameterError("fingerprint evaluation point must be nonzero");
  multiplier_ = std::make_shared<const PointMultiplier>(point);
}

FingerprintParams FingerprintParams::from_genesis(const Hash256& genesis_hash) {
  Hash256 h = crypto::sha256({as_view("bftdsn/hf-point"), genesis_hash.view()});
  std::uint64_t v = h.prefix_u64();
  return FingerprintParams(Gf64(v == 0 ? 1 : v));
}

std::array<std::uint8_t, 8> Fingerprint::to_bytes() const {
  std::array<std::uint8_t, 8> out{};
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(value.value >> (56 - 8 * i));
  return out;
}

Gf64 load_block(std::span<const std::uint8_t, 8> block) {
  std::uint64_t v = 0;
  for (std::uint8_t b : block) v = (v << 8) | b;
  return Gf64(v);
}

Fingerprint hf_compute(ByteView chunk, const FingerprintParams& params) {
  if (chunk.size() % 8 != 0) throw ShapeError("chunk length must be a multiple of 8 bytes");
  const PointMultiplier& m = params.multiplier();
  Gf64 acc;
  for (std::size_t off = 0; off < chunk.size(); off += 8) {
    acc = add(m.times(acc), load_block(chunk.subspan(off).first<8>()));
  }
  return Fingerprint{acc, params.point()};
}

std::vector<Fingerprint> hf_encode(std::span<const Fingerprint> data_fingerprints,
                                   const rs::GeneratorMatrix& gen) {
  if (data_fingerprints.size() != gen.data_chunks())
    throw ShapeError("expected exactly K data fingerprints");
  const Gf64 point = data_fingerprints.front().point;
  for (const Fingerprint& fp : data_fingerprints)
    if (!(fp.point == point)) throw ParameterError("fingerprints use different evaluation points");

  std::vector<Fingerprint> out;
  out.reserve(gen.total_chunks());
  for (std::size_t row = 0; row < gen.total_chunks(); ++row) {
    Gf64 acc;
    for (std::size_t c = 0; c < gen.data_chunks(); ++c)
      acc = add(acc, scale(data_fingerprints[c].value, gen.at(row, c)));
    out.push_back(Fingerprint{acc, point});
  }
  return out;
}

bool hf_verify(ByteView chunk, const Fingerprint& expected, const FingerprintParams& params) {
  if (chunk.size() % 8 != 0) return false;
  if (!(expected.point == params.point())) return false;
  return hf_compute(chunk, params) == expected;
}

}  // namespace bftdsn::hf
