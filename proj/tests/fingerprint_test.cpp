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

#include <gtest/gtest.h>

#include <random>
#include <unordered_set>

#include "bftdsn/crypto.hpp"
#include "bftdsn/fingerprint.hpp"
#include "test_util.hpp"

namespace bftdsn {
namespace {

using hf::Gf64;

std::uint8_t byte_mul(std::uint8_t a, std::uint8_t b) {
  unsigned acc = 0;
  for (int i = 0; i < 8; ++i)
    if (b & (1u << i)) acc ^= static_cast<unsigned>(a) << i;
  for (int bit = 14; bit >= 8; --bit)
    if (acc & (1u << bit)) acc ^= 0x11Du << (bit - 8);
  return static_cast<std::uint8_t>(acc);
}

// Polynomials over GF(2^8), low coefficient first.
using Poly = std::vector<std::uint8_t>;

void trim(Poly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] ^= byte_mul(a[i], b[j]);
  trim(r);
  return r;
}

std::uint8_t byte_inv(std::uint8_t a) {
  for (unsigned x = 1; x < 256; ++x)
    if (byte_mul(a, static_cast<std::uint8_t>(x)) == 1) return static_cast<std::uint8_t>(x);
  return 0;
}

Poly poly_mod(Poly a, const Poly& m) {
  trim(a);
  const std::uint8_t lead_inv = byte_inv(m.back());
  while (a.size() >= m.size()) {
    std::uint8_t f = byte_mul(a.back(), lead_inv);
    std::size_t shift = a.size() - m.size();
    for (std::size_t i = 0; i < m.size(); ++i) a[shift + i] ^= byte_mul(f, m[i]);
    trim(a);
  }
  return a;
}

Poly poly_gcd(Poly a, Poly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly r = poly_mod(a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

Poly modulus() {
  Poly m(hf::kExtensionPolynomial.begin(), hf::kExtensionPolynomial.end());
  m.push_back(1);
  return m;
}

// Schoolbook product of the two words viewed as polynomials, reduced by the
// modulus; independent of the shift-and-reduce code in the library.
Gf64 oracle_mul(Gf64 a, Gf64 b) {
  Poly pa(8), pb(8);
  for (unsigned j = 0; j < 8; ++j) {
    pa[j] = a.coefficient(j);
    pb[j] = b.coefficient(j);
  }
  trim(pa);
  trim(pb);
  Poly r = poly_mod(poly_mul(pa, pb), modulus());
  std::uint64_t v = 0;
  for (std::size_t j = 0; j < r.size(); ++j) v |= static_cast<std::uint64_t>(r[j]) << (8 * j);
  return Gf64(v);
}

Gf64 random_element(std::mt19937_64& rng) { return Gf64(rng()); }

TEST(ExtensionField, ModulusIsIrreducible) {
  // Rabin: degree-8 f over GF(q) is irreducible iff y^(q^8) = y mod f and
  // gcd(y^(q^4) - y, f) = 1. Raising to the q-th power is 8 squarings.
  const Poly m = modulus();
  auto frobenius = [&](Poly p) {
    for (int i = 0; i < 8; ++i) p = poly_mod(poly_mul(p, p), m);
    return p;
  };
  Poly y = {0, 1};
  Poly p = y;
  Poly at4;
  for (int k = 1; k <= 8; ++k) {
    p = frobenius(p);
    if (k == 4) at4 = p;
  }
  EXPECT_EQ(p, y);
  Poly diff = at4;
  diff.resize(std::max<std::size_t>(diff.size(), 2), 0);
  diff[1] ^= 1;
  trim(diff);
  Poly g = poly_gcd(m, diff);
  EXPECT_EQ(g.size(), 1u);
}

TEST(ExtensionField, MulMatchesOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5000; ++i) {
    Gf64 a = random_element(rng), b = random_element(rng);
    ASSERT_EQ(hf::mul(a, b), oracle_mul(a, b));
  }
  EXPECT_EQ(hf::mul(Gf64(1), Gf64(0xDEADBEEF)), Gf64(0xDEADBEEF));
}

TEST(ExtensionField, PointMultiplierAgreesWithMul) {
  std::mt19937_64 rng(2);
  Gf64 point = random_element(rng);
  hf::PointMultiplier pm(point);
  for (int i = 0; i < 5000; ++i) {
    Gf64 a = random_element(rng);
    ASSERT_EQ(pm.times(a), hf::mul(a, point));
  }
}

TEST(ExtensionField, ScaleIsSubfieldMultiplication) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    Gf64 a = random_element(rng);
    std::uint8_t s = static_cast<std::uint8_t>(rng());
    ASSERT_EQ(hf::scale(a, gf::FieldElement(s)), hf::mul(a, Gf64(s)));
  }
}

TEST(ExtensionField, NonzeroElementsAreInvertible) {
  // a^(2^64 - 1) = 1 for every nonzero a in a field of that order.
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    Gf64 a = random_element(rng);
    if (a.value == 0) continue;
    Gf64 acc(1), base = a;
    std::uint64_t e = ~std::uint64_t{0};
    while (e) {
      if (e & 1) acc = hf::mul(acc, base);
      base = hf::mul(base, base);
      e >>= 1;
    }
    ASSERT_EQ(acc, Gf64(1));
  }
}

TEST(Fingerprint, TwoBlockHorner) {
  hf::FingerprintParams params(Gf64(0x0102030405060708ull));
  Bytes chunk = {0, 0, 0, 0, 0, 0, 0, 5, 0, 0, 0, 0, 0, 0, 0, 9};
  Gf64 expect = hf::add(oracle_mul(Gf64(5), params.point()), Gf64(9));
  EXPECT_EQ(hf::hf_compute(chunk, params).value, expect);
}

TEST(Fingerprint, BigEndianBlocks) {
  Bytes block = {0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88};
  EXPECT_EQ(hf::load_block(std::span<const std::uint8_t, 8>(block.data(), 8)),
            Gf64(0x1122334455667788ull));
  hf::Fingerprint fp{Gf64(0x1122334455667788ull), Gf64(1)};
  auto b = fp.to_bytes();
  EXPECT_TRUE(std::equal(b.begin(), b.end(), block.begin()));
}

TEST(Fingerprint, ShapeAndParameterErrors) {
  hf::FingerprintParams params(Gf64(7));
  Bytes odd(12);
  EXPECT_THROW(hf::hf_compute(odd, params), ShapeError);
  EXPECT_THROW(hf::FingerprintParams(Gf64(0)), ParameterError);
  auto g = rs::build_generator(3, 2);
  std::vector<hf::Fingerprint> two(2, hf::Fingerprint{Gf64(1), Gf64(7)});
  EXPECT_THROW(hf::hf_encode(two, g), ShapeError);
  std::vector<hf::Fingerprint> mixed = {{Gf64(1), Gf64(7)}, {Gf64(1), Gf64(7)}, {Gf64(1), Gf64(8)}};
  EXPECT_THROW(hf::hf_encode(mixed, g), ParameterError);
}

TEST(Fingerprint, GenesisPointIsDeterministic) {
  Hash256 genesis = crypto::sha256(as_view(Bytes{1, 2, 3}));
  auto a = hf::FingerprintParams::from_genesis(genesis);
  auto b = hf::FingerprintParams::from_genesis(genesis);
  EXPECT_EQ(a.point(), b.point());
  EXPECT_NE(a.point().value, 0u);
}

TEST(Fingerprint, Linearity) {
  std::mt19937_64 rng(5);
  auto params = hf::FingerprintParams::from_genesis(Hash256{});
  for (int i = 0; i < 100; ++i) {
    Bytes a = random_bytes(rng, 64), b = random_bytes(rng, 64), s(64);
    for (std::size_t j = 0; j < 64; ++j) s[j] = a[j] ^ b[j];
    ASSERT_EQ(hf::hf_compute(s, params).value,
              hf::add(hf::hf_compute(a, params).value, hf::hf_compute(b, params).value));
  }
}

TEST(Fingerprint, CommutesWithEncoding) {
  std::mt19937_64 rng(6);
  auto params = hf::FingerprintParams::from_genesis(crypto::sha256(as_view(Bytes{9})));
  for (auto [k, m] : {std::pair<std::size_t, std::size_t>{1, 1}, {3, 2}, {5, 2}, {10, 4}, {27, 13}}) {
    auto g = rs::build_generator(k, m);
    auto data = random_blocks(rng, k, 8 * 37);
    std::vector<hf::Fingerprint> fps;
    for (const auto& d : data) fps.push_back(hf::hf_compute(d, params));
    auto expected = hf::hf_encode(fps, g);
    auto chunks = rs::rs_encode(data, g);
    ASSERT_EQ(expected.size(), k + m);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      EXPECT_TRUE(hf::hf_verify(chunks[i].payload, expected[i], params)) << "K=" << k << " i=" << i;
    }
  }
}

TEST(Fingerprint, DetectsTamperedChunks) {
  std::mt19937_64 rng(7);
  auto params = hf::FingerprintParams::from_genesis(Hash256{});
  for (int i = 0; i < 2000; ++i) {
    Bytes chunk = random_bytes(rng, 256);
    auto fp = hf::hf_compute(chunk, params);
    chunk[rng() % chunk.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    ASSERT_FALSE(hf::hf_verify(chunk, fp, params));
  }
}

TEST(Fingerprint, NoCollisionsAcrossRandomChunks) {
  std::mt19937_64 rng(8);
  auto params = hf::FingerprintParams::from_genesis(Hash256{});
  std::unordered_set<std::uint64_t> seen;
  for (int i = 0; i < 100000; ++i) {
    Bytes chunk = random_bytes(rng, 64);
    ASSERT_TRUE(seen.insert(hf::hf_compute(chunk, params).value.value).second);
  }
}

}  // namespace
}  // namespace bftdsn
