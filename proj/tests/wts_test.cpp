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

#include "bftdsn/wts.hpp"

namespace bftdsn {
namespace {

Hash256 seed_of(std::uint8_t b) { return crypto::sha256(as_view(Bytes{b})); }

Bytes msg(const char* s) { return Bytes(s, s + std::char_traits<char>::length(s)); }

TEST(Wts, SetupLevels) {
  EXPECT_EQ(wts::wts_setup(128, seed_of(1)).level, crypto::SecurityLevel::k128);
  EXPECT_EQ(wts::wts_setup(256, seed_of(1)).level, crypto::SecurityLevel::k256);
  EXPECT_THROW(wts::wts_setup(192, seed_of(1)), ParameterError);
  EXPECT_EQ(wts::wts_setup(128, seed_of(1)), wts::wts_setup(128, seed_of(1)));
}

TEST(Wts, KeygenErrors) {
  auto pp = wts::wts_setup(128, seed_of(2));
  std::vector<std::uint64_t> w = {1, 2};
  EXPECT_THROW(wts::wts_keygen(pp, 3, w, nullptr), ParameterError);
  EXPECT_THROW(wts::wts_keygen(pp, 0, std::vector<std::uint64_t>{}, nullptr), ParameterError);
  std::vector<std::uint64_t> zero = {1, 0};
  EXPECT_THROW(wts::wts_keygen(pp, 2, zero, nullptr), ParameterError);
}

TEST(Wts, SingleSigner) {
  auto pp = wts::wts_setup(128, seed_of(3));
  std::vector<std::uint64_t> w = {5};
  auto keys = wts::wts_keygen(pp, 1, w);
  Bytes m = msg("hello");
  auto part = wts::wts_psign(m, keys.signing_keys[0]);
  std::vector<wts::PartialSignature> parts = {part};
  auto agg = wts::wts_aggregate(parts, keys.ak);
  EXPECT_TRUE(wts::wts_verify(m, agg.signature, keys.vk, 5));
  EXPECT_FALSE(wts::wts_verify(m, agg.signature, keys.vk, 6));
}

TEST(Wts, ExampleFourSigners) {
  auto pp = wts::wts_setup(128, seed_of(4));
  std::vector<std::uint64_t> w = {3, 1, 1, 2};
  auto keys = wts::wts_keygen(pp, 4, w);
  Bytes m = msg("m");
  std::vector<wts::PartialSignature> parts = {wts::wts_psign(m, keys.signing_keys[0]),
                                              wts::wts_psign(m, keys.signing_keys[3])};
  auto agg = wts::wts_aggregate(parts, keys.ak).signature;
  EXPECT_TRUE(wts::wts_verify(m, agg, keys.vk, 5));
  EXPECT_FALSE(wts::wts_verify(m, agg, keys.vk, 6));
  EXPECT_EQ(wts::effective_weight(agg, keys.vk), 5u);
}

// Property: verify(m, agg(S), vk, t) iff sum of weights in S >= t, checked
// for every subset S and every threshold up to the total, nn <= 6.
TEST(Wts, ExhaustiveSubsetThresholds) {
  std::mt19937_64 rng(5);
  auto cache = std::make_shared<crypto::VerificationCache>();
  for (std::size_t nn = 1; nn <= 6; ++nn) {
    auto pp = wts::wts_setup(128, seed_of(static_cast<std::uint8_t>(10 + nn)));
    std::vector<std::uint64_t> w(nn);
    for (auto& x : w) x = 1 + rng() % 5;
    auto keys = wts::wts_keygen(pp, nn, w, cache);
    Bytes m = msg("subset property");
    std::vector<wts::PartialSignature> all;
    for (const auto& sk : keys.signing_keys) all.push_back(wts::wts_psign(m, sk));
    for (unsigned mask = 0; mask < (1u << nn); ++mask) {
      std::vector<wts::PartialSignature> subset;
      std::uint64_t weight = 0;
      for (std::size_t i = 0; i < nn; ++i) {
        if (mask & (1u << i)) {
          subset.push_back(all[i]);
          weight += w[i];
        }
      }
      auto agg = wts::wts_aggregate(subset, keys.ak).signature;
      for (std::uint64_t t = 0; t <= keys.vk.total_weight() + 1; ++t)
        ASSERT_EQ(wts::wts_verify(m, agg, keys.vk, t), weight >= t)
            << "nn=" << nn << " mask=" << mask << " t=" << t;
    }
  }
}

TEST(Wts, DeterministicPartials) {
  auto pp = wts::wts_setup(128, seed_of(6));
  std::vector<std::uint64_t> w = {1, 1};
  auto k1 = wts::wts_keygen(pp, 2, w);
  auto k2 = wts::wts_keygen(pp, 2, w);
  Bytes m = msg("det");
  EXPECT_EQ(wts::wts_psign(m, k1.signing_keys[1]), wts::wts_psign(m, k2.signing_keys[1]));
}

TEST(Wts, RejectsForgeriesAndMixups) {
  auto pp = wts::wts_setup(128, seed_of(7));
  std::vector<std::uint64_t> w = {2, 2, 2};
  auto keys = wts::wts_keygen(pp, 3, w);
  Bytes m = msg("real"), other = msg("other");
  auto p0 = wts::wts_psign(m, keys.signing_keys[0]);
  auto p1 = wts::wts_psign(m, keys.signing_keys[1]);
  auto q2 = wts::wts_psign(other, keys.signing_keys[2]);

  // A partial over another message is screened out when the digest is pinned.
  std::vector<wts::PartialSignature> parts = {p0, p1, q2};
  auto res = wts::wts_aggregate(parts, keys.ak, crypto::sha256(m));
  EXPECT_EQ(res.signature.parts.size(), 2u);
  ASSERT_EQ(res.rejected.size(), 1u);
  EXPECT_EQ(res.rejected[0], 2u);

  // Tampered tag.
  auto bad = p1;
  bad.tag[3] ^= 1;
  EXPECT_FALSE(wts::partial_valid(bad, keys.ak));
  wts::AggregateSignature forged{{p0, bad}};
  EXPECT_FALSE(wts::wts_verify(m, forged, keys.vk, 2));

  // Relabelled signer.
  auto relabel = p1;
  relabel.signer = 2;
  EXPECT_FALSE(wts::partial_valid(relabel, keys.ak));

  // Duplicate signer cannot double-count weight.
  wts::AggregateSignature dup{{p0, p0}};
  EXPECT_FALSE(wts::wts_verify(m, dup, keys.vk, 4));
  EXPECT_EQ(wts::effective_weight(dup, keys.vk), 2u);
  std::vector<wts::PartialSignature> dup_parts = {p0, p0, p1};
  EXPECT_EQ(wts::wts_aggregate(dup_parts, keys.ak).signature.parts.size(), 2u);

  // Verified against a different message.
  wts::AggregateSignature good{{p0, p1}};
  EXPECT_TRUE(wts::wts_verify(m, good, keys.vk, 4));
  EXPECT_FALSE(wts::wts_verify(other, good, keys.vk, 1));

  // Out of range signer id.
  auto ghost = p0;
  ghost.signer = 99;
  EXPECT_FALSE(wts::partial_valid(ghost, keys.ak));
}

TEST(Wts, ReweightedKeepsSignatures) {
  auto pp = wts::wts_setup(128, seed_of(8));
  std::vector<std::uint64_t> w = {1, 1, 1};
  auto keys = wts::wts_keygen(pp, 3, w);
  Bytes m = msg("rw");
  wts::AggregateSignature agg{{wts::wts_psign(m, keys.signing_keys[0])}};
  auto vk2 = keys.vk.reweighted({4, 0, 1});
  EXPECT_EQ(vk2.total_weight(), 5u);
  EXPECT_TRUE(wts::wts_verify(m, agg, vk2, 4));
  EXPECT_FALSE(wts::wts_verify(m, agg, keys.vk, 2));
}

TEST(Wts, WireRoundTrip) {
  auto pp = wts::wts_setup(128, seed_of(9));
  std::vector<std::uint64_t> w = {1, 2, 3};
  auto keys = wts::wts_keygen(pp, 3, w);
  Bytes m = msg("wire");
  wts::AggregateSignature agg{{wts::wts_psign(m, keys.signing_keys[2]),
                               wts::wts_psign(m, keys.signing_keys[0])}};
  ByteWriter wr;
  wts::encode_aggregate(wr, agg);
  ByteReader rd(as_view(wr.bytes()));
  auto back = wts::decode_aggregate(rd, crypto::sha256(m));
  rd.expect_done();
  EXPECT_EQ(back, agg);
  EXPECT_TRUE(wts::wts_verify(m, back, keys.vk, 4));
}

TEST(Wts, HighSecurityLevel) {
  auto pp = wts::wts_setup(256, seed_of(10));
  std::vector<std::uint64_t> w = {1, 2, 3};
  auto keys = wts::wts_keygen(pp, 3, w);
  Bytes m = msg("ed448");
  std::vector<wts::PartialSignature> parts = {wts::wts_psign(m, keys.signing_keys[1]),
                                              wts::wts_psign(m, keys.signing_keys[2])};
  auto agg = wts::wts_aggregate(parts, keys.ak).signature;
  EXPECT_TRUE(wts::wts_verify(m, agg, keys.vk, 5));
  EXPECT_FALSE(wts::wts_verify(m, agg, keys.vk, 6));
  auto bad = agg;
  bad.parts[0].tag[0] ^= 0x80;
  EXPECT_FALSE(wts::wts_verify(m, bad, keys.vk, 1));
}

TEST(Wts, CacheHitsDoNotChangeAnswers) {
  auto cache = std::make_shared<crypto::VerificationCache>();
  auto pp = wts::wts_setup(128, seed_of(11));
  std::vector<std::uint64_t> w = {1, 1};
  auto keys = wts::wts_keygen(pp, 2, w, cache);
  Bytes m = msg("cache");
  wts::AggregateSignature agg{{wts::wts_psign(m, keys.signing_keys[0])}};
  auto bad = agg;
  bad.parts[0].tag[1] ^= 1;
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(wts::wts_verify(m, agg, keys.vk, 1));
    EXPECT_FALSE(wts::wts_verify(m, bad, keys.vk, 1));
  }
  EXPECT_GT(cache->hits(), 0u);
}

}  // namespace
}  // namespace bftdsn
