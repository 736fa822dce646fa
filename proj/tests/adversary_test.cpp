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

#include "bftdsn/adversary.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "bftdsn/error.hpp"

namespace bftdsn::adversary {
namespace {

using protocol::MinerId;

ledger::FileManifest manifest(std::size_t k, std::size_t n, std::uint8_t tag) {
  ledger::FileManifest m;
  m.id.bytes[0] = tag;
  m.fingerprints.assign(k, 0);
  m.placement.assign(n, 0);
  m.chunk_size = 64;
  return m;
}

TEST(Strategy, NamesRoundTrip) {
  EXPECT_EQ(parse_strategy("none"), Strategy::kNone);
  for (Strategy s : attack_strategies()) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_EQ(attack_strategies().size(), 9u);
  EXPECT_THROW(parse_strategy("Tamper-Chunk"), ParameterError);
  EXPECT_THROW(parse_strategy(""), ParameterError);
}

TEST(ChooseCorrupted, StaysWithinBudget) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint64_t> sectors(1 + rng() % 20);
    for (auto& s : sectors) s = rng() % 4;
    const std::uint64_t n = std::accumulate(sectors.begin(), sectors.end(), std::uint64_t{0});
    const double frac = static_cast<double>(rng() % 1001) / 1000.0;
    auto bad = choose_corrupted(sectors, frac, rng());
    std::uint64_t used = 0;
    for (MinerId m : bad) {
      ASSERT_LT(m, sectors.size());
      EXPECT_GT(sectors[m], 0u);
      used += sectors[m];
    }
    EXPECT_LE(static_cast<double>(used), frac * static_cast<double>(n) + 1e-9);
  }
}

TEST(ChooseCorrupted, ExactFractionsAndDeterminism) {
  std::vector<std::uint64_t> ones(10, 1);
  EXPECT_EQ(choose_corrupted(ones, 0.3, 1).size(), 3u);
  EXPECT_EQ(choose_corrupted(ones, 0.33, 1).size(), 3u);
  EXPECT_TRUE(choose_corrupted(ones, 0.0, 1).empty());
  EXPECT_EQ(choose_corrupted(ones, 1.0, 1).size(), 10u);
  EXPECT_EQ(choose_corrupted(ones, 0.2, 9), choose_corrupted(ones, 0.2, 9));
  EXPECT_THROW(choose_corrupted(ones, -0.1, 1), ParameterError);
  EXPECT_THROW(choose_corrupted(ones, 1.5, 1), ParameterError);
}

TEST(Behaviors, OnlyNoneIsHonest) {
  auto c = std::make_shared<Coalition>();
  EXPECT_TRUE(make_behavior(Strategy::kNone, 0, 0, c, 1)->honest());
  for (Strategy s : attack_strategies()) EXPECT_FALSE(make_behavior(s, 0, 0, c, 1)->honest());
  EXPECT_TRUE(make_behavior(Strategy::kEquivocate, 0, 0, c, 1)->equivocate());
}

TEST(Behaviors, TamperAltersSignatureAndPayload) {
  auto b = make_behavior(Strategy::kTamperChunk, 1, 0, std::make_shared<Coalition>(), 1);
  EXPECT_NE(b->fingerprint_to_sign(Hash256{}, 1, 42), 42u);
  Bytes stored(32, 7);
  auto served = b->serve_chunk(manifest(3, 5, 1), 1, &stored);
  ASSERT_TRUE(served);
  EXPECT_EQ(served->size(), stored.size());
  EXPECT_NE(*served, stored);
}

TEST(Behaviors, DropServesNothing) {
  auto b = make_behavior(Strategy::kDropChunk, 1, 0, std::make_shared<Coalition>(), 1);
  Bytes stored(8, 1);
  EXPECT_FALSE(b->serve_chunk(manifest(3, 5, 1), 1, &stored));
}

TEST(Behaviors, BadEncoderTouchesParityOnly) {
  auto b = make_behavior(Strategy::kBadEncoder, 1, 0, std::make_shared<Coalition>(), 1);
  rs::ChunkSet chunks;
  for (std::size_t i = 1; i <= 5; ++i) chunks.push_back({i, Bytes(4, 0)});
  rs::ChunkSet before = chunks;
  b->alter_encoding(manifest(3, 5, 1), chunks);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(chunks[i], before[i]);
  for (std::size_t i = 3; i < 5; ++i) EXPECT_NE(chunks[i], before[i]);
}

TEST(Behaviors, BadRetrievalNeverServes) {
  auto b = make_behavior(Strategy::kBadRetrieval, 1, 0, std::make_shared<Coalition>(), 3);
  int stall = 0, garbage = 0;
  for (int i = 0; i < 200; ++i) {
    auto a = b->on_get_request(Hash256{});
    ASSERT_NE(a, protocol::GetAction::kServe);
    (a == protocol::GetAction::kStall ? stall : garbage)++;
  }
  EXPECT_GT(stall, 0);
  EXPECT_GT(garbage, 0);
}

TEST(Behaviors, GenerationCoalitionKeepsFewerThanK) {
  auto c = std::make_shared<Coalition>();
  std::vector<std::shared_ptr<protocol::Behavior>> members;
  for (MinerId m = 0; m < 6; ++m) members.push_back(make_behavior(Strategy::kGenerationAttack, m, m, c, 1));
  const auto m = manifest(4, 10, 9);
  int kept = 0;
  for (std::uint32_t i = 1; i <= 10; ++i)
    if (members[i % members.size()]->keep_chunk(m, i)) ++kept;
  EXPECT_EQ(kept, 3);
  EXPECT_EQ(c->vault.at(m.id), 3u);
  auto faked = members[0]->serve_chunk(m, 1, nullptr);
  ASSERT_TRUE(faked);
  EXPECT_EQ(faked->size(), m.chunk_size);
}

TEST(Behaviors, CombinedRotatesRoles) {
  auto c = std::make_shared<Coalition>();
  // Rank 6 is the equivocator in the rotation; rank 7 wraps to tampering.
  EXPECT_TRUE(make_behavior(Strategy::kCombined, 6, 6, c, 1)->equivocate());
  EXPECT_FALSE(make_behavior(Strategy::kCombined, 7, 7, c, 1)->equivocate());
  EXPECT_NE(make_behavior(Strategy::kCombined, 7, 7, c, 1)->fingerprint_to_sign(Hash256{}, 1, 5), 5u);
}

}  // namespace
}  // namespace bftdsn::adversary
