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

#include <algorithm>
#include <cmath>
#include <random>

#include "bftdsn/crypto.hpp"
#include "bftdsn/error.hpp"

namespace bftdsn::adversary {

using protocol::Behavior;
using protocol::GetAction;
using protocol::MinerId;

namespace {

constexpr std::pair<Strategy, std::string_view> kNames[] = {
    {Strategy::kNone, "none"},
    {Strategy::kTamperChunk, "tamper-chunk"},
    {Strategy::kDropChunk, "drop-chunk"},
    {Strategy::kBadEncoder, "bad-encoder"},
    {Strategy::kBadRetrieval, "bad-retrieval"},
    {Strategy::kSybilPledge, "sybil-pledge"},
    {Strategy::kGenerationAttack, "generation-attack"},
    {Strategy::kEquivocate, "equivocate"},
    {Strategy::kCombined, "combined"},
    {Strategy::kFuzz, "fuzz"},
};

Bytes garbage(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

class TamperChunk : public Behavior {
 public:
  bool honest() const override { return false; }
  std::uint64_t fingerprint_to_sign(const Hash256&, std::uint32_t, std::uint64_t expected) override {
    return expected ^ 0x5a5a5a5a5a5a5a5aull;
  }
  std::optional<Bytes> serve_chunk(const ledger::FileManifest&, std::uint32_t,
                                   const Bytes* stored) override {
    if (!stored || stored->empty()) return std::nullopt;
    Bytes b = *stored;
    b[b.size() / 2] ^= 0x01;
    return b;
  }
};

class DropChunk : public Behavior {
 public:
  bool honest() const override { return false; }
  std::optional<Bytes> serve_chunk(const ledger::FileManifest&, std::uint32_t, const Bytes*) override {
    return std::nullopt;
  }
};

class BadEncoder : public Behavior {
 public:
  bool honest() const override { return false; }
  void alter_encoding(const ledger::FileManifest& m, rs::ChunkSet& chunks) override {
    for (rs::Chunk& c : chunks)
      if (c.index > m.data_chunks() && !c.payload.empty()) c.payload[0] ^= 0xff;
  }
};

class BadRetrieval : public Behavior {
 public:
  explicit BadRetrieval(std::uint64_t seed) : rng_(seed) {}
  bool honest() const override { return false; }
  GetAction on_get_request(const Hash256&) override {
    return rng_() % 2 ? GetAction::kGarbage : GetAction::kStall;
  }

 private:
  std::mt19937_64 rng_;
};

/// Pledges sectors it never stores and answers their challenges with
/// fabricated proofs.
class SybilPledge : public Behavior {
 public:
  SybilPledge(std::shared_ptr<Coalition> c, std::uint64_t seed) : coalition_(std::move(c)), rng_(seed) {}
  bool honest() const override { return false; }
  void on_height(protocol::MinerNode& node) override {
    const ledger::Ledger& l = node.ledger();
    if (!pledged_) {
      pledged_ = true;
      for (std::uint32_t i = 0; i < kSybilSectors; ++i) {
        Hash256 root;
        for (auto& b : root.bytes) b = static_cast<std::uint8_t>(rng_());
        const pos::SectorId id = ledger::make_sector_id(node.id(), kSybilIndexBase + i);
        node.submit(ledger::PledgeTx{node.id(), id, root});
        fakes_.push_back(id);
        ++coalition_->sybil_pledges;
      }
      return;
    }
    if (l.height() % 5 != 0) return;
    const auto& cfg = l.config();
    for (pos::SectorId id : fakes_) {
      const ledger::SectorRecord* rec = l.sector(id);
      if (!rec || rec->status == ledger::SectorStatus::kRemoved) continue;
      pos::PosProof p;
      p.sector_id = id;
      p.epoch = rec->next_epoch;
      const std::size_t leaves = cfg.sector_size / cfg.fragment_size;
      p.leaf_index = pos::challenge_index(rec->last_digest, leaves);
      p.leaf_data = garbage(rng_, cfg.fragment_size);
      const auto depth = static_cast<std::size_t>(std::log2(static_cast<double>(leaves)));
      for (std::size_t d = 0; d < depth; ++d) {
        Hash256 h;
        for (auto& b : h.bytes) b = static_cast<std::uint8_t>(rng_());
        p.path.push_back(h);
      }
      node.submit(ledger::PosTx{p});
    }
  }

 private:
  std::shared_ptr<Coalition> coalition_;
  std::mt19937_64 rng_;
  bool pledged_ = false;
  std::vector<pos::SectorId> fakes_;
};

/// Keeps at most K - 1 chunks of any file across the coalition and fakes the
/// rest on demand.
class GenerationAttack : public Behavior {
 public:
  GenerationAttack(std::shared_ptr<Coalition> c, std::uint64_t seed) : coalition_(std::move(c)), rng_(seed) {}
  bool honest() const override { return false; }
  bool keep_chunk(const ledger::FileManifest& m, std::uint32_t) override {
    std::uint32_t& kept = coalition_->vault[m.id];
    if (kept + 1 >= m.data_chunks()) return false;
    ++kept;
    return true;
  }
  std::optional<Bytes> serve_chunk(const ledger::FileManifest& m, std::uint32_t,
                                   const Bytes* stored) override {
    if (stored) return *stored;
    return garbage(rng_, m.chunk_size);
  }

 private:
  std::shared_ptr<Coalition> coalition_;
  std::mt19937_64 rng_;
};

class Equivocate : public Behavior {
 public:
  bool honest() const override { return false; }
  bool equivocate() override { return true; }
};

/// Each hook independently acts honestly or maliciously on a seeded coin.
class Fuzz : public Behavior {
 public:
  Fuzz(std::shared_ptr<Coalition> c, std::uint64_t seed)
      : rng_(seed), tamper_(), bad_encoder_(), generation_(std::move(c), seed ^ 0x9e37) {}
  bool honest() const override { return false; }
  bool equivocate() override { return coin(); }
  std::uint64_t fingerprint_to_sign(const Hash256& f, std::uint32_t i, std::uint64_t e) override {
    return coin() ? tamper_.fingerprint_to_sign(f, i, e) : e;
  }
  void alter_encoding(const ledger::FileManifest& m, rs::ChunkSet& chunks) override {
    if (coin()) bad_encoder_.alter_encoding(m, chunks);
  }
  bool keep_chunk(const ledger::FileManifest& m, std::uint32_t i) override {
    return coin() ? generation_.keep_chunk(m, i) : true;
  }
  std::optional<Bytes> serve_chunk(const ledger::FileManifest& m, std::uint32_t i,
                                   const Bytes* stored) override {
    switch (rng_() % 4) {
      case 0:
        return std::nullopt;
      case 1:
        return tamper_.serve_chunk(m, i, stored);
      case 2:
        return generation_.serve_chunk(m, i, stored);
      default:
        return Behavior::serve_chunk(m, i, stored);
    }
  }
  GetAction on_get_request(const Hash256&) override {
    switch (rng_() % 3) {
      case 0:
        return GetAction::kStall;
      case 1:
        return GetAction::kGarbage;
      default:
        return GetAction::kServe;
    }
  }

 private:
  bool coin() { return rng_() % 2 == 0; }
  std::mt19937_64 rng_;
  TamperChunk tamper_;
  BadEncoder bad_encoder_;
  GenerationAttack generation_;
};

}  // namespace

std::string to_string(Strategy s) {
  for (const auto& [k, name] : kNames)
    if (k == s) return std::string(name);
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  throw ParameterError("unknown strategy: " + std::string(name));
}

const std::vector<Strategy>& attack_strategies() {
  static const std::vector<Strategy> all = {
      Strategy::kTamperChunk,      Strategy::kDropChunk,  Strategy::kBadEncoder,
      Strategy::kBadRetrieval,     Strategy::kSybilPledge, Strategy::kGenerationAttack,
      Strategy::kEquivocate,       Strategy::kCombined,   Strategy::kFuzz,
  };
  return all;
}

std::set<MinerId> choose_corrupted(std::span<const std::uint64_t> sectors_per_miner, double fraction,
                                   std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ParameterError("byzantine fraction outside [0, 1]");
  std::uint64_t n = 0;
  for (std::uint64_t s : sectors_per_miner) n += s;
  const auto budget = static_cast<std::uint64_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  std::vector<MinerId> order(sectors_per_miner.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<MinerId>(i);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::set<MinerId> out;
  std::uint64_t used = 0;
  for (MinerId m : order) {
    const std::uint64_t w = sectors_per_miner[m];
    if (w == 0 || used + w > budget) continue;
    used += w;
    out.insert(m);
  }
  return out;
}

std::shared_ptr<Behavior> make_behavior(Strategy strategy, MinerId id, std::size_t rank,
                                        std::shared_ptr<Coalition> coalition, std::uint64_t seed) {
  const std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (id + 1));
  switch (strategy) {
    case Strategy::kNone:
      return std::make_shared<Behavior>();
    case Strategy::kTamperChunk:
      return std::make_shared<TamperChunk>();
    case Strategy::kDropChunk:
      return std::make_shared<DropChunk>();
    case Strategy::kBadEncoder:
      return std::make_shared<BadEncoder>();
    case Strategy::kBadRetrieval:
      return std::make_shared<BadRetrieval>(s);
    case Strategy::kSybilPledge:
      return std::make_shared<SybilPledge>(std::move(coalition), s);
    case Strategy::kGenerationAttack:
      return std::make_shared<GenerationAttack>(std::move(coalition), s);
    case Strategy::kEquivocate:
      return std::make_shared<Equivocate>();
    case Strategy::kCombined: {
      static const Strategy roles[] = {Strategy::kTamperChunk,  Strategy::kDropChunk,
                                       Strategy::kBadEncoder,   Strategy::kBadRetrieval,
                                       Strategy::kSybilPledge,  Strategy::kGenerationAttack,
                                       Strategy::kEquivocate};
      return make_behavior(roles[rank % std::size(roles)], id, rank, std::move(coalition), seed);
    }
    case Strategy::kFuzz:
      return std::make_shared<Fuzz>(std::move(coalition), s);
  }
  throw ParameterError("unknown strategy");
}

}  // namespace bftdsn::adversary
