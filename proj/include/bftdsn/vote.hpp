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

// Consensus messages shared by the ledger (as fault evidence and commit
// certificates) and the consensus core.

#include <cstdint>
#include <optional>

#include "bftdsn/bytes.hpp"
#include "bftdsn/crypto.hpp"

namespace bftdsn::bft {

using Height = std::uint64_t;
using Round = std::uint32_t;
using NodeId = std::uint32_t;

enum class VoteType : std::uint8_t { kPrevote = 1, kPrecommit = 2 };

struct Vote {
  Height height = 0;
  Round round = 0;
  VoteType type = VoteType::kPrevote;
  std::optional<Hash256> block;  // nullopt is a nil vote
  NodeId voter = 0;
  Bytes signature;

  bool operator==(const Vote&) const = default;

  /// "bftdsn/vote/1" || height || round || type || has_block || block
  [[nodiscard]] Bytes sign_bytes() const;
  /// Same height, round and type.
  [[nodiscard]] bool same_slot(const Vote& other) const {
    return height == other.height && round == other.round && type == other.type;
  }
};

struct Proposal {
  Height height = 0;
  Round round = 0;
  Hash256 block;
  std::int32_t valid_round = -1;
  NodeId proposer = 0;
  Bytes signature;

  bool operator==(const Proposal&) const = default;

  /// "bftdsn/proposal/1" || height || round || block || valid_round
  [[nodiscard]] Bytes sign_bytes() const;
};

/// Sign bytes of a precommit for `block`; commit certificates aggregate these.
Bytes precommit_sign_bytes(Height height, Round round, const Hash256& block);

/// The signature scheme shared with the weighted threshold signatures: a
/// signature over H(sign_bytes).
Bytes sign_statement(const crypto::KeyPair& key, ByteView sign_bytes);
bool verify_statement(crypto::VerificationCache* cache, crypto::SecurityLevel level,
                      ByteView public_key, ByteView sign_bytes, ByteView signature);

/// Wire form: the signed fields in sign_bytes order, then voter and blob(signature).
void encode_vote(ByteWriter& w, const Vote& v);
Vote decode_vote(ByteReader& r);
void encode_proposal(ByteWriter& w, const Proposal& p);
Proposal decode_proposal(ByteReader& r);

}  // namespace bftdsn::bft
