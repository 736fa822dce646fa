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

#include "bftdsn/vote.hpp"

namespace bftdsn::bft {

namespace {

void write_vote_fields(ByteWriter& w, Height h, Round r, VoteType t,
                       const std::optional<Hash256>& block) {
  w.u64(h).u32(r).u8(static_cast<std::uint8_t>(t)).boolean(block.has_value());
  w.hash(block.value_or(Hash256{}));
}

}  // namespace

Bytes Vote::sign_bytes() const {
  ByteWriter w(80);
  w.raw(as_view("bftdsn/vote/1"));
  write_vote_fields(w, height, round, type, block);
  return std::move(w).take();
}

Bytes Proposal::sign_bytes() const {
  ByteWriter w(80);
  w.raw(as_view("bftdsn/proposal/1"));
  w.u64(height).u32(round).hash(block).u32(static_cast<std::uint32_t>(valid_round));
  return std::move(w).take();
}

Bytes precommit_sign_bytes(Height height, Round round, const Hash256& block) {
  Vote v;
  v.height = height;
  v.round = round;
  v.type = VoteType::kPrecommit;
  v.block = block;
  return v.sign_bytes();
}

Bytes sign_statement(const crypto::KeyPair& key, ByteView sign_bytes) {
  return crypto::sign(key, crypto::sha256(sign_bytes).view());
}

bool verify_statement(crypto::VerificationCache* cache, crypto::SecurityLevel level,
                      ByteView public_key, ByteView sign_bytes, ByteView signature) {
  return crypto::verify_cached(cache, level, public_key, crypto::sha256(sign_bytes).view(),
                               signature);
}

void encode_vote(ByteWriter& w, const Vote& v) {
  w.u8(1);
  write_vote_fields(w, v.height, v.round, v.type, v.block);
  w.u32(v.voter).blob(as_view(v.signature));
}

Vote decode_vote(ByteReader& r) {
  if (r.u8() != 1) throw ParseError("unknown vote version");
  Vote v;
  v.height = r.u64();
  v.round = r.u32();
  std::uint8_t t = r.u8();
  if (t != 1 && t != 2) throw ParseError("unknown vote type");
  v.type = static_cast<VoteType>(t);
  bool has = r.boolean();
  Hash256 b = r.hash();
  if (has) v.block = b;
  v.voter = r.u32();
  v.signature = r.blob();
  return v;
}

void encode_proposal(ByteWriter& w, const Proposal& p) {
  w.u8(1).u64(p.height).u32(p.round).hash(p.block).u32(static_cast<std::uint32_t>(p.valid_round));
  w.u32(p.proposer).blob(as_view(p.signature));
}

Proposal decode_proposal(ByteReader& r) {
  if (r.u8() != 1) throw ParseError("unknown proposal version");
  Proposal p;
  p.height = r.u64();
  p.round = r.u32();
  p.block = r.hash();
  p.valid_round = static_cast<std::int32_t>(r.u32());
  p.proposer = r.u32();
  p.signature = r.blob();
  return p;
}

}  // namespace bftdsn::bft
