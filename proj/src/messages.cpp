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

#include "bftdsn/messages.hpp"

#include "bftdsn/crypto.hpp"

namespace bftdsn::protocol {

MsgType type_of(const Message& m) { return static_cast<MsgType>(m.index() + 1); }

bool is_bulk(const Message& m) {
  return std::holds_alternative<FileTransferMsg>(m) || std::holds_alternative<ChunkMsg>(m) ||
         std::holds_alternative<ChunkResponseMsg>(m) || std::holds_alternative<GetResponseMsg>(m);
}

Bytes chunk_statement(const Hash256& file_id, std::uint32_t index, std::uint64_t fingerprint) {
  ByteWriter w(64);
  w.raw(as_view("bftdsn/chunkfp/1")).hash(file_id).u32(index).u64(fingerprint);
  return std::move(w).take();
}

namespace {

void put(ByteWriter& w, const ProposalMsg& m) {
  bft::encode_proposal(w, m.proposal);
  w.blob(as_view(m.block.encode()));
}
void put(ByteWriter& w, const VoteMsg& m) { bft::encode_vote(w, m.vote); }
void put(ByteWriter& w, const CommitMsg& m) { w.blob(as_view(m.committed.encode())); }
void put(ByteWriter& w, const TxMsg& m) { ledger::encode_tx(w, m.tx); }
void put(ByteWriter& w, const FileTransferMsg& m) {
  w.u64(m.session).hash(m.file_id).blob(as_view(m.data));
}
void put(ByteWriter& w, const ChunkMsg& m) {
  w.u64(m.session).u32(m.client).blob(as_view(m.attestation.encode()));
}
void put(ByteWriter& w, const PartialsMsg& m) {
  w.hash(m.file_id).u32(m.signer).u32(static_cast<std::uint32_t>(m.entries.size()));
  for (const PartialEntry& e : m.entries) w.u32(e.index).u64(e.fingerprint).blob(as_view(e.tag));
}
void put(ByteWriter& w, const AckMsg& m) {
  w.u64(m.session).hash(m.file_id).u32(m.index).boolean(m.stored).blob(as_view(m.evidence));
}
void put(ByteWriter& w, const ChunkRequestMsg& m) {
  w.u64(m.job).hash(m.file_id).u32(static_cast<std::uint32_t>(m.indices.size()));
  for (std::uint32_t i : m.indices) w.u32(i);
}
void put(ByteWriter& w, const ChunkResponseMsg& m) {
  w.u64(m.job).hash(m.file_id).u32(m.index).blob(as_view(m.payload)).u64(m.fingerprint);
  wts::encode_aggregate(w, m.aggregate);
}
void put(ByteWriter& w, const GetRequestMsg& m) { w.u64(m.session).hash(m.file_id); }
void put(ByteWriter& w, const GetResponseMsg& m) {
  w.u64(m.session).hash(m.file_id).boolean(m.ok).blob(as_view(m.data));
}

std::uint32_t bounded_count(ByteReader& r, std::uint32_t max) {
  std::uint32_t n = r.u32();
  if (n > max) throw ParseError("element count implausible");
  return n;
}

Message take(ByteReader& r, MsgType t) {
  switch (t) {
    case MsgType::kProposal: {
      ProposalMsg m;
      m.proposal = bft::decode_proposal(r);
      Bytes b = r.blob();
      m.block = ledger::Block::decode(as_view(b));
      return m;
    }
    case MsgType::kVote:
      return VoteMsg{bft::decode_vote(r)};
    case MsgType::kCommit: {
      Bytes b = r.blob();
      return CommitMsg{ledger::CommittedBlock::decode(as_view(b))};
    }
    case MsgType::kTx:
      return TxMsg{ledger::decode_tx(r)};
    case MsgType::kFileTransfer: {
      FileTransferMsg m;
      m.session = r.u64();
      m.file_id = r.hash();
      m.data = r.blob();
      return m;
    }
    case MsgType::kChunk: {
      ChunkMsg m;
      m.session = r.u64();
      m.client = r.u32();
      Bytes b = r.blob();
      m.attestation = ledger::ChunkAttestation::decode(as_view(b));
      return m;
    }
    case MsgType::kPartials: {
      PartialsMsg m;
      m.file_id = r.hash();
      m.signer = r.u32();
      std::uint32_t n = bounded_count(r, 1u << 16);
      m.entries.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        PartialEntry e;
        e.index = r.u32();
        e.fingerprint = r.u64();
        e.tag = r.blob();
        m.entries.push_back(std::move(e));
      }
      return m;
    }
    case MsgType::kAck: {
      AckMsg m;
      m.session = r.u64();
      m.file_id = r.hash();
      m.index = r.u32();
      m.stored = r.boolean();
      m.evidence = r.blob();
      return m;
    }
    case MsgType::kChunkRequest: {
      ChunkRequestMsg m;
      m.job = r.u64();
      m.file_id = r.hash();
      std::uint32_t n = bounded_count(r, 1u << 16);
      for (std::uint32_t i = 0; i < n; ++i) m.indices.push_back(r.u32());
      return m;
    }
    case MsgType::kChunkResponse: {
      ChunkResponseMsg m;
      m.job = r.u64();
      m.file_id = r.hash();
      m.index = r.u32();
      m.payload = r.blob();
      m.fingerprint = r.u64();
      Hash256 digest = crypto::sha256(as_view(chunk_statement(m.file_id, m.index, m.fingerprint)));
      m.aggregate = wts::decode_aggregate(r, digest);
      return m;
    }
    case MsgType::kGetRequest: {
      GetRequestMsg m;
      m.session = r.u64();
      m.file_id = r.hash();
      return m;
    }
    case MsgType::kGetResponse: {
      GetResponseMsg m;
      m.session = r.u64();
      m.file_id = r.hash();
      m.ok = r.boolean();
      m.data = r.blob();
      return m;
    }
  }
  throw ParseError("unknown message type");
}

}  // namespace

Bytes encode_message(const Message& m) {
  ByteWriter w;
  w.u8(kWireVersion).u8(static_cast<std::uint8_t>(type_of(m)));
  std::visit([&](const auto& x) { put(w, x); }, m);
  return std::move(w).take();
}

Message decode_message(ByteView bytes) {
  ByteReader r(bytes);
  if (r.u8() != kWireVersion) throw ParseError("unsupported wire version");
  std::uint8_t t = r.u8();
  if (t < 1 || t > 12) throw ParseError("unknown message type");
  Message m = take(r, static_cast<MsgType>(t));
  r.expect_done();
  return m;
}

}  // namespace bftdsn::protocol
