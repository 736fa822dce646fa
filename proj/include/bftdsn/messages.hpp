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

// Wire format of every message exchanged between simulated nodes.
//
// Envelope: u8 version (1) || u8 type || body. Integers are big-endian,
// byte strings are u32-length-prefixed, hashes are 32 raw bytes.

#include <variant>
#include <vector>

#include "bftdsn/ledger.hpp"
#include "bftdsn/vote.hpp"
#include "bftdsn/wts.hpp"

namespace bftdsn::protocol {

inline constexpr std::uint8_t kWireVersion = 1;

enum class MsgType : std::uint8_t {
  kProposal = 1,
  kVote = 2,
  kCommit = 3,
  kTx = 4,
  kFileTransfer = 5,
  kChunk = 6,
  kPartials = 7,
  kAck = 8,
  kChunkRequest = 9,
  kChunkResponse = 10,
  kGetRequest = 11,
  kGetResponse = 12,
};

/// proposal || blob(block)
struct ProposalMsg {
  bft::Proposal proposal;
  ledger::Block block;
  bool operator==(const ProposalMsg&) const = default;
};

struct VoteMsg {
  bft::Vote vote;
  bool operator==(const VoteMsg&) const = default;
};

/// A decided block with its certificate, used to bring lagging nodes forward.
struct CommitMsg {
  ledger::CommittedBlock committed;
  bool operator==(const CommitMsg&) const = default;
};

struct TxMsg {
  ledger::Transaction tx;
  bool operator==(const TxMsg&) const = default;
};

/// Client to encoder: the raw file.
struct FileTransferMsg {
  std::uint64_t session = 0;
  Hash256 file_id;
  Bytes data;
  bool operator==(const FileTransferMsg&) const = default;
};

/// Encoder to host: one encoded chunk, signed by the encoder.
struct ChunkMsg {
  std::uint64_t session = 0;
  std::uint32_t client = 0;  // node to acknowledge
  ledger::ChunkAttestation attestation;
  bool operator==(const ChunkMsg&) const = default;
};

struct PartialEntry {
  std::uint32_t index = 0;
  std::uint64_t fingerprint = 0;
  Bytes tag;
  bool operator==(const PartialEntry&) const = default;
};

/// Storage miner to host: partial signatures over chunk fingerprints.
struct PartialsMsg {
  Hash256 file_id;
  std::uint32_t signer = 0;
  std::vector<PartialEntry> entries;
  bool operator==(const PartialsMsg&) const = default;
};

/// Host to client. A rejection carries the encoder's attestation.
struct AckMsg {
  std::uint64_t session = 0;
  Hash256 file_id;
  std::uint32_t index = 0;
  bool stored = false;
  Bytes evidence;
  bool operator==(const AckMsg&) const = default;
};

struct ChunkRequestMsg {
  std::uint64_t job = 0;
  Hash256 file_id;
  std::vector<std::uint32_t> indices;
  bool operator==(const ChunkRequestMsg&) const = default;
};

/// The aggregate covers the statement for (file, index, fingerprint).
struct ChunkResponseMsg {
  std::uint64_t job = 0;
  Hash256 file_id;
  std::uint32_t index = 0;
  Bytes payload;
  std::uint64_t fingerprint = 0;
  wts::AggregateSignature aggregate;
  bool operator==(const ChunkResponseMsg&) const = default;
};

struct GetRequestMsg {
  std::uint64_t session = 0;
  Hash256 file_id;
  bool operator==(const GetRequestMsg&) const = default;
};

struct GetResponseMsg {
  std::uint64_t session = 0;
  Hash256 file_id;
  bool ok = false;
  Bytes data;
  bool operator==(const GetResponseMsg&) const = default;
};

using Message = std::variant<ProposalMsg, VoteMsg, CommitMsg, TxMsg, FileTransferMsg, ChunkMsg,
                             PartialsMsg, AckMsg, ChunkRequestMsg, ChunkResponseMsg, GetRequestMsg,
                             GetResponseMsg>;

[[nodiscard]] MsgType type_of(const Message& m);
/// True for messages that carry file data.
[[nodiscard]] bool is_bulk(const Message& m);

Bytes encode_message(const Message& m);
/// Throws ParseError on any malformed input.
Message decode_message(ByteView bytes);

/// What storage miners sign for chunk `index` of a file:
/// "bftdsn/chunkfp/1" || file id || u32 index || u64 fingerprint.
Bytes chunk_statement(const Hash256& file_id, std::uint32_t index, std::uint64_t fingerprint);

}  // namespace bftdsn::protocol
