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

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "bftdsn/fingerprint.hpp"
#include "bftdsn/merkle_pos.hpp"
#include "bftdsn/vote.hpp"
#include "bftdsn/wts.hpp"

namespace bftdsn::ledger {

using bft::Height;
using bft::Round;
using MinerId = bft::NodeId;
using pos::SectorId;

/// floor((n - 1) / 3). Throws DomainError for n == 0.
std::uint64_t compute_f(std::uint64_t n);

/// Sector ids are scoped by owner: high 32 bits miner, low 32 bits local index.
inline SectorId make_sector_id(MinerId miner, std::uint32_t local) {
  return (static_cast<SectorId>(miner) << 32) | local;
}
inline MinerId sector_owner(SectorId id) { return static_cast<MinerId>(id >> 32); }

// ---- transactions ---------------------------------------------------------

struct StoreTx {
  Hash256 file_id;
  std::vector<std::uint64_t> fingerprints;  // one per data chunk
  std::uint64_t chunk_size = 0;
  std::uint64_t file_size = 0;  // unpadded length
  Height lifetime = 0;          // heights until expiry; 0 keeps the file
  bool operator==(const StoreTx&) const = default;
};

struct PledgeTx {
  MinerId miner = 0;
  SectorId sector = 0;
  Hash256 root;
  bool operator==(const PledgeTx&) const = default;
};

struct PosTx {
  pos::PosProof proof;
  bool operator==(const PosTx&) const = default;
};

enum class FaultKind : std::uint8_t {
  kVoteEquivocation = 1,      // evidence: two votes
  kProposalEquivocation = 2,  // evidence: two proposals
  kBadChunk = 3,              // evidence: a ChunkAttestation
};

struct FaultTx {
  MinerId accuser = 0;
  MinerId accused = 0;
  FaultKind kind = FaultKind::kVoteEquivocation;
  Bytes evidence;
  bool operator==(const FaultTx&) const = default;
};

struct RetrieveReportTx {
  Hash256 file_id;
  MinerId miner = 0;
  std::uint64_t nonce = 0;
  bool operator==(const RetrieveReportTx&) const = default;
};

/// One chunk written to (or released from) a sector.
struct Allocation {
  Hash256 file_id;
  std::uint32_t index = 0;  // 0-based chunk index
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  bool released = false;
  bool operator==(const Allocation&) const = default;
};

/// Root change after writing or clearing chunks. Weight-neutral.
struct SectorUpdateTx {
  SectorId sector = 0;
  Hash256 prev_root;
  Hash256 new_root;
  std::vector<Allocation> allocations;
  bool operator==(const SectorUpdateTx&) const = default;
};

enum class TxKind : std::uint8_t {
  kStore = 1,
  kPledge = 2,
  kPos = 3,
  kFault = 4,
  kRetrieveReport = 5,
  kSectorUpdate = 6,
};

using TxBody = std::variant<StoreTx, PledgeTx, PosTx, FaultTx, RetrieveReportTx, SectorUpdateTx>;

struct Transaction {
  TxBody body;
  Bytes submitter;  // public key
  Bytes signature;

  bool operator==(const Transaction&) const = default;

  [[nodiscard]] TxKind kind() const { return static_cast<TxKind>(body.index() + 1); }
  /// Everything but the signature.
  [[nodiscard]] Bytes unsigned_bytes() const;
  [[nodiscard]] Hash256 id() const;
  [[nodiscard]] Bytes encode() const;
  static Transaction decode(ByteView bytes);
};

void encode_tx(ByteWriter& w, const Transaction& tx);
Transaction decode_tx(ByteReader& r);

/// Fills submitter and signature.
Transaction make_tx(TxBody body, const crypto::KeyPair& key);

/// ID_F = H(fp_1 || ... || fp_K), each 8 bytes big-endian.
Hash256 file_id_of(std::span<const std::uint64_t> fingerprints);

/// An encoder's signed statement about one chunk it produced.
struct ChunkAttestation {
  Hash256 file_id;
  std::uint32_t index = 0;
  Bytes payload;
  MinerId encoder = 0;
  Bytes signature;

  bool operator==(const ChunkAttestation&) const = default;

  /// "bftdsn/chunk/1" || file || index || H(payload)
  [[nodiscard]] Bytes sign_bytes() const;
  [[nodiscard]] Bytes encode() const;
  static ChunkAttestation decode(ByteView bytes);
};

// ---- blocks ---------------------------------------------------------------

struct Block {
  Height height = 0;
  Hash256 parent;
  MinerId proposer = 0;
  std::int64_t timestamp = 0;
  std::vector<Transaction> txs;

  bool operator==(const Block&) const = default;
  [[nodiscard]] Bytes encode() const;
  static Block decode(ByteView bytes);
  [[nodiscard]] Hash256 hash() const;
};

/// Precommits for (height, round, block hash) from voters of weight >= n - f.
struct Certificate {
  Round round = 0;
  wts::AggregateSignature precommits;
  bool operator==(const Certificate&) const = default;
};

struct CommittedBlock {
  Block block;
  Certificate cert;

  bool operator==(const CommittedBlock&) const = default;
  [[nodiscard]] Bytes encode() const;
  static CommittedBlock decode(ByteView bytes);
};

// ---- state ----------------------------------------------------------------

/// Sector counts per miner at one height.
class WeightTable {
 public:
  WeightTable() = default;
  explicit WeightTable(std::vector<std::uint64_t> weights);

  [[nodiscard]] std::uint64_t weight(MinerId id) const {
    return id < weights_.size() ? weights_[id] : 0;
  }
  [[nodiscard]] const std::vector<std::uint64_t>& weights() const { return weights_; }
  [[nodiscard]] std::uint64_t total() const { return total_; }
  [[nodiscard]] std::uint64_t f() const { return total_ == 0 ? 0 : compute_f(total_); }
  /// n - f
  [[nodiscard]] std::uint64_t quorum() const { return total_ - f(); }
  [[nodiscard]] std::vector<MinerId> miners() const;
  bool operator==(const WeightTable&) const = default;

 private:
  std::vector<std::uint64_t> weights_;
  std::uint64_t total_ = 0;
};

struct LedgerConfig {
  crypto::SecurityLevel level = crypto::SecurityLevel::k128;
  std::uint64_t sector_size = pos::kDefaultSectorSize;
  std::uint64_t fragment_size = pos::kDefaultFragmentSize;
  /// Heights between proofs for one sector.
  Height pos_interval = 10;
  /// Extra heights allowed past the due height before the sector is dropped.
  Height pos_grace = 20;
  bool operator==(const LedgerConfig&) const = default;
};

struct GenesisSector {
  MinerId miner = 0;
  SectorId sector = 0;
  Hash256 root;
  bool operator==(const GenesisSector&) const = default;
};

struct Genesis {
  LedgerConfig config;
  std::vector<Bytes> miner_keys;  // index = miner id
  std::vector<GenesisSector> sectors;
  Hash256 seed;

  [[nodiscard]] Bytes encode() const;
  [[nodiscard]] Hash256 hash() const;
};

enum class SectorStatus : std::uint8_t { kPending = 0, kActive = 1, kRemoved = 2 };

struct SectorRecord {
  MinerId owner = 0;
  Hash256 root;
  SectorStatus status = SectorStatus::kPending;
  Height pledged_at = 0;
  Height last_pos_height = 0;
  std::uint64_t next_epoch = 0;
  Hash256 last_digest;  // challenge source for next_epoch
  std::vector<Allocation> allocations;
  bool operator==(const SectorRecord&) const = default;
};

struct FileManifest {
  Hash256 id;
  std::vector<std::uint64_t> fingerprints;
  std::uint64_t chunk_size = 0;
  std::uint64_t file_size = 0;
  std::vector<SectorId> placement;  // chunk i lives in placement[i]
  Height stored_at = 0;
  Height expires_at = 0;  // 0: never

  [[nodiscard]] std::size_t total_chunks() const { return placement.size(); }
  [[nodiscard]] std::size_t data_chunks() const { return fingerprints.size(); }
  [[nodiscard]] std::size_t parity_chunks() const { return total_chunks() - data_chunks(); }
  [[nodiscard]] std::uint64_t padded_size() const { return chunk_size * data_chunks(); }
  bool operator==(const FileManifest&) const = default;
};

struct State {
  Height height = 0;
  Hash256 last_block;  // genesis hash at height 0
  std::map<SectorId, SectorRecord> sectors;
  std::map<Hash256, std::shared_ptr<const FileManifest>> files;
  std::map<MinerId, std::uint64_t> failed_retrievals;
  std::set<MinerId> penalized;
  std::uint64_t expired_files = 0;

  [[nodiscard]] std::vector<SectorId> active_sectors() const;
  [[nodiscard]] std::uint64_t active_count() const;
  [[nodiscard]] WeightTable weight_table(std::size_t miner_count) const;
  /// Canonical serialization used for the state hash.
  [[nodiscard]] Bytes canonical_bytes() const;
};

enum class TxReject : std::uint8_t {
  kOk = 0,
  kBadSignature,
  kUnknownMiner,
  kNotOwner,
  kIdMismatch,
  kWrongChunkCount,
  kBadShape,
  kNetworkTooSmall,
  kDuplicateFile,
  kDuplicateTx,
  kUnknownFile,
  kUnknownSector,
  kSectorExists,
  kSectorInactive,
  kPosInvalid,
  kWrongEpoch,
  kTooEarly,
  kStaleRoot,
  kBadEvidence,
  kAlreadyPenalized,
};

/// Machine-readable reason, e.g. "pos-invalid".
std::string to_string(TxReject r);

struct TxCheck {
  TxReject reason = TxReject::kOk;
  std::size_t index = 0;  // offending transaction, for block checks
  [[nodiscard]] bool ok() const { return reason == TxReject::kOk; }
  explicit operator bool() const { return ok(); }
};

/// Per-node replicated ledger: single writer, blocks applied atomically.
class Ledger {
 public:
  explicit Ledger(Genesis genesis, std::shared_ptr<crypto::VerificationCache> cache = nullptr);

  [[nodiscard]] const Genesis& genesis() const { return genesis_; }
  [[nodiscard]] const Hash256& genesis_hash() const { return genesis_hash_; }
  [[nodiscard]] const LedgerConfig& config() const { return genesis_.config; }
  [[nodiscard]] const State& state() const { return state_; }
  [[nodiscard]] Height height() const { return state_.height; }
  [[nodiscard]] std::size_t miner_count() const { return genesis_.miner_keys.size(); }
  [[nodiscard]] const hf::FingerprintParams& fingerprint_params() const { return hf_params_; }
  [[nodiscard]] crypto::VerificationCache* cache() const { return cache_.get(); }

  /// Weight table as of `height`. Throws LedgerError for future or
  /// unretained heights.
  [[nodiscard]] const WeightTable& weights_at(Height height) const;
  [[nodiscard]] const WeightTable& weights() const { return weights_at(height()); }
  [[nodiscard]] std::uint64_t weight_of(MinerId miner, Height height) const {
    return weights_at(height).weight(miner);
  }
  /// The miners' keys under the weights of `height`.
  [[nodiscard]] const wts::VerificationKey& vk_at(Height height) const;

  [[nodiscard]] std::shared_ptr<const FileManifest> manifest(const Hash256& file) const;
  [[nodiscard]] const SectorRecord* sector(SectorId id) const;
  [[nodiscard]] Hash256 block_hash_at(Height height) const;
  [[nodiscard]] const std::vector<CommittedBlock>& blocks() const { return blocks_; }
  [[nodiscard]] bool has_tx(const Hash256& id) const { return tx_ids_.contains(id); }

  [[nodiscard]] TxCheck check_tx(const Transaction& tx) const;
  /// Height, parent and every transaction, in order. Does not look at the
  /// certificate.
  [[nodiscard]] TxCheck check_block(const Block& block) const;
  [[nodiscard]] bool verify_certificate(const Block& block, const Certificate& cert) const;
  /// Candidates that apply in order on top of the current state, skipping
  /// invalid or already committed ones, at most `max` of them.
  [[nodiscard]] std::vector<Transaction> select_txs(const std::vector<Transaction>& candidates,
                                                    std::size_t max) const;

  /// Throws LedgerError and leaves the state untouched on any failure.
  void apply(const CommittedBlock& committed);

  [[nodiscard]] Hash256 state_hash() const;

  /// Versioned key-value text dump of the current state.
  void write_snapshot(const std::filesystem::path& path) const;
  /// Restores a snapshot. Only the snapshot height's weights are queryable
  /// afterwards; later blocks apply normally.
  static Ledger from_snapshot(Genesis genesis, const std::filesystem::path& path,
                              std::shared_ptr<crypto::VerificationCache> cache = nullptr);

 private:
  struct HeightView {
    std::shared_ptr<const WeightTable> table;
    std::shared_ptr<const wts::VerificationKey> vk;
  };

  TxCheck check_tx_in(const Transaction& tx, const State& s) const;
  void apply_tx(const Transaction& tx, State& s) const;
  void end_of_block(State& s) const;
  void push_height_view(const WeightTable& table);

  Genesis genesis_;
  Hash256 genesis_hash_;
  std::shared_ptr<crypto::VerificationCache> cache_;
  std::shared_ptr<const wts::KeyDirectory> keys_;
  hf::FingerprintParams hf_params_;
  State state_;
  Height history_base_ = 0;
  std::vector<HeightView> history_;  // history_[h - history_base_]
  std::vector<Hash256> block_hashes_;  // index = height
  std::vector<CommittedBlock> blocks_;
  std::unordered_set<Hash256, Hash256Hasher> tx_ids_;
};

/// Free-function form of Ledger::check_tx.
inline TxCheck validate_tx(const Transaction& tx, const Ledger& ledger) {
  return ledger.check_tx(tx);
}

/// Append-only file of length-prefixed committed blocks behind an
/// 8-byte magic and a u32 version.
class BlockLog {
 public:
  static void write(const std::filesystem::path& path, const std::vector<CommittedBlock>& blocks);
  static void append(const std::filesystem::path& path, const CommittedBlock& block);
  static std::vector<CommittedBlock> read(const std::filesystem::path& path);
};

/// Rebuilds a ledger by applying every block in the log.
Ledger replay(Genesis genesis, const std::filesystem::path& log_path,
              std::shared_ptr<crypto::VerificationCache> cache = nullptr);

/// Chooses the proposer for (height, round) under `table`: miners in id
/// order, each repeated weight times, indexed by (height + round) mod n.
/// Throws ConsensusError for an empty table.
MinerId select_proposer(Height height, Round round, const WeightTable& table);

}  // namespace bftdsn::ledger
