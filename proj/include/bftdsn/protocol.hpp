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

// Storage protocol nodes. A MinerNode runs consensus over its own ledger
// replica and plays every storage role: encoder, storage signer, chunk host
// and retrieval miner. A ClientNode puts and gets files.

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>

#include "bftdsn/fingerprint.hpp"
#include "bftdsn/ledger.hpp"
#include "bftdsn/messages.hpp"
#include "bftdsn/netsim.hpp"
#include "bftdsn/reed_solomon.hpp"
#include "bftdsn/swbft.hpp"

namespace bftdsn::protocol {

using ledger::Height;
using ledger::MinerId;
using pos::SectorId;
using sim::NodeIndex;
using sim::Time;

// ---- parameters -----------------------------------------------------------

/// Erasure-code shape for n sectors.
struct ProtocolParams {
  std::uint64_t n = 0;
  std::uint64_t f = 0;
  std::uint64_t k = 0;  // data chunks, n - f
  std::uint64_t m = 0;  // parity chunks, f
  bool operator==(const ProtocolParams&) const = default;
};

/// K = n - f, M = f. Throws ParameterError for n < 4.
ProtocolParams choose_params(std::uint64_t n);

/// Smallest multiple of 8 with k * size >= file_size.
std::uint64_t chunk_size_for(std::uint64_t file_size, std::uint64_t k);

/// Zero-pads the file and splits it into k chunks of chunk_size bytes.
std::vector<Bytes> split_file(ByteView file, std::uint64_t k, std::uint64_t chunk_size);

/// Concatenates data chunks and drops the padding.
Bytes join_chunks(std::span<const Bytes> data, std::uint64_t file_size);

/// Fingerprints and id of a file. Throws ParameterError for an empty file.
ledger::StoreTx prepare_store(ByteView file, const ProtocolParams& params,
                              const hf::FingerprintParams& fp_params, Height lifetime = 0);

/// True when `data` hashes to `file_id` under the manifest's shape.
bool file_matches(ByteView data, const ledger::FileManifest& manifest,
                  const hf::FingerprintParams& fp_params);

/// Shared, lazily built generator for (k, m).
const rs::GeneratorMatrix& generator_for(std::size_t k, std::size_t m);

/// Deadline for moving `bytes` of file data through two hops:
/// 4 delta + 4 delta * ceil(2 * bytes / (rate * delta)).
Time transfer_timeout(const sim::LinkPolicy& link, std::uint64_t bytes);

/// Draws a miner with probability proportional to its weight.
MinerId sample_by_weight(const ledger::WeightTable& table, std::mt19937_64& rng);

// ---- node configuration ---------------------------------------------------

struct NodeConfig {
  /// Consensus timing unit; round timeouts are 4 delta + r delta.
  Time delta = sim::kMillisecond;
  /// Pause between applying a block and starting the next height.
  Time commit_wait = 2 * sim::kMillisecond;
  std::size_t max_block_txs = 512;
  /// Heights a transaction may sit in the mempool.
  Height mempool_ttl = 40;
  /// Chunks held while their aggregate is still forming.
  std::size_t chunk_buffer_limit = 4096;
  /// File an equivocation FAULT when the consensus core reports evidence.
  bool report_equivocation = true;
  std::uint32_t max_get_tries = 64;
  std::uint32_t max_put_attempts = 8;
};

/// What every node of one deployment shares.
struct Deployment {
  sim::Simulator* sim = nullptr;
  std::shared_ptr<const ledger::Genesis> genesis;
  std::shared_ptr<crypto::VerificationCache> cache;
  NodeConfig config;
  std::size_t miner_count = 0;  // miners are nodes 0 .. miner_count - 1
};

class MinerNode;

// ---- behaviour hooks ------------------------------------------------------

enum class GetAction : std::uint8_t { kServe, kStall, kGarbage };

/// Handlers a Byzantine miner may override. The defaults are honest.
class Behavior {
 public:
  virtual ~Behavior() = default;

  [[nodiscard]] virtual bool honest() const { return true; }
  /// Send conflicting proposals and votes to different peers.
  virtual bool equivocate() { return false; }
  /// Fingerprint signed for chunk `index`; `expected` is the correct one.
  virtual std::uint64_t fingerprint_to_sign(const Hash256& /*file*/, std::uint32_t /*index*/,
                                            std::uint64_t expected) {
    return expected;
  }
  /// May rewrite freshly encoded chunks before they are sent.
  virtual void alter_encoding(const ledger::FileManifest& /*m*/, rs::ChunkSet& /*chunks*/) {}
  /// Whether an accepted chunk is written to the sector.
  virtual bool keep_chunk(const ledger::FileManifest& /*m*/, std::uint32_t /*index*/) { return true; }
  /// Payload returned for a chunk request; `stored` is null for a chunk not
  /// kept. nullopt sends nothing.
  virtual std::optional<Bytes> serve_chunk(const ledger::FileManifest& /*m*/,
                                           std::uint32_t /*index*/, const Bytes* stored) {
    if (!stored) return std::nullopt;
    return *stored;
  }
  virtual GetAction on_get_request(const Hash256& /*file*/) { return GetAction::kServe; }
  /// Runs after every applied block.
  virtual void on_height(MinerNode& /*node*/) {}
};

// ---- miner ----------------------------------------------------------------

struct MinerStats {
  std::uint64_t partials_signed = 0;
  std::uint64_t partials_rejected = 0;
  std::uint64_t aggregates_formed = 0;
  std::uint64_t chunks_stored = 0;
  std::uint64_t chunks_rejected = 0;
  std::uint64_t chunk_responses_rejected = 0;
  std::uint64_t files_encoded = 0;
  std::uint64_t retrievals_served = 0;
  std::uint64_t retrievals_failed = 0;
  std::uint64_t faults_filed = 0;
  std::uint64_t commits_sent = 0;
};

class MinerNode : public sim::Node {
 public:
  /// `sectors` holds the data of the miner's genesis sectors.
  MinerNode(const Deployment& deployment, MinerId id, crypto::KeyPair key,
            std::map<SectorId, pos::SectorTree> sectors, std::shared_ptr<Behavior> behavior = nullptr);

  /// Starts height 1. Call once after every node is registered.
  void start();

  void on_message(NodeIndex from, const sim::Payload& payload) override;
  void on_timer(std::uint64_t tag) override;

  [[nodiscard]] MinerId id() const { return id_; }
  [[nodiscard]] const ledger::Ledger& ledger() const { return ledger_; }
  [[nodiscard]] const bft::ConsensusCore& core() const { return core_; }
  [[nodiscard]] const MinerStats& stats() const { return stats_; }
  [[nodiscard]] Behavior& behavior() { return *behavior_; }
  [[nodiscard]] std::size_t mempool_size() const { return mempool_.size(); }
  [[nodiscard]] std::mt19937_64& rng() { return rng_; }
  [[nodiscard]] Time now() const;
  /// Round at which each height was decided locally (absent when the block
  /// came from a peer's commit message).
  [[nodiscard]] const std::map<Height, bft::Round>& decided_rounds() const { return decided_rounds_; }
  /// Bytes of chunk data currently written to this miner's sectors.
  [[nodiscard]] std::uint64_t stored_chunk_bytes() const;

  /// Signs, gossips and keeps `body` in the local mempool.
  ledger::Transaction submit(ledger::TxBody body);

  /// Called after each applied block.
  void set_commit_observer(std::function<void(const MinerNode&, const ledger::CommittedBlock&)> fn) {
    commit_observer_ = std::move(fn);
  }

 private:
  struct ChunkKey {
    Hash256 file;
    std::uint32_t index = 0;
    auto operator<=>(const ChunkKey&) const = default;
  };
  struct HostedChunk {
    SectorId sector = 0;
    std::map<std::uint64_t, std::vector<wts::PartialSignature>> groups;  // by claimed fingerprint
    std::set<MinerId> signers;
    std::optional<std::uint64_t> fingerprint;  // set once the aggregate formed
    wts::AggregateSignature aggregate;
    bool stored = false;
    bool kept = false;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    std::vector<std::pair<Time, ChunkMsg>> waiting;
  };
  struct SectorStore {
    pos::SectorTree latest;
    std::map<Hash256, pos::SectorTree> versions;
    std::map<std::uint64_t, std::uint64_t> free;  // offset -> length
    std::vector<ledger::Allocation> unsynced;
    std::optional<ledger::Transaction> pending;
    Height pending_since = 0;
    std::optional<Hash256> pending_root;
    std::vector<ledger::Allocation> pending_allocs;
    std::set<ChunkKey> releasing;
  };
  struct EncodeJob {
    std::uint64_t session = 0;
    NodeIndex client = 0;
    Bytes data;
  };
  struct RetrievalJob {
    std::uint64_t session = 0;
    NodeIndex client = 0;
    std::shared_ptr<const ledger::FileManifest> manifest;
    std::map<std::uint32_t, Bytes> verified;
    sim::TimerId deadline = 0;
    bool done = false;
  };
  struct MempoolEntry {
    ledger::Transaction tx;
    Height seen_at = 0;
  };

  // consensus
  void begin_height();
  void process(const bft::Outputs& outs);
  void drain();
  void dispatch(NodeIndex from, const Message& m);
  void feed_proposal(const ProposalMsg& m, bool local);
  void feed_vote(const bft::Vote& v);
  void decide(const bft::Decision& d);
  void commit(const ledger::CommittedBlock& cb, std::optional<bft::Round> decided_round);
  void broadcast(const Message& m);
  void send_to(NodeIndex to, const Message& m);
  void send_consensus(const Message& a, const std::optional<Message>& b);
  void relay_lock(bft::Round round, const Hash256& block);
  bool admit_height(Height h, NodeIndex from, const Message& m);
  void reply_commit(NodeIndex to, Height h);
  void heartbeat();
  std::uint64_t timer(Time delay, std::function<void()> fn);
  Hash256 build_block();
  bool block_valid(const ledger::Block& b, const bft::Proposal& p);
  void file_fault(MinerId accused, ledger::FaultKind kind, Bytes evidence);

  // transactions
  void on_tx(const ledger::Transaction& tx);
  void purge_mempool();

  // storage roles
  void after_commit(const ledger::CommittedBlock& cb);
  void sign_partials(const ledger::FileManifest& m);
  void on_partials(const PartialsMsg& m, NodeIndex from);
  void try_aggregate(const ledger::FileManifest& m, std::uint32_t index, HostedChunk& hc);
  void on_chunk(const ChunkMsg& m);
  void accept_chunk(const ledger::FileManifest& m, HostedChunk& hc, const ChunkMsg& c);
  void on_file(const FileTransferMsg& m, NodeIndex from);
  void encode(const ledger::FileManifest& m, const EncodeJob& job);
  void on_get(const GetRequestMsg& m, NodeIndex from);
  void on_chunk_request(const ChunkRequestMsg& m, NodeIndex from);
  void on_chunk_response(const ChunkResponseMsg& m, NodeIndex from);
  void finish_retrieval(std::uint64_t job, bool ok);
  void maintain_sectors();
  std::optional<std::uint64_t> allocate(SectorStore& s, std::uint64_t length);
  const pos::SectorTree* tree_for(const SectorStore& s, const Hash256& root) const;
  std::uint64_t chunk_threshold(const ledger::FileManifest& m) const;

  const Deployment& dep_;
  MinerId id_;
  crypto::KeyPair key_;
  std::shared_ptr<Behavior> behavior_;
  ledger::Ledger ledger_;
  bft::ConsensusCore core_;
  std::mt19937_64 rng_;
  MinerStats stats_;

  // consensus state
  std::map<Hash256, ledger::Block> blocks_;
  std::map<Hash256, bool> block_verdicts_;
  std::deque<std::variant<ProposalMsg, bft::Vote>> local_;
  bool draining_ = false;
  std::vector<std::pair<NodeIndex, Message>> future_;
  std::optional<bft::Decision> pending_decision_;
  bool waiting_next_ = false;
  std::map<Height, bft::Round> decided_rounds_;
  std::map<Height, Time> applied_at_;
  std::map<std::pair<NodeIndex, Height>, Time> commit_replies_;
  std::vector<Message> own_messages_;  // this height, for rebroadcast
  Height heartbeat_height_ = 0;
  std::set<MinerId> accused_;
  bool equivocation_seen_ = false;  // this height
  std::set<bft::Round> relayed_locks_;  // this height

  std::map<std::uint64_t, std::function<void()>> timers_;
  std::uint64_t next_timer_ = 1;

  std::vector<MempoolEntry> mempool_;
  std::set<Hash256> mempool_ids_;

  // storage state
  std::map<SectorId, SectorStore> sectors_;
  std::map<ChunkKey, HostedChunk> hosted_;
  std::map<Hash256, std::vector<PartialsMsg>> early_partials_;
  std::map<Hash256, std::vector<ChunkMsg>> early_chunks_;
  std::size_t waiting_chunks_ = 0;
  std::map<Hash256, std::vector<EncodeJob>> encode_jobs_;
  std::map<std::uint64_t, RetrievalJob> retrievals_;
  std::uint64_t next_job_ = 1;

  std::function<void(const MinerNode&, const ledger::CommittedBlock&)> commit_observer_;
};

// ---- client ---------------------------------------------------------------

struct PutResult {
  Hash256 file_id;
  bool success = false;
  std::uint32_t encoder_attempts = 0;
  std::uint32_t store_submissions = 0;
  std::uint32_t acks = 0;
  Time started = 0;
  Time finished = 0;
  [[nodiscard]] Time latency() const { return finished - started; }
};

struct GetResult {
  Hash256 file_id;
  bool success = false;
  bool not_found = false;
  std::uint32_t tries = 0;
  Time started = 0;
  Time finished = 0;
  Bytes data;
  std::vector<MinerId> retrieval_miners;  // one per try
  [[nodiscard]] Time latency() const { return finished - started; }
};

class ClientNode : public sim::Node {
 public:
  using PutDone = std::function<void(const PutResult&)>;
  using GetDone = std::function<void(const GetResult&)>;

  /// `view` is the ledger replica of a miner the client trusts.
  ClientNode(const Deployment& deployment, NodeIndex self, crypto::KeyPair key,
             const ledger::Ledger* view, std::uint64_t seed);

  /// Throws ParameterError for an empty file or a network below 4 sectors.
  Hash256 put(Bytes file, PutDone done, Height lifetime = 0);
  void get(const Hash256& file_id, GetDone done);

  void on_message(NodeIndex from, const sim::Payload& payload) override;
  void on_timer(std::uint64_t tag) override;

  [[nodiscard]] NodeIndex index() const { return self_; }
  [[nodiscard]] std::size_t open_sessions() const { return puts_.size() + gets_.size(); }

 private:
  struct PutSession {
    Bytes file;
    ledger::Transaction store;
    PutResult result;
    PutDone done;
    MinerId encoder = 0;
    std::set<MinerId> bad_encoders;
    std::set<std::uint32_t> acked;
    bool verified_nack = false;
    sim::TimerId deadline = 0;
  };
  struct GetSession {
    GetResult result;
    GetDone done;
    std::uint64_t request = 0;
    sim::TimerId deadline = 0;
  };

  void start_encoder(std::uint64_t session);
  void put_deadline(std::uint64_t session);
  void finish_put(std::uint64_t session, bool ok);
  void on_ack(const AckMsg& m);
  bool nack_verified(const AckMsg& m) const;
  void try_get(std::uint64_t session);
  void finish_get(std::uint64_t session, bool ok);
  void get_failed(std::uint64_t session, MinerId miner);
  void on_get_response(const GetResponseMsg& m, NodeIndex from);
  void broadcast_tx(const ledger::Transaction& tx);
  void send_to(NodeIndex to, const Message& m);
  Time put_timeout(std::uint64_t bytes) const;

  const Deployment& dep_;
  NodeIndex self_;
  crypto::KeyPair key_;
  const ledger::Ledger* view_;
  std::mt19937_64 rng_;
  std::map<std::uint64_t, PutSession> puts_;
  std::map<std::uint64_t, GetSession> gets_;
  std::uint64_t next_session_ = 1;
  std::uint64_t next_request_ = 1;
  std::uint64_t report_nonce_ = 0;
};

}  // namespace bftdsn::protocol
