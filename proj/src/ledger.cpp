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

#include "bftdsn/ledger.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace bftdsn::ledger {

namespace {

constexpr std::uint32_t kMaxListLength = 1u << 20;

std::uint32_t checked_count(ByteReader& r) {
  std::uint32_t n = r.u32();
  if (n > kMaxListLength) throw ParseError("list length implausible");
  return n;
}

void encode_body(ByteWriter& w, const TxBody& body) {
  std::visit(
      [&w](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, StoreTx>) {
          w.hash(b.file_id).u32(static_cast<std::uint32_t>(b.fingerprints.size()));
          for (std::uint64_t fp : b.fingerprints) w.u64(fp);
          w.u64(b.chunk_size).u64(b.file_size).u64(b.lifetime);
        } else if constexpr (std::is_same_v<T, PledgeTx>) {
          w.u32(b.miner).u64(b.sector).hash(b.root);
        } else if constexpr (std::is_same_v<T, PosTx>) {
          w.blob(as_view(b.proof.encode()));
        } else if constexpr (std::is_same_v<T, FaultTx>) {
          w.u32(b.accuser).u32(b.accused).u8(static_cast<std::uint8_t>(b.kind));
          w.blob(as_view(b.evidence));
        } else if constexpr (std::is_same_v<T, RetrieveReportTx>) {
          w.hash(b.file_id).u32(b.miner).u64(b.nonce);
        } else {
          w.u64(b.sector).hash(b.prev_root).hash(b.new_root);
          w.u32(static_cast<std::uint32_t>(b.allocations.size()));
          for (const Allocation& a : b.allocations)
            w.hash(a.file_id).u32(a.index).u64(a.offset).u64(a.length).boolean(a.released);
        }
      },
      body);
}

TxBody decode_body(TxKind kind, ByteReader& r) {
  switch (kind) {
    case TxKind::kStore: {
      StoreTx b;
      b.file_id = r.hash();
      std::uint32_t n = checked_count(r);
      b.fingerprints.resize(n);
      for (auto& fp : b.fingerprints) fp = r.u64();
      b.chunk_size = r.u64();
      b.file_size = r.u64();
      b.lifetime = r.u64();
      return b;
    }
    case TxKind::kPledge: {
      PledgeTx b;
      b.miner = r.u32();
      b.sector = r.u64();
      b.root = r.hash();
      return b;
    }
    case TxKind::kPos: {
      Bytes proof = r.blob();
      return PosTx{pos::PosProof::decode(as_view(proof))};
    }
    case TxKind::kFault: {
      FaultTx b;
      b.accuser = r.u32();
      b.accused = r.u32();
      std::uint8_t k = r.u8();
      if (k < 1 || k > 3) throw ParseError("unknown fault kind");
      b.kind = static_cast<FaultKind>(k);
      b.evidence = r.blob();
      return b;
    }
    case TxKind::kRetrieveReport: {
      RetrieveReportTx b;
      b.file_id = r.hash();
      b.miner = r.u32();
      b.nonce = r.u64();
      return b;
    }
    case TxKind::kSectorUpdate: {
      SectorUpdateTx b;
      b.sector = r.u64();
      b.prev_root = r.hash();
      b.new_root = r.hash();
      std::uint32_t n = checked_count(r);
      b.allocations.resize(n);
      for (Allocation& a : b.allocations) {
        a.file_id = r.hash();
        a.index = r.u32();
        a.offset = r.u64();
        a.length = r.u64();
        a.released = r.boolean();
      }
      return b;
    }
  }
  throw ParseError("unknown transaction kind");
}

void write_unsigned(ByteWriter& w, const Transaction& tx) {
  w.u8(1).u8(static_cast<std::uint8_t>(tx.kind()));
  encode_body(w, tx.body);
  w.blob(as_view(tx.submitter));
}

std::vector<std::uint64_t> parse_u64_list(const std::string& text, int base) {
  std::vector<std::uint64_t> out;
  if (text == "-") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoull(item, nullptr, base));
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& xs, bool hex) {
  if (xs.empty()) return "-";
  std::ostringstream os;
  if (hex) os << std::hex;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  return os.str();
}

}  // namespace

std::uint64_t compute_f(std::uint64_t n) {
  if (n == 0) throw DomainError("f is undefined for an empty network");
  return (n - 1) / 3;
}

// ---- transactions ---------------------------------------------------------

Bytes Transaction::unsigned_bytes() const {
  ByteWriter w;
  write_unsigned(w, *this);
  return std::move(w).take();
}

Hash256 Transaction::id() const { return crypto::sha256(as_view(unsigned_bytes())); }

void encode_tx(ByteWriter& w, const Transaction& tx) {
  write_unsigned(w, tx);
  w.blob(as_view(tx.signature));
}

Transaction decode_tx(ByteReader& r) {
  if (r.u8() != 1) throw ParseError("unknown transaction version");
  std::uint8_t kind = r.u8();
  if (kind < 1 || kind > 6) throw ParseError("unknown transaction kind");
  Transaction tx;
  tx.body = decode_body(static_cast<TxKind>(kind), r);
  tx.submitter = r.blob();
  tx.signature = r.blob();
  return tx;
}

Bytes Transaction::encode() const {
  ByteWriter w;
  encode_tx(w, *this);
  return std::move(w).take();
}

Transaction Transaction::decode(ByteView bytes) {
  ByteReader r(bytes);
  Transaction tx = decode_tx(r);
  r.expect_done();
  return tx;
}

Transaction make_tx(TxBody body, const crypto::KeyPair& key) {
  Transaction tx;
  tx.body = std::move(body);
  tx.submitter = key.public_key;
  tx.signature = bft::sign_statement(key, as_view(tx.unsigned_bytes()));
  return tx;
}

Hash256 file_id_of(std::span<const std::uint64_t> fingerprints) {
  ByteWriter w(fingerprints.size() * 8);
  for (std::uint64_t fp : fingerprints) w.u64(fp);
  return crypto::sha256(as_view(w.bytes()));
}

Bytes ChunkAttestation::sign_bytes() const {
  ByteWriter w(96);
  w.raw(as_view("bftdsn/chunk/1")).hash(file_id).u32(index);
  w.hash(crypto::sha256(as_view(payload)));
  return std::move(w).take();
}

Bytes ChunkAttestation::encode() const {
  ByteWriter w(payload.size() + 128);
  w.hash(file_id).u32(index).blob(as_view(payload)).u32(encoder).blob(as_view(signature));
  return std::move(w).take();
}

ChunkAttestation ChunkAttestation::decode(ByteView bytes) {
  ByteReader r(bytes);
  ChunkAttestation a;
  a.file_id = r.hash();
  a.index = r.u32();
  a.payload = r.blob();
  a.encoder = r.u32();
  a.signature = r.blob();
  r.expect_done();
  return a;
}

// ---- blocks ---------------------------------------------------------------

Bytes Block::encode() const {
  ByteWriter w;
  w.u8(1).u64(height).hash(parent).u32(proposer).i64(timestamp);
  w.u32(static_cast<std::uint32_t>(txs.size()));
  for (const Transaction& tx : txs) encode_tx(w, tx);
  return std::move(w).take();
}

Block Block::decode(ByteView bytes) {
  ByteReader r(bytes);
  if (r.u8() != 1) throw ParseError("unknown block version");
  Block b;
  b.height = r.u64();
  b.parent = r.hash();
  b.proposer = r.u32();
  b.timestamp = r.i64();
  std::uint32_t n = checked_count(r);
  b.txs.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) b.txs.push_back(decode_tx(r));
  r.expect_done();
  return b;
}

Hash256 Block::hash() const { return crypto::sha256(as_view(encode())); }

Bytes CommittedBlock::encode() const {
  ByteWriter w;
  w.blob(as_view(block.encode())).u32(cert.round);
  wts::encode_aggregate(w, cert.precommits);
  return std::move(w).take();
}

CommittedBlock CommittedBlock::decode(ByteView bytes) {
  ByteReader r(bytes);
  CommittedBlock c;
  Bytes block = r.blob();
  c.block = Block::decode(as_view(block));
  c.cert.round = r.u32();
  Hash256 digest = crypto::sha256(
      as_view(bft::precommit_sign_bytes(c.block.height, c.cert.round, c.block.hash())));
  c.cert.precommits = wts::decode_aggregate(r, digest);
  r.expect_done();
  return c;
}

// ---- state ----------------------------------------------------------------

WeightTable::WeightTable(std::vector<std::uint64_t> weights) : weights_(std::move(weights)) {
  for (std::uint64_t w : weights_) total_ += w;
}

std::vector<MinerId> WeightTable::miners() const {
  std::vector<MinerId> out;
  for (std::size_t i = 0; i < weights_.size(); ++i)
    if (weights_[i] > 0) out.push_back(static_cast<MinerId>(i));
  return out;
}

Bytes Genesis::encode() const {
  ByteWriter w;
  w.u8(1).u16(static_cast<std::uint16_t>(config.level)).u64(config.sector_size);
  w.u64(config.fragment_size).u64(config.pos_interval).u64(config.pos_grace);
  w.u32(static_cast<std::uint32_t>(miner_keys.size()));
  for (const Bytes& k : miner_keys) w.blob(as_view(k));
  w.u32(static_cast<std::uint32_t>(sectors.size()));
  for (const GenesisSector& s : sectors) w.u32(s.miner).u64(s.sector).hash(s.root);
  w.hash(seed);
  return std::move(w).take();
}

Hash256 Genesis::hash() const { return crypto::sha256(as_view(encode())); }

std::vector<SectorId> State::active_sectors() const {
  std::vector<SectorId> out;
  for (const auto& [id, rec] : sectors)
    if (rec.status == SectorStatus::kActive) out.push_back(id);
  return out;
}

std::uint64_t State::active_count() const {
  std::uint64_t n = 0;
  for (const auto& [id, rec] : sectors) n += rec.status == SectorStatus::kActive;
  return n;
}

WeightTable State::weight_table(std::size_t miner_count) const {
  std::vector<std::uint64_t> w(miner_count, 0);
  for (const auto& [id, rec] : sectors)
    if (rec.status == SectorStatus::kActive && rec.owner < miner_count) ++w[rec.owner];
  return WeightTable(std::move(w));
}

Bytes State::canonical_bytes() const {
  ByteWriter w;
  w.u64(height).hash(last_block).u64(expired_files);
  w.u32(static_cast<std::uint32_t>(sectors.size()));
  for (const auto& [id, s] : sectors) {
    w.u64(id).u32(s.owner).hash(s.root).u8(static_cast<std::uint8_t>(s.status));
    w.u64(s.pledged_at).u64(s.last_pos_height).u64(s.next_epoch).hash(s.last_digest);
    w.u32(static_cast<std::uint32_t>(s.allocations.size()));
    for (const Allocation& a : s.allocations) w.hash(a.file_id).u32(a.index).u64(a.offset).u64(a.length);
  }
  w.u32(static_cast<std::uint32_t>(files.size()));
  for (const auto& [id, f] : files) {
    w.hash(id).u64(f->chunk_size).u64(f->file_size).u64(f->stored_at).u64(f->expires_at);
    w.u32(static_cast<std::uint32_t>(f->fingerprints.size()));
    for (std::uint64_t fp : f->fingerprints) w.u64(fp);
    w.u32(static_cast<std::uint32_t>(f->placement.size()));
    for (SectorId s : f->placement) w.u64(s);
  }
  w.u32(static_cast<std::uint32_t>(failed_retrievals.size()));
  for (const auto& [m, c] : failed_retrievals) w.u32(m).u64(c);
  w.u32(static_cast<std::uint32_t>(penalized.size()));
  for (MinerId m : penalized) w.u32(m);
  return std::move(w).take();
}

std::string to_string(TxReject r) {
  switch (r) {
    case TxReject::kOk: return "ok";
    case TxReject::kBadSignature: return "bad-signature";
    case TxReject::kUnknownMiner: return "unknown-miner";
    case TxReject::kNotOwner: return "not-owner";
    case TxReject::kIdMismatch: return "id-mismatch";
    case TxReject::kWrongChunkCount: return "wrong-chunk-count";
    case TxReject::kBadShape: return "bad-shape";
    case TxReject::kNetworkTooSmall: return "network-too-small";
    case TxReject::kDuplicateFile: return "duplicate-file";
    case TxReject::kDuplicateTx: return "duplicate-tx";
    case TxReject::kUnknownFile: return "unknown-file";
    case TxReject::kUnknownSector: return "unknown-sector";
    case TxReject::kSectorExists: return "sector-exists";
    case TxReject::kSectorInactive: return "sector-inactive";
    case TxReject::kPosInvalid: return "pos-invalid";
    case TxReject::kWrongEpoch: return "wrong-epoch";
    case TxReject::kTooEarly: return "too-early";
    case TxReject::kStaleRoot: return "stale-root";
    case TxReject::kBadEvidence: return "bad-evidence";
    case TxReject::kAlreadyPenalized: return "already-penalized";
  }
  return "unknown";
}

// ---- ledger ---------------------------------------------------------------

Ledger::Ledger(Genesis genesis, std::shared_ptr<crypto::VerificationCache> cache)
    : genesis_(std::move(genesis)),
      genesis_hash_(genesis_.hash()),
      cache_(std::move(cache)),
      hf_params_(hf::FingerprintParams::from_genesis(genesis_hash_)) {
  if (genesis_.config.fragment_size == 0 ||
      genesis_.config.sector_size % genesis_.config.fragment_size != 0)
    throw ParameterError("sector size must be a multiple of the fragment size");
  auto dir = std::make_shared<wts::KeyDirectory>();
  dir->level = genesis_.config.level;
  dir->public_keys = genesis_.miner_keys;
  keys_ = dir;

  state_.last_block = genesis_hash_;
  for (const GenesisSector& g : genesis_.sectors) {
    if (g.miner >= genesis_.miner_keys.size()) throw LedgerError("genesis sector has no miner");
    if ((g.sector >> 32) != g.miner) throw LedgerError("genesis sector id not scoped to miner");
    SectorRecord rec;
    rec.owner = g.miner;
    rec.root = g.root;
    rec.status = SectorStatus::kActive;
    rec.last_digest = pos::initial_challenge_seed(g.sector, genesis_hash_);
    if (!state_.sectors.emplace(g.sector, std::move(rec)).second)
      throw LedgerError("duplicate genesis sector");
  }
  block_hashes_.push_back(genesis_hash_);
  push_height_view(state_.weight_table(miner_count()));
}

void Ledger::push_height_view(const WeightTable& table) {
  if (!history_.empty() && *history_.back().table == table) {
    history_.push_back(history_.back());
    return;
  }
  HeightView v;
  v.table = std::make_shared<const WeightTable>(table);
  v.vk = std::make_shared<const wts::VerificationKey>(keys_, table.weights(), cache_);
  history_.push_back(std::move(v));
}

const WeightTable& Ledger::weights_at(Height height) const {
  if (height > state_.height) throw LedgerError("weight query for a future height");
  if (height < history_base_) throw LedgerError("weight history not retained for that height");
  return *history_[height - history_base_].table;
}

const wts::VerificationKey& Ledger::vk_at(Height height) const {
  (void)weights_at(height);  // range check
  return *history_[height - history_base_].vk;
}

std::shared_ptr<const FileManifest> Ledger::manifest(const Hash256& file) const {
  auto it = state_.files.find(file);
  return it == state_.files.end() ? nullptr : it->second;
}

const SectorRecord* Ledger::sector(SectorId id) const {
  auto it = state_.sectors.find(id);
  return it == state_.sectors.end() ? nullptr : &it->second;
}

Hash256 Ledger::block_hash_at(Height height) const {
  if (height > state_.height || height < history_base_)
    throw LedgerError("no block hash for that height");
  return block_hashes_[height - history_base_];
}

TxCheck Ledger::check_tx(const Transaction& tx) const {
  if (tx_ids_.contains(tx.id())) return {TxReject::kDuplicateTx, 0};
  return check_tx_in(tx, state_);
}

namespace {

bool owner_key_matches(const Genesis& g, MinerId miner, const Bytes& key) {
  return miner < g.miner_keys.size() && g.miner_keys[miner] == key;
}

}  // namespace

TxCheck Ledger::check_tx_in(const Transaction& tx, const State& s) const {
  const Height next = s.height + 1;
  const auto level = genesis_.config.level;
  if (tx.submitter.empty() ||
      !bft::verify_statement(cache_.get(), level, as_view(tx.submitter),
                             as_view(tx.unsigned_bytes()), as_view(tx.signature)))
    return {TxReject::kBadSignature};

  auto key_of = [this](MinerId m) -> ByteView { return as_view(genesis_.miner_keys[m]); };

  return std::visit(
      [&](const auto& b) -> TxCheck {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, StoreTx>) {
          const std::uint64_t n = s.active_count();
          if (n < 4) return {TxReject::kNetworkTooSmall};
          const std::uint64_t k = n - compute_f(n);
          if (b.fingerprints.size() != k) return {TxReject::kWrongChunkCount};
          if (b.chunk_size == 0 || b.chunk_size % 8 != 0 || b.file_size == 0)
            return {TxReject::kBadShape};
          const std::uint64_t padded = b.chunk_size * k;
          if (padded < b.file_size || padded - b.file_size >= 8 * k) return {TxReject::kBadShape};
          if (file_id_of(b.fingerprints) != b.file_id) return {TxReject::kIdMismatch};
          if (s.files.contains(b.file_id)) return {TxReject::kDuplicateFile};
          return {};
        } else if constexpr (std::is_same_v<T, PledgeTx>) {
          if (b.miner >= miner_count()) return {TxReject::kUnknownMiner};
          if (!owner_key_matches(genesis_, b.miner, tx.submitter)) return {TxReject::kNotOwner};
          if ((b.sector >> 32) != b.miner) return {TxReject::kBadShape};
          if (s.penalized.contains(b.miner)) return {TxReject::kAlreadyPenalized};
          if (s.sectors.contains(b.sector)) return {TxReject::kSectorExists};
          return {};
        } else if constexpr (std::is_same_v<T, PosTx>) {
          auto it = s.sectors.find(b.proof.sector_id);
          if (it == s.sectors.end()) return {TxReject::kUnknownSector};
          const SectorRecord& rec = it->second;
          if (rec.status == SectorStatus::kRemoved) return {TxReject::kSectorInactive};
          if (!owner_key_matches(genesis_, rec.owner, tx.submitter)) return {TxReject::kNotOwner};
          if (b.proof.epoch != rec.next_epoch) return {TxReject::kWrongEpoch};
          if (rec.status == SectorStatus::kActive && rec.next_epoch > 0 &&
              next < rec.last_pos_height + genesis_.config.pos_interval)
            return {TxReject::kTooEarly};
          pos::ChallengeContext ctx{
              static_cast<std::size_t>(genesis_.config.sector_size / genesis_.config.fragment_size),
              static_cast<std::size_t>(genesis_.config.fragment_size), rec.last_digest};
          if (!pos::verify_proof(rec.root, b.proof, ctx)) return {TxReject::kPosInvalid};
          return {};
        } else if constexpr (std::is_same_v<T, FaultTx>) {
          if (b.accuser >= miner_count() || b.accused >= miner_count())
            return {TxReject::kUnknownMiner};
          if (!owner_key_matches(genesis_, b.accuser, tx.submitter)) return {TxReject::kNotOwner};
          if (s.penalized.contains(b.accused)) return {TxReject::kAlreadyPenalized};
          try {
            ByteReader r(as_view(b.evidence));
            if (b.kind == FaultKind::kVoteEquivocation) {
              bft::Vote x = bft::decode_vote(r), y = bft::decode_vote(r);
              r.expect_done();
              if (x.voter != b.accused || y.voter != b.accused || !x.same_slot(y) ||
                  x.block == y.block)
                return {TxReject::kBadEvidence};
              for (const bft::Vote* v : {&x, &y})
                if (!bft::verify_statement(cache_.get(), level, key_of(b.accused),
                                           as_view(v->sign_bytes()), as_view(v->signature)))
                  return {TxReject::kBadEvidence};
              return {};
            }
            if (b.kind == FaultKind::kProposalEquivocation) {
              bft::Proposal x = bft::decode_proposal(r), y = bft::decode_proposal(r);
              r.expect_done();
              if (x.proposer != b.accused || y.proposer != b.accused || x.height != y.height ||
                  x.round != y.round || x.block == y.block)
                return {TxReject::kBadEvidence};
              for (const bft::Proposal* p : {&x, &y})
                if (!bft::verify_statement(cache_.get(), level, key_of(b.accused),
                                           as_view(p->sign_bytes()), as_view(p->signature)))
                  return {TxReject::kBadEvidence};
              return {};
            }
            ChunkAttestation a = ChunkAttestation::decode(as_view(b.evidence));
            if (a.encoder != b.accused) return {TxReject::kBadEvidence};
            if (!bft::verify_statement(cache_.get(), level, key_of(b.accused),
                                       as_view(a.sign_bytes()), as_view(a.signature)))
              return {TxReject::kBadEvidence};
            auto fit = s.files.find(a.file_id);
            if (fit == s.files.end()) return {TxReject::kUnknownFile};
            const FileManifest& m = *fit->second;
            if (a.index >= m.total_chunks()) return {TxReject::kBadEvidence};
            if (a.payload.size() != m.chunk_size) return {};  // wrong length is itself misencoding
            std::vector<hf::Fingerprint> data;
            for (std::uint64_t fp : m.fingerprints)
              data.push_back(hf::Fingerprint{hf::Gf64(fp), hf_params_.point()});
            auto gen = rs::build_generator(m.data_chunks(), m.parity_chunks());
            auto expected = hf::hf_encode(data, gen);
            if (hf::hf_verify(as_view(a.payload), expected[a.index], hf_params_))
              return {TxReject::kBadEvidence};
            return {};
          } catch (const ParseError&) {
            return {TxReject::kBadEvidence};
          }
        } else if constexpr (std::is_same_v<T, RetrieveReportTx>) {
          if (b.miner >= miner_count()) return {TxReject::kUnknownMiner};
          if (!s.files.contains(b.file_id)) return {TxReject::kUnknownFile};
          return {};
        } else {
          auto it = s.sectors.find(b.sector);
          if (it == s.sectors.end()) return {TxReject::kUnknownSector};
          const SectorRecord& rec = it->second;
          if (rec.status != SectorStatus::kActive) return {TxReject::kSectorInactive};
          if (!owner_key_matches(genesis_, rec.owner, tx.submitter)) return {TxReject::kNotOwner};
          if (rec.root != b.prev_root) return {TxReject::kStaleRoot};
          for (const Allocation& a : b.allocations) {
            if (a.length == 0 || a.offset > genesis_.config.sector_size ||
                a.length > genesis_.config.sector_size - a.offset)
              return {TxReject::kBadShape};
            if (a.released) {
              bool found = std::any_of(rec.allocations.begin(), rec.allocations.end(),
                                       [&](const Allocation& x) {
                                         return x.file_id == a.file_id && x.index == a.index;
                                       });
              if (!found) return {TxReject::kBadShape};
            } else if (!s.files.contains(a.file_id)) {
              return {TxReject::kUnknownFile};
            }
          }
          return {};
        }
      },
      tx.body);
}

void Ledger::apply_tx(const Transaction& tx, State& s) const {
  const Height h = s.height + 1;
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, StoreTx>) {
          auto m = std::make_shared<FileManifest>();
          m->id = b.file_id;
          m->fingerprints = b.fingerprints;
          m->chunk_size = b.chunk_size;
          m->file_size = b.file_size;
          m->placement = s.active_sectors();
          m->stored_at = h;
          m->expires_at = b.lifetime ? h + b.lifetime : 0;
          s.files.emplace(b.file_id, std::move(m));
        } else if constexpr (std::is_same_v<T, PledgeTx>) {
          SectorRecord rec;
          rec.owner = b.miner;
          rec.root = b.root;
          rec.status = SectorStatus::kPending;
          rec.pledged_at = h;
          rec.last_digest = pos::initial_challenge_seed(b.sector, genesis_hash_);
          s.sectors.emplace(b.sector, std::move(rec));
        } else if constexpr (std::is_same_v<T, PosTx>) {
          SectorRecord& rec = s.sectors.at(b.proof.sector_id);
          rec.last_digest = b.proof.digest();
          rec.next_epoch += 1;
          rec.last_pos_height = h;
          rec.status = SectorStatus::kActive;
        } else if constexpr (std::is_same_v<T, FaultTx>) {
          s.penalized.insert(b.accused);
          for (auto& [id, rec] : s.sectors)
            if (rec.owner == b.accused) rec.status = SectorStatus::kRemoved;
        } else if constexpr (std::is_same_v<T, RetrieveReportTx>) {
          s.failed_retrievals[b.miner] += 1;
        } else {
          SectorRecord& rec = s.sectors.at(b.sector);
          rec.root = b.new_root;
          for (const Allocation& a : b.allocations) {
            auto same = [&](const Allocation& x) {
              return x.file_id == a.file_id && x.index == a.index;
            };
            std::erase_if(rec.allocations, same);
            if (!a.released) {
              Allocation kept = a;
              kept.released = false;
              rec.allocations.push_back(kept);
            }
          }
        }
      },
      tx.body);
}

void Ledger::end_of_block(State& s) const {
  const Height h = s.height + 1;
  for (auto it = s.files.begin(); it != s.files.end();) {
    if (it->second->expires_at != 0 && it->second->expires_at <= h) {
      it = s.files.erase(it);
      ++s.expired_files;
    } else {
      ++it;
    }
  }
  const LedgerConfig& c = genesis_.config;
  for (auto& [id, rec] : s.sectors) {
    if (rec.status == SectorStatus::kPending && h > rec.pledged_at + c.pos_grace)
      rec.status = SectorStatus::kRemoved;
    else if (rec.status == SectorStatus::kActive &&
             h > rec.last_pos_height + c.pos_interval + c.pos_grace)
      rec.status = SectorStatus::kRemoved;
  }
}

TxCheck Ledger::check_block(const Block& block) const {
  constexpr std::size_t kHeader = static_cast<std::size_t>(-1);
  if (block.height != state_.height + 1 || block.parent != state_.last_block)
    return {TxReject::kBadShape, kHeader};
  State s = state_;
  std::unordered_set<Hash256, Hash256Hasher> seen;
  for (std::size_t i = 0; i < block.txs.size(); ++i) {
    const Transaction& tx = block.txs[i];
    Hash256 id = tx.id();
    if (tx_ids_.contains(id) || !seen.insert(id).second) return {TxReject::kDuplicateTx, i};
    TxCheck c = check_tx_in(tx, s);
    if (!c) return {c.reason, i};
    apply_tx(tx, s);
  }
  return {};
}

std::vector<Transaction> Ledger::select_txs(const std::vector<Transaction>& candidates,
                                            std::size_t max) const {
  std::vector<Transaction> out;
  State s = state_;
  std::unordered_set<Hash256, Hash256Hasher> seen;
  for (const Transaction& tx : candidates) {
    if (out.size() >= max) break;
    Hash256 id = tx.id();
    if (tx_ids_.contains(id) || !seen.insert(id).second) continue;
    if (!check_tx_in(tx, s)) continue;
    apply_tx(tx, s);
    out.push_back(tx);
  }
  return out;
}

bool Ledger::verify_certificate(const Block& block, const Certificate& cert) const {
  if (block.height == 0 || block.height > state_.height + 1) return false;
  const Height prev = block.height - 1;
  const WeightTable& table = weights_at(prev);
  if (table.total() == 0) return false;
  Bytes msg = bft::precommit_sign_bytes(block.height, cert.round, block.hash());
  return wts::wts_verify(as_view(msg), cert.precommits, vk_at(prev), table.quorum());
}

void Ledger::apply(const CommittedBlock& committed) {
  const Block& b = committed.block;
  if (b.height != state_.height + 1) throw LedgerError("block height is not the next height");
  TxCheck c = check_block(b);
  if (!c) throw LedgerError("invalid block: " + to_string(c.reason));
  // A locked block can be re-proposed in a later round, so the proposer is
  // the rotation's pick for some round up to the certificate's.
  {
    const WeightTable& w = weights();
    const std::uint64_t last = std::min<std::uint64_t>(committed.cert.round, w.total());
    bool in_rotation = false;
    for (std::uint64_t r = 0; r <= last && !in_rotation; ++r)
      in_rotation = b.proposer == select_proposer(b.height, static_cast<Round>(r), w);
    if (!in_rotation) throw LedgerError("block proposer does not match the rotation");
  }
  if (!verify_certificate(b, committed.cert)) throw LedgerError("invalid commit certificate");

  State s = state_;
  for (const Transaction& tx : b.txs) apply_tx(tx, s);
  end_of_block(s);
  s.height = b.height;
  s.last_block = b.hash();

  state_ = std::move(s);
  for (const Transaction& tx : b.txs) tx_ids_.insert(tx.id());
  block_hashes_.push_back(state_.last_block);
  blocks_.push_back(committed);
  push_height_view(state_.weight_table(miner_count()));
}

Hash256 Ledger::state_hash() const { return crypto::sha256(as_view(state_.canonical_bytes())); }

void Ledger::write_snapshot(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write snapshot " + path.string());
  out << "bftdsn-snapshot 1\n";
  out << "genesis " << genesis_hash_.hex() << "\n";
  out << "height " << state_.height << "\n";
  out << "last_block " << state_.last_block.hex() << "\n";
  out << "expired " << state_.expired_files << "\n";
  for (const auto& [id, s] : state_.sectors) {
    out << "sector " << id << " " << s.owner << " " << static_cast<int>(s.status) << " "
        << s.root.hex() << " " << s.pledged_at << " " << s.last_pos_height << " " << s.next_epoch
        << " " << s.last_digest.hex() << "\n";
    for (const Allocation& a : s.allocations)
      out << "alloc " << id << " " << a.file_id.hex() << " " << a.index << " " << a.offset << " "
          << a.length << "\n";
  }
  for (const auto& [id, f] : state_.files)
    out << "file " << id.hex() << " " << f->chunk_size << " " << f->file_size << " "
        << f->stored_at << " " << f->expires_at << " " << join_list(f->fingerprints, true) << " "
        << join_list(f->placement, false) << "\n";
  for (const auto& [m, c] : state_.failed_retrievals) out << "failed " << m << " " << c << "\n";
  for (MinerId m : state_.penalized) out << "penalized " << m << "\n";
  std::vector<Hash256> ids(tx_ids_.begin(), tx_ids_.end());
  std::sort(ids.begin(), ids.end());
  for (const Hash256& id : ids) out << "tx " << id.hex() << "\n";
  out << "end\n";
  if (!out) throw Error("failed writing snapshot " + path.string());
}

Ledger Ledger::from_snapshot(Genesis genesis, const std::filesystem::path& path,
                             std::shared_ptr<crypto::VerificationCache> cache) {
  Ledger l(std::move(genesis), std::move(cache));
  std::ifstream in(path);
  if (!in) throw Error("cannot read snapshot " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "bftdsn-snapshot 1")
    throw ParseError("not a version 1 snapshot");
  State s;
  std::unordered_set<Hash256, Hash256Hasher> ids;
  bool ended = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "genesis") {
      std::string h;
      ls >> h;
      if (Hash256::from_hex(h) != l.genesis_hash_) throw ParseError("snapshot genesis mismatch");
    } else if (key == "height") {
      ls >> s.height;
    } else if (key == "last_block") {
      std::string h;
      ls >> h;
      s.last_block = Hash256::from_hex(h);
    } else if (key == "expired") {
      ls >> s.expired_files;
    } else if (key == "sector") {
      SectorId id;
      SectorRecord r;
      int status;
      std::string root, digest;
      ls >> id >> r.owner >> status >> root >> r.pledged_at >> r.last_pos_height >>
          r.next_epoch >> digest;
      if (status < 0 || status > 2) throw ParseError("bad sector status");
      r.status = static_cast<SectorStatus>(status);
      r.root = Hash256::from_hex(root);
      r.last_digest = Hash256::from_hex(digest);
      s.sectors[id] = std::move(r);
    } else if (key == "alloc") {
      SectorId id;
      Allocation a;
      std::string file;
      ls >> id >> file >> a.index >> a.offset >> a.length;
      a.file_id = Hash256::from_hex(file);
      s.sectors.at(id).allocations.push_back(a);
    } else if (key == "file") {
      auto m = std::make_shared<FileManifest>();
      std::string id, fps, placement;
      ls >> id >> m->chunk_size >> m->file_size >> m->stored_at >> m->expires_at >> fps >>
          placement;
      m->id = Hash256::from_hex(id);
      m->fingerprints = parse_u64_list(fps, 16);
      m->placement = parse_u64_list(placement, 10);
      s.files[m->id] = std::move(m);
    } else if (key == "failed") {
      MinerId m;
      std::uint64_t c;
      ls >> m >> c;
      s.failed_retrievals[m] = c;
    } else if (key == "penalized") {
      MinerId m;
      ls >> m;
      s.penalized.insert(m);
    } else if (key == "tx") {
      std::string h;
      ls >> h;
      ids.insert(Hash256::from_hex(h));
    } else if (key == "end") {
      ended = true;
      break;
    } else if (!key.empty()) {
      throw ParseError("unknown snapshot key " + key);
    }
    if (ls.fail()) throw ParseError("malformed snapshot line: " + line);
  }
  if (!ended) throw ParseError("truncated snapshot");
  l.state_ = std::move(s);
  l.tx_ids_ = std::move(ids);
  l.history_base_ = l.state_.height;
  l.history_.clear();
  l.block_hashes_ = {l.state_.last_block};
  l.blocks_.clear();
  l.push_height_view(l.state_.weight_table(l.miner_count()));
  return l;
}

// ---- block log ------------------------------------------------------------

namespace {
constexpr char kLogMagic[8] = {'B', 'F', 'T', 'D', 'S', 'N', 'B', 'L'};
constexpr std::uint32_t kLogVersion = 1;

void write_record(std::ofstream& out, const CommittedBlock& b) {
  Bytes body = b.encode();
  ByteWriter w(4);
  w.u32(static_cast<std::uint32_t>(body.size()));
  out.write(reinterpret_cast<const char*>(w.bytes().data()), 4);
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
}
}  // namespace

void BlockLog::write(const std::filesystem::path& path, const std::vector<CommittedBlock>& blocks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write block log " + path.string());
  ByteWriter w;
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kLogMagic), 8)).u32(kLogVersion);
  out.write(reinterpret_cast<const char*>(w.bytes().data()), 12);
  for (const CommittedBlock& b : blocks) write_record(out, b);
  if (!out) throw Error("failed writing block log " + path.string());
}

void BlockLog::append(const std::filesystem::path& path, const CommittedBlock& block) {
  if (!std::filesystem::exists(path)) {
    write(path, {block});
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to block log " + path.string());
  write_record(out, block);
}

std::vector<CommittedBlock> BlockLog::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read block log " + path.string());
  Bytes all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(as_view(all));
  ByteView magic = r.raw(8);
  if (!std::equal(magic.begin(), magic.end(), reinterpret_cast<const std::uint8_t*>(kLogMagic)))
    throw ParseError("not a block log");
  if (r.u32() != kLogVersion) throw ParseError("unsupported block log version");
  std::vector<CommittedBlock> out;
  while (!r.done()) {
    Bytes rec = r.blob();
    out.push_back(CommittedBlock::decode(as_view(rec)));
  }
  return out;
}

Ledger replay(Genesis genesis, const std::filesystem::path& log_path,
              std::shared_ptr<crypto::VerificationCache> cache) {
  Ledger l(std::move(genesis), std::move(cache));
  for (const CommittedBlock& b : BlockLog::read(log_path)) l.apply(b);
  return l;
}

MinerId select_proposer(Height height, Round round, const WeightTable& table) {
  if (table.total() == 0) throw ConsensusError("cannot select a proposer from an empty table");
  std::uint64_t slot = (height + round) % table.total();
  const auto& w = table.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (slot < w[i]) return static_cast<MinerId>(i);
    slot -= w[i];
  }
  throw ConsensusError("proposer rotation fell off the table");
}

}  // namespace bftdsn::ledger
