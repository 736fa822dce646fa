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

#include "bftdsn/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "bftdsn/crypto.hpp"
#include "bftdsn/error.hpp"

namespace bftdsn::protocol {

namespace {

MinerId owner_of(SectorId s) { return static_cast<MinerId>(s >> 32); }

Hash256 node_seed(const Hash256& genesis, std::uint64_t role, std::uint64_t id) {
  ByteWriter w;
  w.hash(genesis).u64(role).u64(id);
  return crypto::sha256(as_view(w.bytes()));
}

std::uint64_t seed_word(const Hash256& h) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | h.bytes[i];
  return v;
}

sim::Payload pack(const Message& m) { return std::make_shared<const Bytes>(encode_message(m)); }

sim::Lane lane_of(const Message& m) { return is_bulk(m) ? sim::Lane::kBulk : sim::Lane::kControl; }

std::vector<std::uint64_t> encoded_fingerprints(const ledger::FileManifest& m,
                                                const hf::FingerprintParams& params) {
  std::vector<hf::Fingerprint> data;
  data.reserve(m.data_chunks());
  for (std::uint64_t fp : m.fingerprints) data.push_back({hf::Gf64(fp), params.point()});
  auto all = hf::hf_encode(data, generator_for(m.data_chunks(), m.parity_chunks()));
  std::vector<std::uint64_t> out;
  out.reserve(all.size());
  for (const auto& f : all) out.push_back(f.value.value);
  return out;
}

}  // namespace

// ---- parameters -----------------------------------------------------------

ProtocolParams choose_params(std::uint64_t n) {
  if (n < 4) throw ParameterError("at least 4 sectors are needed to tolerate a fault");
  const std::uint64_t f = ledger::compute_f(n);
  return {n, f, n - f, f};
}

std::uint64_t chunk_size_for(std::uint64_t file_size, std::uint64_t k) {
  if (k == 0) throw ParameterError("k must be positive");
  const std::uint64_t unit = 8 * k;
  return (file_size + unit - 1) / unit * 8;
}

std::vector<Bytes> split_file(ByteView file, std::uint64_t k, std::uint64_t chunk_size) {
  if (chunk_size * k < file.size()) throw ShapeError("chunks too small for the file");
  std::vector<Bytes> out(k, Bytes(chunk_size, 0));
  for (std::uint64_t i = 0; i < k; ++i) {
    const std::uint64_t begin = i * chunk_size;
    if (begin >= file.size()) break;
    const std::uint64_t len = std::min<std::uint64_t>(chunk_size, file.size() - begin);
    std::copy_n(file.begin() + static_cast<std::ptrdiff_t>(begin), len, out[i].begin());
  }
  return out;
}

Bytes join_chunks(std::span<const Bytes> data, std::uint64_t file_size) {
  Bytes out;
  for (const Bytes& d : data) out.insert(out.end(), d.begin(), d.end());
  if (out.size() < file_size) throw ShapeError("chunks shorter than the file");
  out.resize(file_size);
  return out;
}

ledger::StoreTx prepare_store(ByteView file, const ProtocolParams& params,
                              const hf::FingerprintParams& fp_params, Height lifetime) {
  if (file.empty()) throw ParameterError("cannot store an empty file");
  ledger::StoreTx tx;
  tx.chunk_size = chunk_size_for(file.size(), params.k);
  tx.file_size = file.size();
  tx.lifetime = lifetime;
  for (const Bytes& d : split_file(file, params.k, tx.chunk_size))
    tx.fingerprints.push_back(hf::hf_compute(as_view(d), fp_params).value.value);
  tx.file_id = ledger::file_id_of(tx.fingerprints);
  return tx;
}

bool file_matches(ByteView data, const ledger::FileManifest& manifest,
                  const hf::FingerprintParams& fp_params) {
  if (data.size() != manifest.file_size || manifest.chunk_size == 0) return false;
  std::vector<std::uint64_t> fps;
  for (const Bytes& d : split_file(data, manifest.data_chunks(), manifest.chunk_size))
    fps.push_back(hf::hf_compute(as_view(d), fp_params).value.value);
  return ledger::file_id_of(fps) == manifest.id;
}

const rs::GeneratorMatrix& generator_for(std::size_t k, std::size_t m) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<rs::GeneratorMatrix>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{k, m}];
  if (!slot) slot = std::make_unique<rs::GeneratorMatrix>(rs::build_generator(k, m));
  return *slot;
}

Time transfer_timeout(const sim::LinkPolicy& link, std::uint64_t bytes) {
  const Time d = link.delta;
  const double per_window = link.bytes_per_ms * static_cast<double>(d) / 1000.0;
  const auto windows = static_cast<Time>(std::ceil(2.0 * static_cast<double>(bytes) / per_window));
  return 4 * d + 4 * d * windows;
}

MinerId sample_by_weight(const ledger::WeightTable& table, std::mt19937_64& rng) {
  if (table.total() == 0) throw ParameterError("no miner has weight");
  std::uint64_t x = std::uniform_int_distribution<std::uint64_t>(0, table.total() - 1)(rng);
  const auto& w = table.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (x < w[i]) return static_cast<MinerId>(i);
    x -= w[i];
  }
  return static_cast<MinerId>(w.size() - 1);
}

// ---- miner: plumbing ------------------------------------------------------

MinerNode::MinerNode(const Deployment& deployment, MinerId id, crypto::KeyPair key,
                     std::map<SectorId, pos::SectorTree> sectors, std::shared_ptr<Behavior> behavior)
    : dep_(deployment),
      id_(id),
      key_(std::move(key)),
      behavior_(behavior ? std::move(behavior) : std::make_shared<Behavior>()),
      ledger_(*deployment.genesis, deployment.cache),
      core_(id, deployment.config.delta),
      rng_(seed_word(node_seed(ledger_.genesis_hash(), 1, id))) {
  const std::uint64_t size = ledger_.config().sector_size;
  for (auto& [sid, tree] : sectors) {
    SectorStore s;
    s.versions.emplace(tree.root(), tree);
    s.latest = std::move(tree);
    s.free.emplace(0, size);
    sectors_.emplace(sid, std::move(s));
  }
}

Time MinerNode::now() const { return dep_.sim->now(); }

void MinerNode::start() {
  begin_height();
  timer(8 * bft::round_timeout(dep_.config.delta, 0), [this] { heartbeat(); });
}

std::uint64_t MinerNode::timer(Time delay, std::function<void()> fn) {
  const std::uint64_t tag = next_timer_++;
  timers_.emplace(tag, std::move(fn));
  dep_.sim->schedule(id_, delay, tag);
  return tag;
}

void MinerNode::on_timer(std::uint64_t tag) {
  auto it = timers_.find(tag);
  if (it == timers_.end()) return;
  auto fn = std::move(it->second);
  timers_.erase(it);
  fn();
}

void MinerNode::send_to(NodeIndex to, const Message& m) { dep_.sim->send(id_, to, pack(m), lane_of(m)); }

void MinerNode::broadcast(const Message& m) {
  auto payload = pack(m);
  for (NodeIndex j = 0; j < dep_.miner_count; ++j)
    if (j != id_) dep_.sim->send(id_, j, payload, lane_of(m));
}

void MinerNode::send_consensus(const Message& a, const std::optional<Message>& b) {
  if (!b) {
    broadcast(a);
    return;
  }
  // Peers split three ways: one version, the other, or both.
  auto pa = pack(a), pb = pack(*b);
  for (NodeIndex j = 0; j < dep_.miner_count; ++j) {
    if (j == id_) continue;
    const NodeIndex group = j % 3;
    if (group != 1) dep_.sim->send(id_, j, pa);
    if (group != 0) dep_.sim->send(id_, j, pb);
  }
}

void MinerNode::on_message(NodeIndex from, const sim::Payload& payload) {
  Message m;
  try {
    m = decode_message(as_view(*payload));
  } catch (const ParseError&) {
    return;
  }
  dispatch(from, m);
}

void MinerNode::dispatch(NodeIndex from, const Message& m) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ProposalMsg>) {
          if (admit_height(x.proposal.height, from, m)) feed_proposal(x, false);
        } else if constexpr (std::is_same_v<T, VoteMsg>) {
          if (admit_height(x.vote.height, from, m)) feed_vote(x.vote);
        } else if constexpr (std::is_same_v<T, CommitMsg>) {
          if (x.committed.block.height == ledger_.height() + 1) commit(x.committed, std::nullopt);
        } else if constexpr (std::is_same_v<T, TxMsg>) {
          on_tx(x.tx);
        } else if constexpr (std::is_same_v<T, FileTransferMsg>) {
          on_file(x, from);
        } else if constexpr (std::is_same_v<T, ChunkMsg>) {
          on_chunk(x);
        } else if constexpr (std::is_same_v<T, PartialsMsg>) {
          on_partials(x, from);
        } else if constexpr (std::is_same_v<T, ChunkRequestMsg>) {
          on_chunk_request(x, from);
        } else if constexpr (std::is_same_v<T, ChunkResponseMsg>) {
          on_chunk_response(x, from);
        } else if constexpr (std::is_same_v<T, GetRequestMsg>) {
          on_get(x, from);
        }
        // AckMsg and GetResponseMsg are for clients.
      },
      m);
}

// ---- miner: consensus -----------------------------------------------------

bool MinerNode::admit_height(Height h, NodeIndex from, const Message& m) {
  const Height next = ledger_.height() + 1;
  if (h < next) {
    reply_commit(from, h);
    return false;
  }
  if (h == next && core_.height() == next) return true;
  if (h <= next + 1 && future_.size() < 50'000) future_.emplace_back(from, m);
  return false;
}

void MinerNode::reply_commit(NodeIndex to, Height h) {
  if (to >= dep_.miner_count || h == 0 || h > ledger_.height()) return;
  const Time t = now();
  const Time gap = bft::round_timeout(dep_.config.delta, 0);
  auto applied = applied_at_.find(h);
  if (applied != applied_at_.end() && t - applied->second < gap) return;
  auto [it, fresh] = commit_replies_.try_emplace({to, h}, t);
  if (!fresh) {
    if (t - it->second < 2 * gap) return;
    it->second = t;
  }
  send_to(to, CommitMsg{ledger_.blocks()[h - 1]});
  ++stats_.commits_sent;
}

void MinerNode::heartbeat() {
  if (ledger_.height() == heartbeat_height_)
    for (const Message& m : own_messages_) broadcast(m);
  heartbeat_height_ = ledger_.height();
  timer(8 * bft::round_timeout(dep_.config.delta, 0), [this] { heartbeat(); });
}

void MinerNode::begin_height() {
  waiting_next_ = false;
  pending_decision_.reset();
  own_messages_.clear();
  local_.clear();
  equivocation_seen_ = false;
  relayed_locks_.clear();
  const Height h = ledger_.height() + 1;
  std::erase_if(blocks_, [h](const auto& kv) { return kv.second.height < h; });
  std::erase_if(block_verdicts_, [this](const auto& kv) { return !blocks_.contains(kv.first); });
  std::erase_if(commit_replies_, [h](const auto& kv) { return kv.first.second + 16 < h; });
  std::erase_if(applied_at_, [h](const auto& kv) { return kv.first + 16 < h; });
  process(core_.start_height(h, ledger_.weights(), [this] { return build_block(); }));
  drain();
  auto buffered = std::move(future_);
  future_.clear();
  for (auto& [from, m] : buffered) dispatch(from, m);
}

Hash256 MinerNode::build_block() {
  ledger::Block b;
  b.height = ledger_.height() + 1;
  b.parent = ledger_.state().last_block;
  b.proposer = id_;
  b.timestamp = now();
  std::vector<ledger::Transaction> candidates;
  candidates.reserve(mempool_.size());
  for (const auto& e : mempool_) candidates.push_back(e.tx);
  b.txs = ledger_.select_txs(candidates, dep_.config.max_block_txs);
  Hash256 h = b.hash();
  block_verdicts_[h] = true;
  blocks_[h] = std::move(b);
  return h;
}

bool MinerNode::block_valid(const ledger::Block& b, const bft::Proposal& p) {
  if (p.valid_round < 0) {
    if (b.proposer != p.proposer) return false;
  } else {
    bool in_rotation = false;
    const auto last = std::min<std::int64_t>(p.valid_round, static_cast<std::int64_t>(ledger_.weights().total()));
    for (std::int64_t r = 0; r <= last && !in_rotation; ++r)
      in_rotation = b.proposer == ledger::select_proposer(b.height, static_cast<bft::Round>(r), ledger_.weights());
    if (!in_rotation) return false;
  }
  const Hash256 h = p.block;
  if (auto it = block_verdicts_.find(h); it != block_verdicts_.end()) return it->second;
  bool ok = b.height == ledger_.height() + 1 && ledger_.check_block(b).ok();
  block_verdicts_[h] = ok;
  return ok;
}

void MinerNode::process(const bft::Outputs& outs) {
  for (const bft::Output& o : outs) {
    if (auto* p = std::get_if<bft::Proposal>(&o)) {
      auto it = blocks_.find(p->block);
      if (it == blocks_.end()) continue;
      bft::Proposal signed_p = *p;
      signed_p.signature = bft::sign_statement(key_, as_view(signed_p.sign_bytes()));
      ProposalMsg msg{signed_p, it->second};
      std::optional<Message> other;
      if (behavior_->equivocate()) {
        ledger::Block alt = it->second;
        alt.timestamp += 1;
        bft::Proposal q = *p;
        q.block = alt.hash();
        q.signature = bft::sign_statement(key_, as_view(q.sign_bytes()));
        blocks_[q.block] = alt;
        other = ProposalMsg{q, alt};
      }
      send_consensus(msg, other);
      own_messages_.push_back(msg);
      local_.push_back(msg);
    } else if (auto* v = std::get_if<bft::Vote>(&o)) {
      if (core_.table().weight(id_) == 0) continue;
      bft::Vote sv = *v;
      sv.signature = bft::sign_statement(key_, as_view(sv.sign_bytes()));
      std::optional<Message> other;
      if (behavior_->equivocate()) {
        bft::Vote w = *v;
        if (w.block) {
          w.block.reset();
        } else {
          ByteWriter bw;
          bw.str("conflict").u64(w.height).u32(w.round);
          w.block = crypto::sha256(as_view(bw.bytes()));
        }
        w.signature = bft::sign_statement(key_, as_view(w.sign_bytes()));
        other = VoteMsg{w};
      }
      send_consensus(VoteMsg{sv}, other);
      own_messages_.push_back(VoteMsg{sv});
      local_.push_back(sv);
      if (!behavior_->honest()) continue;
      if (sv.type == bft::VoteType::kPrecommit && sv.block && (sv.round > 0 || equivocation_seen_))
        relay_lock(sv.round, *sv.block);
      if (sv.round > 0 && core_.valid_round() >= 0 && core_.valid_value())
        relay_lock(static_cast<bft::Round>(core_.valid_round()), *core_.valid_value());
    } else if (auto* t = std::get_if<bft::ScheduleTimeout>(&o)) {
      const bft::ScheduleTimeout st = *t;
      timer(st.delay, [this, st] {
        if (core_.height() != st.height || waiting_next_) return;
        process(core_.on_timeout(st.height, st.round, st.step));
        drain();
      });
    } else if (auto* d = std::get_if<bft::Decision>(&o)) {
      decide(*d);
    } else if (auto* e = std::get_if<bft::VoteEvidence>(&o)) {
      equivocation_seen_ = true;
      if (!dep_.config.report_equivocation) continue;
      ByteWriter w;
      bft::encode_vote(w, e->first);
      bft::encode_vote(w, e->second);
      file_fault(e->first.voter, ledger::FaultKind::kVoteEquivocation, std::move(w).take());
    } else if (auto* pe = std::get_if<bft::ProposalEvidence>(&o)) {
      equivocation_seen_ = true;
      if (!dep_.config.report_equivocation) continue;
      ByteWriter w;
      bft::encode_proposal(w, pe->first);
      bft::encode_proposal(w, pe->second);
      file_fault(pe->first.proposer, ledger::FaultKind::kProposalEquivocation, std::move(w).take());
    }
  }
}

// Peers may hold different halves of an equivocator's votes, so a lock seen
// here can be invisible elsewhere. Forward the prevotes behind it once.
void MinerNode::relay_lock(bft::Round round, const Hash256& block) {
  if (!relayed_locks_.insert(round).second) return;
  for (const bft::Vote& v : core_.prevotes_for(round, block))
    if (v.voter != id_) broadcast(VoteMsg{v});
}

void MinerNode::drain() {
  if (draining_) return;
  draining_ = true;
  while (!local_.empty()) {
    auto item = std::move(local_.front());
    local_.pop_front();
    if (waiting_next_) continue;
    if (auto* p = std::get_if<ProposalMsg>(&item)) {
      process(core_.on_proposal(p->proposal, true));
    } else {
      try {
        process(core_.on_vote(std::get<bft::Vote>(item)));
      } catch (const ConsensusError&) {
      }
    }
  }
  draining_ = false;
}

void MinerNode::feed_proposal(const ProposalMsg& m, bool /*local*/) {
  const bft::Proposal& p = m.proposal;
  if (p.proposer >= ledger_.miner_count() || waiting_next_) return;
  if (!bft::verify_statement(ledger_.cache(), ledger_.config().level,
                             as_view(ledger_.genesis().miner_keys[p.proposer]),
                             as_view(p.sign_bytes()), as_view(p.signature)))
    return;
  if (m.block.hash() != p.block) return;
  blocks_.try_emplace(p.block, m.block);
  const bool ok = block_valid(m.block, p);
  process(core_.on_proposal(p, ok));
  drain();
  if (pending_decision_ && pending_decision_->block == p.block) {
    auto d = *pending_decision_;
    pending_decision_.reset();
    decide(d);
  }
}

void MinerNode::feed_vote(const bft::Vote& v) {
  if (v.voter >= ledger_.miner_count() || waiting_next_) return;
  if (!bft::verify_statement(ledger_.cache(), ledger_.config().level,
                             as_view(ledger_.genesis().miner_keys[v.voter]), as_view(v.sign_bytes()),
                             as_view(v.signature)))
    return;
  try {
    process(core_.on_vote(v));
  } catch (const ConsensusError&) {
    return;
  }
  drain();
}

void MinerNode::decide(const bft::Decision& d) {
  decided_rounds_[d.height] = d.round;
  auto it = blocks_.find(d.block);
  if (it == blocks_.end()) {
    pending_decision_ = d;
    return;
  }
  ledger::CommittedBlock cb;
  cb.block = it->second;
  cb.cert.round = d.round;
  const Hash256 digest = crypto::sha256(as_view(bft::precommit_sign_bytes(d.height, d.round, d.block)));
  for (const bft::Vote& v : core_.precommits_for(d.round, d.block))
    cb.cert.precommits.parts.push_back({v.voter, digest, v.signature});
  commit(cb, d.round);
}

void MinerNode::commit(const ledger::CommittedBlock& cb, std::optional<bft::Round> /*round*/) {
  try {
    ledger_.apply(cb);
  } catch (const LedgerError&) {
    return;
  }
  const Height h = cb.block.height;
  applied_at_[h] = now();
  waiting_next_ = true;
  pending_decision_.reset();
  local_.clear();
  after_commit(cb);
  if (commit_observer_) commit_observer_(*this, cb);
  timer(dep_.config.commit_wait, [this] {
    if (core_.height() <= ledger_.height()) begin_height();
  });
}

void MinerNode::file_fault(MinerId accused, ledger::FaultKind kind, Bytes evidence) {
  if (accused >= ledger_.miner_count() || accused == id_) return;
  if (ledger_.state().penalized.contains(accused) || !accused_.insert(accused).second) return;
  submit(ledger::FaultTx{id_, accused, kind, std::move(evidence)});
  ++stats_.faults_filed;
}

// ---- miner: transactions --------------------------------------------------

ledger::Transaction MinerNode::submit(ledger::TxBody body) {
  ledger::Transaction tx = ledger::make_tx(std::move(body), key_);
  on_tx(tx);
  broadcast(TxMsg{tx});
  return tx;
}

void MinerNode::on_tx(const ledger::Transaction& tx) {
  const Hash256 id = tx.id();
  if (mempool_ids_.contains(id) || ledger_.has_tx(id)) return;
  if (!ledger_.check_tx(tx)) return;
  mempool_ids_.insert(id);
  mempool_.push_back({tx, ledger_.height()});
}

void MinerNode::purge_mempool() {
  const Height h = ledger_.height();
  const Height ttl = dep_.config.mempool_ttl;
  std::erase_if(mempool_, [&](const MempoolEntry& e) {
    const Hash256 id = e.tx.id();
    if (ledger_.has_tx(id) || e.seen_at + ttl < h) {
      mempool_ids_.erase(id);
      return true;
    }
    return false;
  });
}

// ---- miner: storage roles -------------------------------------------------

std::uint64_t MinerNode::chunk_threshold(const ledger::FileManifest& m) const {
  return ledger::compute_f(m.total_chunks()) + 1;
}

std::uint64_t MinerNode::stored_chunk_bytes() const {
  std::uint64_t total = 0;
  for (const auto& [key, hc] : hosted_)
    if (hc.kept) total += hc.length;
  return total;
}

void MinerNode::after_commit(const ledger::CommittedBlock& cb) {
  purge_mempool();
  for (const ledger::Transaction& tx : cb.block.txs) {
    const auto* store = std::get_if<ledger::StoreTx>(&tx.body);
    if (!store) continue;
    auto m = ledger_.manifest(store->file_id);
    if (!m) continue;
    sign_partials(*m);
    if (auto ep = early_partials_.find(m->id); ep != early_partials_.end()) {
      auto msgs = std::move(ep->second);
      early_partials_.erase(ep);
      for (const PartialsMsg& p : msgs) on_partials(p, p.signer);
    }
    if (auto ec = early_chunks_.find(m->id); ec != early_chunks_.end()) {
      auto msgs = std::move(ec->second);
      early_chunks_.erase(ec);
      for (const ChunkMsg& c : msgs) on_chunk(c);
    }
    if (auto ej = encode_jobs_.find(m->id); ej != encode_jobs_.end()) {
      auto jobs = std::move(ej->second);
      encode_jobs_.erase(ej);
      for (const EncodeJob& j : jobs) encode(*m, j);
    }
  }
  // Chunks whose aggregate never formed are dropped after a while.
  const Time ttl = 50 * bft::round_timeout(dep_.config.delta, 0);
  const Time t = now();
  for (auto& [key, hc] : hosted_) {
    const std::size_t before = hc.waiting.size();
    std::erase_if(hc.waiting, [&](const auto& w) { return t - w.first > ttl; });
    waiting_chunks_ -= before - hc.waiting.size();
  }
  maintain_sectors();
  behavior_->on_height(*this);
}

void MinerNode::sign_partials(const ledger::FileManifest& m) {
  if (ledger::file_id_of(m.fingerprints) != m.id) return;
  if (ledger_.vk_at(m.stored_at).weight(id_) == 0) return;
  const auto expected = encoded_fingerprints(m, ledger_.fingerprint_params());
  std::map<MinerId, PartialsMsg> batches;
  const wts::SigningKey sk{id_, key_};
  for (std::uint32_t i = 0; i < m.total_chunks(); ++i) {
    const MinerId host = owner_of(m.placement[i]);
    const std::uint64_t fp = behavior_->fingerprint_to_sign(m.id, i, expected[i]);
    auto part = wts::wts_psign(as_view(chunk_statement(m.id, i, fp)), sk);
    PartialsMsg& b = batches[host];
    b.file_id = m.id;
    b.signer = id_;
    b.entries.push_back({i, fp, std::move(part.tag)});
    ++stats_.partials_signed;
  }
  for (auto& [host, msg] : batches) {
    if (host == id_) on_partials(msg, id_);
    else send_to(host, msg);
  }
}

void MinerNode::on_partials(const PartialsMsg& msg, NodeIndex from) {
  if (msg.signer != from) return;
  auto m = ledger_.manifest(msg.file_id);
  if (!m) {
    auto& q = early_partials_[msg.file_id];
    if (q.size() < 4 * dep_.miner_count && early_partials_.size() < 4096) q.push_back(msg);
    return;
  }
  for (const PartialEntry& e : msg.entries) {
    if (e.index >= m->total_chunks()) continue;
    const SectorId sector = m->placement[e.index];
    if (owner_of(sector) != id_) continue;
    HostedChunk& hc = hosted_[{m->id, e.index}];
    hc.sector = sector;
    if (hc.fingerprint || !hc.signers.insert(msg.signer).second) continue;
    const Hash256 digest = crypto::sha256(as_view(chunk_statement(m->id, e.index, e.fingerprint)));
    hc.groups[e.fingerprint].push_back({msg.signer, digest, e.tag});
    try_aggregate(*m, e.index, hc);
  }
}

void MinerNode::try_aggregate(const ledger::FileManifest& m, std::uint32_t index, HostedChunk& hc) {
  const wts::VerificationKey& vk = ledger_.vk_at(m.stored_at);
  const std::uint64_t t = chunk_threshold(m);
  for (auto& [fp, parts] : hc.groups) {
    std::uint64_t claimed = 0;
    for (const auto& p : parts) claimed += vk.weight(p.signer);
    if (claimed < t) continue;
    const Bytes statement = chunk_statement(m.id, index, fp);
    auto res = wts::wts_aggregate(parts, vk.aggregation_key(), crypto::sha256(as_view(statement)));
    stats_.partials_rejected += res.rejected.size();
    if (wts::wts_verify(as_view(statement), res.signature, vk, t)) {
      hc.fingerprint = fp;
      hc.aggregate = std::move(res.signature);
      hc.groups.clear();
      ++stats_.aggregates_formed;
      auto waiting = std::move(hc.waiting);
      hc.waiting.clear();
      waiting_chunks_ -= waiting.size();
      for (const auto& w : waiting) accept_chunk(m, hc, w.second);
      return;
    }
    parts = std::move(res.signature.parts);
  }
}

void MinerNode::on_chunk(const ChunkMsg& c) {
  const ledger::ChunkAttestation& a = c.attestation;
  auto m = ledger_.manifest(a.file_id);
  if (!m) {
    auto& q = early_chunks_[a.file_id];
    if (q.size() < 256 && early_chunks_.size() < 1024) q.push_back(c);
    return;
  }
  if (a.index >= m->total_chunks() || owner_of(m->placement[a.index]) != id_) return;
  if (a.encoder >= ledger_.miner_count()) return;
  if (!bft::verify_statement(ledger_.cache(), ledger_.config().level,
                             as_view(ledger_.genesis().miner_keys[a.encoder]),
                             as_view(a.sign_bytes()), as_view(a.signature)))
    return;
  HostedChunk& hc = hosted_[{m->id, a.index}];
  hc.sector = m->placement[a.index];
  if (!hc.fingerprint) {
    if (waiting_chunks_ < dep_.config.chunk_buffer_limit) {
      hc.waiting.emplace_back(now(), c);
      ++waiting_chunks_;
    }
    return;
  }
  accept_chunk(*m, hc, c);
}

void MinerNode::accept_chunk(const ledger::FileManifest& m, HostedChunk& hc, const ChunkMsg& c) {
  const ledger::ChunkAttestation& a = c.attestation;
  const Bytes& payload = a.payload;
  AckMsg ack{c.session, m.id, a.index, false, {}};
  const bool ok = payload.size() == m.chunk_size &&
                  hf::hf_compute(as_view(payload), ledger_.fingerprint_params()).value.value ==
                      *hc.fingerprint;
  if (!ok) {
    ++stats_.chunks_rejected;
    ack.evidence = a.encode();
    file_fault(a.encoder, ledger::FaultKind::kBadChunk, ack.evidence);
    send_to(c.client, ack);
    return;
  }
  ack.stored = true;
  if (!hc.stored) {
    hc.stored = true;
    hc.length = m.chunk_size;
    if (behavior_->keep_chunk(m, a.index)) {
      auto s = sectors_.find(hc.sector);
      std::optional<std::uint64_t> off;
      if (s != sectors_.end()) off = allocate(s->second, m.chunk_size);
      if (off) {
        s->second.latest = pos::update_tree(s->second.latest, *off, as_view(payload));
        s->second.unsynced.push_back({m.id, a.index, *off, m.chunk_size, false});
        hc.kept = true;
        hc.offset = *off;
        ++stats_.chunks_stored;
      } else {
        hc.stored = false;
        ack.stored = false;
      }
    }
  }
  send_to(c.client, ack);
}

std::optional<std::uint64_t> MinerNode::allocate(SectorStore& s, std::uint64_t length) {
  for (auto it = s.free.begin(); it != s.free.end(); ++it) {
    if (it->second < length) continue;
    const std::uint64_t off = it->first;
    const std::uint64_t rest = it->second - length;
    s.free.erase(it);
    if (rest > 0) s.free.emplace(off + length, rest);
    return off;
  }
  return std::nullopt;
}

void MinerNode::on_file(const FileTransferMsg& msg, NodeIndex from) {
  EncodeJob job{msg.session, from, msg.data};
  if (auto m = ledger_.manifest(msg.file_id)) {
    encode(*m, job);
    return;
  }
  auto& q = encode_jobs_[msg.file_id];
  if (q.size() < 8 && encode_jobs_.size() < 256) q.push_back(std::move(job));
}

void MinerNode::encode(const ledger::FileManifest& m, const EncodeJob& job) {
  if (job.data.size() != m.file_size) return;
  auto data = split_file(as_view(job.data), m.data_chunks(), m.chunk_size);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (hf::hf_compute(as_view(data[i]), ledger_.fingerprint_params()).value.value != m.fingerprints[i])
      return;
  rs::ChunkSet chunks = rs::rs_encode(data, generator_for(m.data_chunks(), m.parity_chunks()));
  behavior_->alter_encoding(m, chunks);
  for (rs::Chunk& ch : chunks) {
    ChunkMsg msg;
    msg.session = job.session;
    msg.client = job.client;
    msg.attestation.file_id = m.id;
    msg.attestation.index = static_cast<std::uint32_t>(ch.index - 1);
    msg.attestation.payload = std::move(ch.payload);
    msg.attestation.encoder = id_;
    msg.attestation.signature = bft::sign_statement(key_, as_view(msg.attestation.sign_bytes()));
    send_to(owner_of(m.placement[msg.attestation.index]), msg);
  }
  ++stats_.files_encoded;
}

void MinerNode::on_get(const GetRequestMsg& msg, NodeIndex from) {
  const GetAction act = behavior_->on_get_request(msg.file_id);
  if (act == GetAction::kStall) return;
  auto m = ledger_.manifest(msg.file_id);
  if (act == GetAction::kGarbage) {
    Bytes junk(m ? m->file_size : 64);
    for (auto& b : junk) b = static_cast<std::uint8_t>(rng_());
    send_to(from, GetResponseMsg{msg.session, msg.file_id, true, std::move(junk)});
    return;
  }
  if (!m) {
    send_to(from, GetResponseMsg{msg.session, msg.file_id, false, {}});
    return;
  }
  const std::uint64_t job = next_job_++;
  RetrievalJob& r = retrievals_[job];
  r.session = msg.session;
  r.client = from;
  r.manifest = m;
  std::map<MinerId, ChunkRequestMsg> requests;
  for (std::uint32_t i = 0; i < m->total_chunks(); ++i) {
    ChunkRequestMsg& q = requests[owner_of(m->placement[i])];
    q.job = job;
    q.file_id = m->id;
    q.indices.push_back(i);
  }
  for (auto& [host, q] : requests) send_to(host, q);
  r.deadline = timer(transfer_timeout(dep_.sim->policy(), m->file_size),
                     [this, job] { finish_retrieval(job, false); });
}

void MinerNode::on_chunk_request(const ChunkRequestMsg& msg, NodeIndex from) {
  auto m = ledger_.manifest(msg.file_id);
  if (!m) return;
  for (std::uint32_t i : msg.indices) {
    auto it = hosted_.find({msg.file_id, i});
    if (it == hosted_.end() || !it->second.fingerprint || !it->second.stored) continue;
    const HostedChunk& hc = it->second;
    std::optional<Bytes> stored;
    if (hc.kept) {
      const Bytes& data = sectors_.at(hc.sector).latest.data();
      const auto begin = data.begin() + static_cast<std::ptrdiff_t>(hc.offset);
      stored = Bytes(begin, begin + static_cast<std::ptrdiff_t>(hc.length));
    }
    auto served = behavior_->serve_chunk(*m, i, stored ? &*stored : nullptr);
    if (!served) continue;
    send_to(from, ChunkResponseMsg{msg.job, msg.file_id, i, std::move(*served), *hc.fingerprint,
                                   hc.aggregate});
  }
}

void MinerNode::on_chunk_response(const ChunkResponseMsg& msg, NodeIndex from) {
  auto it = retrievals_.find(msg.job);
  if (it == retrievals_.end() || it->second.done) return;
  RetrievalJob& r = it->second;
  const ledger::FileManifest& m = *r.manifest;
  if (msg.file_id != m.id || msg.index >= m.total_chunks()) return;
  if (owner_of(m.placement[msg.index]) != from || r.verified.contains(msg.index)) return;
  const bool ok =
      msg.payload.size() == m.chunk_size &&
      hf::hf_compute(as_view(msg.payload), ledger_.fingerprint_params()).value.value ==
          msg.fingerprint &&
      wts::wts_verify(as_view(chunk_statement(m.id, msg.index, msg.fingerprint)), msg.aggregate,
                      ledger_.vk_at(m.stored_at), chunk_threshold(m));
  if (!ok) {
    ++stats_.chunk_responses_rejected;
    return;
  }
  r.verified.emplace(msg.index, msg.payload);
  if (r.verified.size() < m.data_chunks()) return;
  std::vector<rs::Chunk> subset;
  for (auto& [index, payload] : r.verified) {
    subset.push_back({index + 1, payload});
    if (subset.size() == m.data_chunks()) break;
  }
  Bytes file;
  try {
    auto data = rs::rs_decode(subset, generator_for(m.data_chunks(), m.parity_chunks()),
                              m.data_chunks());
    file = join_chunks(data, m.file_size);
  } catch (const Error&) {
    finish_retrieval(msg.job, false);
    return;
  }
  send_to(r.client, GetResponseMsg{r.session, m.id, true, std::move(file)});
  ++stats_.retrievals_served;
  timers_.erase(r.deadline);
  retrievals_.erase(it);
}

void MinerNode::finish_retrieval(std::uint64_t job, bool ok) {
  auto it = retrievals_.find(job);
  if (it == retrievals_.end()) return;
  if (!ok) {
    send_to(it->second.client, GetResponseMsg{it->second.session, it->second.manifest->id, false, {}});
    ++stats_.retrievals_failed;
  }
  timers_.erase(it->second.deadline);
  retrievals_.erase(it);
}

const pos::SectorTree* MinerNode::tree_for(const SectorStore& s, const Hash256& root) const {
  if (s.latest.root() == root) return &s.latest;
  auto it = s.versions.find(root);
  return it == s.versions.end() ? nullptr : &it->second;
}

void MinerNode::maintain_sectors() {
  const Height next = ledger_.height() + 1;
  const ledger::LedgerConfig& cfg = ledger_.config();
  const auto& files = ledger_.state().files;
  for (auto& [sid, s] : sectors_) {
    const ledger::SectorRecord* rec = ledger_.sector(sid);
    if (!rec || rec->status == ledger::SectorStatus::kRemoved) continue;

    if (s.pending) {
      const Hash256 tx_id = s.pending->id();
      if (ledger_.has_tx(tx_id)) {
        s.pending.reset();
        s.pending_root.reset();
        s.pending_allocs.clear();
      } else if (next > s.pending_since + dep_.config.mempool_ttl || !ledger_.check_tx(*s.pending)) {
        s.unsynced.insert(s.unsynced.begin(), s.pending_allocs.begin(), s.pending_allocs.end());
        s.pending.reset();
        s.pending_root.reset();
        s.pending_allocs.clear();
      } else {
        continue;
      }
    }

    // Release chunks of files that left the ledger.
    std::erase_if(s.releasing, [&](const ChunkKey& k) {
      return std::none_of(rec->allocations.begin(), rec->allocations.end(),
                          [&](const ledger::Allocation& a) { return a.file_id == k.file && a.index == k.index; });
    });
    for (const ledger::Allocation& a : rec->allocations) {
      if (files.contains(a.file_id) || s.releasing.contains({a.file_id, a.index})) continue;
      ledger::Allocation rel = a;
      rel.released = true;
      s.unsynced.push_back(rel);
      s.releasing.insert({a.file_id, a.index});
      s.free.emplace(a.offset, a.length);
      hosted_.erase({a.file_id, a.index});
    }
    std::erase_if(s.unsynced, [&](const ledger::Allocation& a) {
      if (a.released || files.contains(a.file_id)) return false;
      s.free.emplace(a.offset, a.length);
      hosted_.erase({a.file_id, a.index});
      return true;
    });

    const pos::SectorTree* chain_tree = tree_for(s, rec->root);
    const bool pos_due = rec->status == ledger::SectorStatus::kPending ||
                         next >= rec->last_pos_height + cfg.pos_interval;
    if (pos_due && chain_tree) {
      const std::size_t leaf = pos::challenge_index(rec->last_digest, chain_tree->leaf_count());
      s.pending = submit(ledger::PosTx{pos::prove(*chain_tree, leaf, sid, rec->next_epoch)});
      s.pending_since = next;
    } else if (!s.unsynced.empty() || s.latest.root() != rec->root) {
      ledger::SectorUpdateTx u{sid, rec->root, s.latest.root(), s.unsynced};
      s.versions.insert_or_assign(s.latest.root(), s.latest);
      s.pending_root = s.latest.root();
      s.pending_allocs = std::move(s.unsynced);
      s.unsynced.clear();
      s.pending = submit(std::move(u));
      s.pending_since = next;
    }

    std::erase_if(s.versions, [&](const auto& kv) {
      return kv.first != rec->root && kv.first != s.latest.root() &&
             !(s.pending_root && kv.first == *s.pending_root);
    });
    if (!s.versions.contains(rec->root) && chain_tree) s.versions.emplace(rec->root, *chain_tree);
  }
}

// ---- client ---------------------------------------------------------------

ClientNode::ClientNode(const Deployment& deployment, NodeIndex self, crypto::KeyPair key,
                       const ledger::Ledger* view, std::uint64_t seed)
    : dep_(deployment), self_(self), key_(std::move(key)), view_(view), rng_(seed) {}

void ClientNode::send_to(NodeIndex to, const Message& m) {
  dep_.sim->send(self_, to, pack(m), lane_of(m));
}

void ClientNode::broadcast_tx(const ledger::Transaction& tx) {
  auto payload = pack(TxMsg{tx});
  for (NodeIndex j = 0; j < dep_.miner_count; ++j) dep_.sim->send(self_, j, payload);
}

Time ClientNode::put_timeout(std::uint64_t bytes) const {
  return transfer_timeout(dep_.sim->policy(), bytes) +
         4 * (dep_.config.commit_wait + bft::round_timeout(dep_.config.delta, 0));
}

Hash256 ClientNode::put(Bytes file, PutDone done, Height lifetime) {
  const ProtocolParams params = choose_params(view_->state().active_count());
  ledger::StoreTx store = prepare_store(as_view(file), params, view_->fingerprint_params(), lifetime);
  const std::uint64_t session = next_session_++;
  PutSession& s = puts_[session];
  s.file = std::move(file);
  s.result.file_id = store.file_id;
  s.result.started = dep_.sim->now();
  s.store = ledger::make_tx(std::move(store), key_);
  s.done = std::move(done);
  broadcast_tx(s.store);
  s.result.store_submissions = 1;
  start_encoder(session);
  return s.result.file_id;
}

void ClientNode::start_encoder(std::uint64_t session) {
  PutSession& s = puts_.at(session);
  if (++s.result.encoder_attempts > dep_.config.max_put_attempts) {
    --s.result.encoder_attempts;
    finish_put(session, false);
    return;
  }
  const ledger::WeightTable& table = view_->weights();
  MinerId e = sample_by_weight(table, rng_);
  for (int i = 0; i < 64 && s.bad_encoders.contains(e); ++i) e = sample_by_weight(table, rng_);
  s.encoder = e;
  s.verified_nack = false;
  send_to(e, FileTransferMsg{session, s.result.file_id, s.file});
  s.deadline = dep_.sim->schedule(self_, put_timeout(s.file.size()), session << 1);
}

void ClientNode::put_deadline(std::uint64_t session) {
  PutSession& s = puts_.at(session);
  auto m = view_->manifest(s.result.file_id);
  if (!m) {
    // The active sector count may have moved since the STORE was built.
    const auto& body = std::get<ledger::StoreTx>(s.store.body);
    const std::uint64_t active = view_->state().active_count();
    if (active >= 4 && choose_params(active).k != body.fingerprints.size()) {
      ledger::StoreTx store = prepare_store(as_view(s.file), choose_params(active),
                                            view_->fingerprint_params(), body.lifetime);
      s.result.file_id = store.file_id;
      s.store = ledger::make_tx(std::move(store), key_);
      s.acked.clear();
    }
    if (!view_->has_tx(s.store.id())) {
      broadcast_tx(s.store);
      ++s.result.store_submissions;
    }
    start_encoder(session);
    return;
  }
  const std::uint64_t n = m->total_chunks();
  if (!s.verified_nack && s.acked.size() >= n - ledger::compute_f(n)) {
    finish_put(session, true);
    return;
  }
  start_encoder(session);
}

void ClientNode::finish_put(std::uint64_t session, bool ok) {
  auto it = puts_.find(session);
  if (it == puts_.end()) return;
  PutSession s = std::move(it->second);
  puts_.erase(it);
  if (s.deadline) dep_.sim->cancel(s.deadline);
  s.result.success = ok;
  s.result.acks = static_cast<std::uint32_t>(s.acked.size());
  s.result.finished = dep_.sim->now();
  if (s.done) s.done(s.result);
}

bool ClientNode::nack_verified(const AckMsg& msg) const {
  const PutSession& s = puts_.at(msg.session);
  auto m = view_->manifest(msg.file_id);
  if (!m) return false;
  try {
    auto a = ledger::ChunkAttestation::decode(as_view(msg.evidence));
    if (a.file_id != msg.file_id || a.index != msg.index || a.encoder != s.encoder) return false;
    if (a.index >= m->total_chunks() || a.encoder >= view_->miner_count()) return false;
    if (!bft::verify_statement(view_->cache(), view_->config().level,
                               as_view(view_->genesis().miner_keys[a.encoder]),
                               as_view(a.sign_bytes()), as_view(a.signature)))
      return false;
    if (a.payload.size() != m->chunk_size) return true;
    const auto expected = encoded_fingerprints(*m, view_->fingerprint_params());
    return hf::hf_compute(as_view(a.payload), view_->fingerprint_params()).value.value !=
           expected[a.index];
  } catch (const Error&) {
    return false;
  }
}

void ClientNode::on_ack(const AckMsg& msg) {
  auto it = puts_.find(msg.session);
  if (it == puts_.end() || msg.file_id != it->second.result.file_id) return;
  PutSession& s = it->second;
  auto m = view_->manifest(msg.file_id);
  if (!m || msg.index >= m->total_chunks()) return;
  if (msg.stored) {
    s.acked.insert(msg.index);
    if (s.acked.size() == m->total_chunks()) finish_put(msg.session, true);
    return;
  }
  if (msg.evidence.empty() || !nack_verified(msg)) return;
  s.verified_nack = true;
  s.bad_encoders.insert(s.encoder);
  dep_.sim->cancel(s.deadline);
  start_encoder(msg.session);
}

void ClientNode::get(const Hash256& file_id, GetDone done) {
  const std::uint64_t session = next_session_++;
  GetSession& g = gets_[session];
  g.result.file_id = file_id;
  g.result.started = dep_.sim->now();
  g.done = std::move(done);
  if (!view_->manifest(file_id)) {
    g.result.not_found = true;
    finish_get(session, false);
    return;
  }
  try_get(session);
}

void ClientNode::try_get(std::uint64_t session) {
  GetSession& g = gets_.at(session);
  auto m = view_->manifest(g.result.file_id);
  if (!m) {
    g.result.not_found = true;
    finish_get(session, false);
    return;
  }
  if (g.result.tries >= dep_.config.max_get_tries) {
    finish_get(session, false);
    return;
  }
  ++g.result.tries;
  const MinerId miner = sample_by_weight(view_->weights(), rng_);
  g.result.retrieval_miners.push_back(miner);
  g.request = (session << 8) | (g.result.tries & 0xff);
  send_to(miner, GetRequestMsg{g.request, g.result.file_id});
  const Time wait = transfer_timeout(dep_.sim->policy(), m->file_size) +
                    4 * bft::round_timeout(dep_.config.delta, 0);
  g.deadline = dep_.sim->schedule(self_, wait, (session << 1) | 1);
}

void ClientNode::get_failed(std::uint64_t session, MinerId miner) {
  GetSession& g = gets_.at(session);
  dep_.sim->cancel(g.deadline);
  if (view_->manifest(g.result.file_id))
    broadcast_tx(ledger::make_tx(ledger::RetrieveReportTx{g.result.file_id, miner, ++report_nonce_}, key_));
  try_get(session);
}

void ClientNode::finish_get(std::uint64_t session, bool ok) {
  auto it = gets_.find(session);
  if (it == gets_.end()) return;
  GetSession g = std::move(it->second);
  gets_.erase(it);
  if (g.deadline) dep_.sim->cancel(g.deadline);
  g.result.success = ok;
  g.result.finished = dep_.sim->now();
  if (g.done) g.done(g.result);
}

void ClientNode::on_get_response(const GetResponseMsg& msg, NodeIndex from) {
  const std::uint64_t session = msg.session >> 8;
  auto it = gets_.find(session);
  if (it == gets_.end() || it->second.request != msg.session) return;
  GetSession& g = it->second;
  if (msg.file_id != g.result.file_id) return;
  auto m = view_->manifest(g.result.file_id);
  if (msg.ok && m && file_matches(as_view(msg.data), *m, view_->fingerprint_params())) {
    g.result.data = msg.data;
    finish_get(session, true);
    return;
  }
  get_failed(session, static_cast<MinerId>(from));
}

void ClientNode::on_message(NodeIndex from, const sim::Payload& payload) {
  Message m;
  try {
    m = decode_message(as_view(*payload));
  } catch (const ParseError&) {
    return;
  }
  if (auto* a = std::get_if<AckMsg>(&m)) on_ack(*a);
  else if (auto* r = std::get_if<GetResponseMsg>(&m)) on_get_response(*r, from);
}

void ClientNode::on_timer(std::uint64_t tag) {
  const std::uint64_t session = tag >> 1;
  if ((tag & 1) == 0) {
    if (puts_.contains(session)) put_deadline(session);
  } else if (auto it = gets_.find(session); it != gets_.end()) {
    get_failed(session, it->second.result.retrieval_miners.back());
  }
}

}  // namespace bftdsn::protocol
