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

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "bftdsn/ledger.hpp"
#include "bftdsn/reed_solomon.hpp"
#include "chain_fixture.hpp"
#include "test_util.hpp"

namespace bftdsn::ledger {
namespace {

using testing::Chain;
using testing::commit;
using testing::make_chain;

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("bftdsn_ledger_" + name);
}

struct StoredFile {
  StoreTx tx;
  std::vector<Bytes> data;  // K data chunks
};

StoredFile make_file(const Ledger& l, std::mt19937_64& rng, std::size_t k, std::size_t chunk = 16,
                     std::uint64_t pad = 3) {
  StoredFile f;
  f.data = random_blocks(rng, k, chunk);
  for (const Bytes& d : f.data)
    f.tx.fingerprints.push_back(hf::hf_compute(as_view(d), l.fingerprint_params()).value.value);
  f.tx.chunk_size = chunk;
  f.tx.file_size = chunk * k - pad;
  f.tx.file_id = file_id_of(f.tx.fingerprints);
  return f;
}

TEST(ComputeF, KnownValues) {
  EXPECT_EQ(compute_f(1), 0u);
  EXPECT_EQ(compute_f(3), 0u);
  EXPECT_EQ(compute_f(4), 1u);
  EXPECT_EQ(compute_f(7), 2u);
  EXPECT_EQ(compute_f(10), 3u);
  EXPECT_EQ(compute_f(22), 7u);
  EXPECT_EQ(compute_f(40), 13u);
  EXPECT_THROW(compute_f(0), DomainError);
}

TEST(ComputeF, ThreeFPlusOneBound) {
  for (std::uint64_t n = 1; n < 500; ++n) {
    std::uint64_t f = compute_f(n);
    EXPECT_GE(n, 3 * f + 1);
    EXPECT_LT(n, 3 * (f + 1) + 1);
  }
}

TEST(WeightTable, QuorumAndSkip) {
  WeightTable t({3, 1, 1, 2});
  EXPECT_EQ(t.total(), 7u);
  EXPECT_EQ(t.f(), 2u);
  EXPECT_EQ(t.quorum(), 5u);
  EXPECT_EQ(t.miners(), (std::vector<MinerId>{0, 1, 2, 3}));
  WeightTable z({0, 2, 0});
  EXPECT_EQ(z.miners(), (std::vector<MinerId>{1}));
}

TEST(SelectProposer, WeightedRotation) {
  WeightTable t({2, 1});
  EXPECT_EQ(select_proposer(0, 0, t), 0u);
  EXPECT_EQ(select_proposer(1, 0, t), 0u);
  EXPECT_EQ(select_proposer(2, 0, t), 1u);
  EXPECT_EQ(select_proposer(3, 0, t), 0u);
  EXPECT_EQ(select_proposer(1, 1, t), 1u);
  EXPECT_THROW(select_proposer(1, 0, WeightTable({0, 0})), ConsensusError);
}

TEST(SelectProposer, FrequencyMatchesWeight) {
  WeightTable t({3, 0, 1, 2});
  std::vector<int> count(4, 0);
  for (Height h = 0; h < 600; ++h) ++count[select_proposer(h, 0, t)];
  EXPECT_EQ(count, (std::vector<int>{300, 0, 100, 200}));
}

TEST(Ledger, GenesisWeights) {
  Chain c = make_chain({2, 1, 1, 3});
  Ledger l(c.genesis);
  EXPECT_EQ(l.height(), 0u);
  EXPECT_EQ(l.weights().weights(), (std::vector<std::uint64_t>{2, 1, 1, 3}));
  EXPECT_EQ(l.state().active_count(), 7u);
  EXPECT_EQ(l.block_hash_at(0), l.genesis_hash());
  EXPECT_THROW((void)l.weights_at(1), LedgerError);
}

TEST(Ledger, AppliesCertifiedBlocks) {
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  for (int i = 0; i < 3; ++i) commit(l, c);
  EXPECT_EQ(l.height(), 3u);
  EXPECT_EQ(l.blocks().size(), 3u);
  EXPECT_EQ(l.block_hash_at(3), l.state().last_block);
  EXPECT_EQ(l.weights_at(2).total(), 4u);
}

TEST(Ledger, RejectsWeakCertificate) {
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  CommittedBlock cb;
  cb.block = testing::next_block(l, {});
  cb.cert = testing::certify(l, c, cb.block, 0, {0, 1});  // weight 2 < quorum 3
  Hash256 before = l.state_hash();
  EXPECT_THROW(l.apply(cb), LedgerError);
  EXPECT_EQ(l.state_hash(), before);
  cb.cert = testing::certify(l, c, cb.block, 0, {0, 1, 2});
  EXPECT_NO_THROW(l.apply(cb));
}

TEST(Ledger, RejectsWrongProposerParentOrRound) {
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  CommittedBlock cb;
  cb.block = testing::next_block(l, {});
  cb.block.proposer = (cb.block.proposer + 1) % 4;
  cb.cert = testing::certify(l, c, cb.block, 0);
  EXPECT_THROW(l.apply(cb), LedgerError);

  cb.block = testing::next_block(l, {});
  cb.block.parent = Hash256{};
  cb.cert = testing::certify(l, c, cb.block, 0);
  EXPECT_THROW(l.apply(cb), LedgerError);

  // Round 1's proposer cannot be certified at round 0.
  ASSERT_NE(select_proposer(1, 1, l.weights()), select_proposer(1, 0, l.weights()));
  cb.block = testing::next_block(l, {}, 1);
  cb.cert = testing::certify(l, c, cb.block, 0);
  EXPECT_THROW(l.apply(cb), LedgerError);
  // A round 0 block re-proposed and certified at round 1 is fine.
  cb.block = testing::next_block(l, {}, 0);
  cb.cert = testing::certify(l, c, cb.block, 1);
  EXPECT_NO_THROW(l.apply(cb));
}

TEST(Transaction, RoundTripsEveryKind) {
  Chain c = make_chain({1});
  pos::PosProof proof = pos::prove(c.trees.begin()->second, 3, c.trees.begin()->first, 2);
  std::vector<TxBody> bodies = {
      StoreTx{crypto::sha256(as_view(Bytes{1})), {1, 2, 3}, 16, 40, 9},
      PledgeTx{0, make_sector_id(0, 7), crypto::sha256(as_view(Bytes{2}))},
      PosTx{proof},
      FaultTx{0, 0, FaultKind::kBadChunk, Bytes{1, 2, 3}},
      RetrieveReportTx{crypto::sha256(as_view(Bytes{3})), 0, 77},
      SectorUpdateTx{make_sector_id(0, 0), Hash256{}, crypto::sha256(as_view(Bytes{4})),
                     {Allocation{Hash256{}, 2, 64, 16, false}, Allocation{Hash256{}, 1, 0, 8, true}}},
  };
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    Transaction tx = make_tx(bodies[i], c.keys[0]);
    EXPECT_EQ(static_cast<std::size_t>(tx.kind()), i + 1);
    Transaction back = Transaction::decode(as_view(tx.encode()));
    EXPECT_EQ(back, tx);
    EXPECT_EQ(back.id(), tx.id());
  }
}

TEST(Transaction, BadSignatureRejected) {
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  Transaction tx = make_tx(RetrieveReportTx{Hash256{}, 0, 1}, c.keys[0]);
  tx.signature[0] ^= 1;
  EXPECT_EQ(l.check_tx(tx).reason, TxReject::kBadSignature);
  EXPECT_EQ(to_string(TxReject::kBadSignature), "bad-signature");
  EXPECT_EQ(to_string(TxReject::kPosInvalid), "pos-invalid");
}

TEST(Store, ValidationReasons) {
  std::mt19937_64 rng(5);
  Chain small = make_chain({1, 1, 1});
  Ledger tiny(small.genesis);
  StoredFile f0 = make_file(tiny, rng, 3);
  EXPECT_EQ(tiny.check_tx(make_tx(f0.tx, small.keys[0])).reason, TxReject::kNetworkTooSmall);

  Chain c = make_chain({2, 1, 1, 1});  // n = 5, f = 1, K = 4
  Ledger l(c.genesis);
  StoredFile f = make_file(l, rng, 4);
  EXPECT_TRUE(l.check_tx(make_tx(f.tx, c.keys[0])));

  StoredFile wrong_k = make_file(l, rng, 3);
  EXPECT_EQ(l.check_tx(make_tx(wrong_k.tx, c.keys[0])).reason, TxReject::kWrongChunkCount);

  StoreTx bad = f.tx;
  bad.file_id.bytes[0] ^= 1;
  EXPECT_EQ(l.check_tx(make_tx(bad, c.keys[0])).reason, TxReject::kIdMismatch);

  bad = f.tx;
  bad.chunk_size = 12;
  EXPECT_EQ(l.check_tx(make_tx(bad, c.keys[0])).reason, TxReject::kBadShape);
  bad = f.tx;
  bad.file_size = 4 * 16 + 1;  // larger than the padded size
  EXPECT_EQ(l.check_tx(make_tx(bad, c.keys[0])).reason, TxReject::kBadShape);
  bad = f.tx;
  bad.file_size = 4 * 16 - 32;  // padding of a whole 8-byte unit per chunk
  EXPECT_EQ(l.check_tx(make_tx(bad, c.keys[0])).reason, TxReject::kBadShape);

  commit(l, c, {make_tx(f.tx, c.keys[1])});
  auto m = l.manifest(f.tx.file_id);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->total_chunks(), 5u);
  EXPECT_EQ(m->data_chunks(), 4u);
  EXPECT_EQ(m->parity_chunks(), 1u);
  EXPECT_EQ(m->placement, l.state().active_sectors());
  EXPECT_EQ(m->stored_at, 1u);
  EXPECT_EQ(l.check_tx(make_tx(f.tx, c.keys[2])).reason, TxReject::kDuplicateFile);
}

TEST(Store, DuplicateTransactionRejected) {
  std::mt19937_64 rng(6);
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  Transaction report = make_tx(RetrieveReportTx{Hash256{}, 1, 5}, c.keys[0]);
  StoredFile f = make_file(l, rng, 3);
  Transaction store = make_tx(f.tx, c.keys[0]);
  Block b = testing::next_block(l, {store, store});
  EXPECT_EQ(l.check_block(b).reason, TxReject::kDuplicateTx);
  EXPECT_EQ(l.check_block(b).index, 1u);
  commit(l, c, {store});
  report.body = RetrieveReportTx{f.tx.file_id, 1, 5};
  report = make_tx(report.body, c.keys[0]);
  commit(l, c, {report});
  EXPECT_EQ(l.state().failed_retrievals.at(1), 1u);
  EXPECT_EQ(l.check_block(testing::next_block(l, {report})).reason, TxReject::kDuplicateTx);
}

TEST(Store, ExpiryRemovesFile) {
  std::mt19937_64 rng(7);
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  StoredFile f = make_file(l, rng, 3);
  f.tx.lifetime = 2;
  commit(l, c, {make_tx(f.tx, c.keys[0])});
  EXPECT_EQ(l.manifest(f.tx.file_id)->expires_at, 3u);
  commit(l, c);
  EXPECT_TRUE(l.manifest(f.tx.file_id));
  commit(l, c);
  EXPECT_FALSE(l.manifest(f.tx.file_id));
  EXPECT_EQ(l.state().expired_files, 1u);
}

TEST(Pledge, PendingUntilFirstProof) {
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  SectorId id = make_sector_id(2, 50);
  auto tree = pos::build_tree(pos::pseudorandom_fill(4096, testing::seed_of(id)), 64);
  c.trees.emplace(id, tree);

  commit(l, c, {make_tx(PledgeTx{2, id, tree.root()}, c.keys[2])});
  EXPECT_EQ(l.sector(id)->status, SectorStatus::kPending);
  EXPECT_EQ(l.weights().weight(2), 1u);

  pos::PosProof p = testing::next_proof(l, c, id);
  EXPECT_EQ(p.epoch, 0u);
  commit(l, c, {make_tx(PosTx{p}, c.keys[2])});
  EXPECT_EQ(l.sector(id)->status, SectorStatus::kActive);
  EXPECT_EQ(l.weights_at(1).weight(2), 1u);
  EXPECT_EQ(l.weights_at(2).weight(2), 2u);
}

TEST(Pledge, PledgeAndProofInOneBlock) {
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  SectorId id = make_sector_id(1, 9);
  auto tree = pos::build_tree(pos::pseudorandom_fill(4096, testing::seed_of(id)), 64);
  std::size_t leaf = pos::challenge_index(pos::initial_challenge_seed(id, l.genesis_hash()),
                                          tree.leaf_count());
  auto proof = pos::prove(tree, leaf, id, 0);
  commit(l, c, {make_tx(PledgeTx{1, id, tree.root()}, c.keys[1]), make_tx(PosTx{proof}, c.keys[1])});
  EXPECT_EQ(l.weights_at(0).weight(1), 1u);
  EXPECT_EQ(l.weights_at(1).weight(1), 2u);
}

TEST(Pledge, Rejections) {
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  Hash256 root = crypto::sha256(as_view(Bytes{9}));
  EXPECT_EQ(l.check_tx(make_tx(PledgeTx{9, make_sector_id(9, 0), root}, c.keys[0])).reason,
            TxReject::kUnknownMiner);
  EXPECT_EQ(l.check_tx(make_tx(PledgeTx{1, make_sector_id(1, 5), root}, c.keys[0])).reason,
            TxReject::kNotOwner);
  EXPECT_EQ(l.check_tx(make_tx(PledgeTx{1, make_sector_id(2, 5), root}, c.keys[1])).reason,
            TxReject::kBadShape);
  EXPECT_EQ(l.check_tx(make_tx(PledgeTx{1, make_sector_id(1, 0), root}, c.keys[1])).reason,
            TxReject::kSectorExists);
}

TEST(Pledge, UnprovenSectorDroppedAfterGrace) {
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  SectorId id = make_sector_id(3, 1);
  commit(l, c, {make_tx(PledgeTx{3, id, crypto::sha256(as_view(Bytes{1}))}, c.keys[3])});
  const Height grace = l.config().pos_grace;
  while (l.height() < 1 + grace) commit(l, c);
  EXPECT_EQ(l.sector(id)->status, SectorStatus::kPending);
  commit(l, c);
  EXPECT_EQ(l.sector(id)->status, SectorStatus::kRemoved);
}

TEST(Pos, CadenceAndValidity) {
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  SectorId id = make_sector_id(0, 0);

  pos::PosProof p = testing::next_proof(l, c, id);
  pos::PosProof wrong_leaf = pos::prove(c.trees.at(id), (p.leaf_index + 1) % 64, id, 0);
  EXPECT_EQ(l.check_tx(make_tx(PosTx{wrong_leaf}, c.keys[0])).reason, TxReject::kPosInvalid);
  pos::PosProof tampered = p;
  tampered.leaf_data[0] ^= 1;
  EXPECT_EQ(l.check_tx(make_tx(PosTx{tampered}, c.keys[0])).reason, TxReject::kPosInvalid);
  pos::PosProof wrong_epoch = p;
  wrong_epoch.epoch = 1;
  EXPECT_EQ(l.check_tx(make_tx(PosTx{wrong_epoch}, c.keys[0])).reason, TxReject::kWrongEpoch);
  EXPECT_EQ(l.check_tx(make_tx(PosTx{p}, c.keys[1])).reason, TxReject::kNotOwner);

  commit(l, c, {make_tx(PosTx{p}, c.keys[0])});
  EXPECT_EQ(l.sector(id)->next_epoch, 1u);
  EXPECT_EQ(l.sector(id)->last_digest, p.digest());

  pos::PosProof q = testing::next_proof(l, c, id);
  EXPECT_EQ(l.check_tx(make_tx(PosTx{q}, c.keys[0])).reason, TxReject::kTooEarly);
  while (l.height() + 1 < 1 + l.config().pos_interval) commit(l, c);
  EXPECT_TRUE(l.check_tx(make_tx(PosTx{q}, c.keys[0])));
}

TEST(Pos, MissedDeadlineRemovesSector) {
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  const Height deadline = l.config().pos_interval + l.config().pos_grace;
  SectorId kept = make_sector_id(1, 0);
  // Keep every sector but miner 0's alive.
  while (l.height() < deadline) {
    std::vector<Transaction> txs;
    for (MinerId m = 1; m < 4; ++m) {
      SectorId id = make_sector_id(m, 0);
      Transaction tx = make_tx(PosTx{testing::next_proof(l, c, id)}, c.keys[m]);
      if (l.check_tx(tx)) txs.push_back(tx);
    }
    commit(l, c, txs);
  }
  EXPECT_EQ(l.sector(make_sector_id(0, 0))->status, SectorStatus::kActive);
  commit(l, c);
  EXPECT_EQ(l.sector(make_sector_id(0, 0))->status, SectorStatus::kRemoved);
  EXPECT_EQ(l.sector(kept)->status, SectorStatus::kActive);
  EXPECT_EQ(l.weights().total(), 3u);
}

Bytes vote_pair(const Chain& c, MinerId who, bool distinct) {
  bft::Vote a;
  a.height = 3;
  a.round = 1;
  a.type = bft::VoteType::kPrevote;
  a.block = crypto::sha256(as_view(Bytes{1}));
  a.voter = who;
  bft::Vote b = a;
  if (distinct) b.block = crypto::sha256(as_view(Bytes{2}));
  a.signature = bft::sign_statement(c.keys[who], as_view(a.sign_bytes()));
  b.signature = bft::sign_statement(c.keys[who], as_view(b.sign_bytes()));
  ByteWriter w;
  bft::encode_vote(w, a);
  bft::encode_vote(w, b);
  return std::move(w).take();
}

TEST(Fault, VoteEquivocationRemovesEverySector) {
  Chain c = make_chain({1, 3, 1, 1, 1});
  Ledger l(c.genesis);
  FaultTx same{0, 1, FaultKind::kVoteEquivocation, vote_pair(c, 1, false)};
  EXPECT_EQ(l.check_tx(make_tx(same, c.keys[0])).reason, TxReject::kBadEvidence);
  FaultTx framed{0, 2, FaultKind::kVoteEquivocation, vote_pair(c, 1, true)};
  EXPECT_EQ(l.check_tx(make_tx(framed, c.keys[0])).reason, TxReject::kBadEvidence);
  FaultTx garbage{0, 1, FaultKind::kVoteEquivocation, Bytes{1, 2, 3}};
  EXPECT_EQ(l.check_tx(make_tx(garbage, c.keys[0])).reason, TxReject::kBadEvidence);

  FaultTx real{0, 1, FaultKind::kVoteEquivocation, vote_pair(c, 1, true)};
  commit(l, c, {make_tx(real, c.keys[0])});
  EXPECT_EQ(l.weights().weight(1), 0u);
  EXPECT_EQ(l.weights().total(), 4u);
  EXPECT_TRUE(l.state().penalized.contains(1));
  FaultTx again{2, 1, FaultKind::kVoteEquivocation, vote_pair(c, 1, true)};
  EXPECT_EQ(l.check_tx(make_tx(again, c.keys[2])).reason, TxReject::kAlreadyPenalized);
  EXPECT_EQ(l.check_tx(make_tx(PledgeTx{1, make_sector_id(1, 9), Hash256{}}, c.keys[1])).reason,
            TxReject::kAlreadyPenalized);
}

TEST(Fault, ProposalEquivocation) {
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  bft::Proposal a;
  a.height = 2;
  a.round = 0;
  a.proposer = 3;
  a.block = crypto::sha256(as_view(Bytes{5}));
  bft::Proposal b = a;
  b.block = crypto::sha256(as_view(Bytes{6}));
  a.signature = bft::sign_statement(c.keys[3], as_view(a.sign_bytes()));
  b.signature = bft::sign_statement(c.keys[3], as_view(b.sign_bytes()));
  ByteWriter w;
  bft::encode_proposal(w, a);
  bft::encode_proposal(w, b);
  FaultTx f{0, 3, FaultKind::kProposalEquivocation, std::move(w).take()};
  EXPECT_TRUE(l.check_tx(make_tx(f, c.keys[0])));
}

TEST(Fault, BadChunkEvidence) {
  std::mt19937_64 rng(11);
  Chain c = make_chain({1, 1, 1, 1});  // K = 3, n = 4
  Ledger l(c.genesis);
  StoredFile f = make_file(l, rng, 3);
  commit(l, c, {make_tx(f.tx, c.keys[0])});

  auto gen = rs::build_generator(3, 1);
  rs::ChunkSet chunks = rs::rs_encode(f.data, gen);
  auto attest = [&](std::uint32_t index, Bytes payload) {
    ChunkAttestation a{f.tx.file_id, index, std::move(payload), 2, {}};
    a.signature = bft::sign_statement(c.keys[2], as_view(a.sign_bytes()));
    return FaultTx{1, 2, FaultKind::kBadChunk, a.encode()};
  };
  for (std::uint32_t i = 0; i < 4; ++i) {
    EXPECT_EQ(l.check_tx(make_tx(attest(i, chunks[i].payload), c.keys[1])).reason,
              TxReject::kBadEvidence);
    Bytes bad = chunks[i].payload;
    bad[5] ^= 0x40;
    EXPECT_TRUE(l.check_tx(make_tx(attest(i, bad), c.keys[1])));
  }
  EXPECT_TRUE(l.check_tx(make_tx(attest(3, Bytes(8, 0)), c.keys[1])));
  EXPECT_EQ(l.check_tx(make_tx(attest(4, chunks[0].payload), c.keys[1])).reason,
            TxReject::kBadEvidence);
}

TEST(SectorUpdate, RootChainAndAllocations) {
  std::mt19937_64 rng(12);
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  StoredFile f = make_file(l, rng, 3);
  commit(l, c, {make_tx(f.tx, c.keys[0])});
  SectorId id = make_sector_id(1, 0);
  Hash256 root0 = l.sector(id)->root;
  Hash256 root1 = crypto::sha256(as_view(Bytes{7}));
  Allocation a{f.tx.file_id, 1, 0, 16, false};

  SectorUpdateTx stale{id, root1, root1, {a}};
  EXPECT_EQ(l.check_tx(make_tx(stale, c.keys[1])).reason, TxReject::kStaleRoot);
  SectorUpdateTx oversize{id, root0, root1, {Allocation{f.tx.file_id, 1, 4090, 16, false}}};
  EXPECT_EQ(l.check_tx(make_tx(oversize, c.keys[1])).reason, TxReject::kBadShape);
  SectorUpdateTx not_owner{id, root0, root1, {a}};
  EXPECT_EQ(l.check_tx(make_tx(not_owner, c.keys[2])).reason, TxReject::kNotOwner);

  commit(l, c, {make_tx(SectorUpdateTx{id, root0, root1, {a}}, c.keys[1])});
  EXPECT_EQ(l.sector(id)->root, root1);
  EXPECT_EQ(l.sector(id)->allocations, std::vector<Allocation>{a});
  EXPECT_EQ(l.weights().weight(1), 1u);

  Allocation release = a;
  release.released = true;
  Hash256 root2 = crypto::sha256(as_view(Bytes{8}));
  commit(l, c, {make_tx(SectorUpdateTx{id, root1, root2, {release}}, c.keys[1])});
  EXPECT_TRUE(l.sector(id)->allocations.empty());
  EXPECT_EQ(l.check_tx(make_tx(SectorUpdateTx{id, root2, root1, {release}}, c.keys[1])).reason,
            TxReject::kBadShape);
}

// Drives a ledger through a mix of every transaction kind.
Ledger busy_ledger(Chain& c, std::mt19937_64& rng, std::vector<CommittedBlock>* log) {
  Ledger l(c.genesis);
  for (int step = 0; step < 25; ++step) {
    std::vector<Transaction> txs;
    if (step % 4 == 0) {
      StoredFile f = make_file(l, rng, l.state().active_count() - compute_f(l.state().active_count()));
      f.tx.lifetime = step % 8 == 0 ? 5 : 0;
      txs.push_back(make_tx(f.tx, c.keys[step % c.keys.size()]));
    }
    for (const auto& [id, tree] : c.trees) {
      const SectorRecord* rec = l.sector(id);
      if (!rec || rec->status == SectorStatus::kRemoved) continue;
      Transaction tx = make_tx(PosTx{testing::next_proof(l, c, id)}, c.keys[rec->owner]);
      if (l.check_tx(tx)) txs.push_back(tx);
    }
    if (step == 3) {
      SectorId id = make_sector_id(0, 40);
      auto tree = pos::build_tree(pos::pseudorandom_fill(4096, testing::seed_of(id)), 64);
      c.trees.emplace(id, tree);
      txs.push_back(make_tx(PledgeTx{0, id, tree.root()}, c.keys[0]));
    }
    if (step == 12) {
      const auto last = static_cast<MinerId>(c.keys.size() - 1);
      txs.push_back(make_tx(FaultTx{0, last, FaultKind::kVoteEquivocation, vote_pair(c, last, true)},
                            c.keys[0]));
    }
    CommittedBlock cb = commit(l, c, txs);
    if (log) log->push_back(cb);
  }
  return l;
}

TEST(Persistence, BlockLogReplayIsDeterministic) {
  std::mt19937_64 rng(13);
  Chain c = make_chain({2, 1, 1, 1, 2});
  std::vector<CommittedBlock> blocks;
  Ledger l = busy_ledger(c, rng, &blocks);
  EXPECT_TRUE(l.state().penalized.contains(4));

  auto path = temp_path("log.bin");
  std::filesystem::remove(path);
  BlockLog::write(path, {blocks.begin(), blocks.begin() + 10});
  for (std::size_t i = 10; i < blocks.size(); ++i) BlockLog::append(path, blocks[i]);
  EXPECT_EQ(BlockLog::read(path), blocks);
  Ledger again = replay(c.genesis, path);
  EXPECT_EQ(again.state_hash(), l.state_hash());
  EXPECT_EQ(again.height(), l.height());
  std::filesystem::remove(path);
}

TEST(Persistence, CommittedBlockRoundTrip) {
  std::mt19937_64 rng(14);
  Chain c = make_chain({1, 1, 1, 1});
  std::vector<CommittedBlock> blocks;
  busy_ledger(c, rng, &blocks);
  for (const CommittedBlock& cb : blocks) {
    EXPECT_EQ(CommittedBlock::decode(as_view(cb.encode())), cb);
    EXPECT_EQ(Block::decode(as_view(cb.block.encode())).hash(), cb.block.hash());
  }
}

TEST(Persistence, SnapshotRestoresAndContinues) {
  std::mt19937_64 rng(15);
  Chain c = make_chain({1, 2, 1, 1, 1});
  Ledger l = busy_ledger(c, rng, nullptr);
  auto path = temp_path("snap.txt");
  l.write_snapshot(path);
  Ledger restored = Ledger::from_snapshot(c.genesis, path);
  EXPECT_EQ(restored.state_hash(), l.state_hash());
  EXPECT_EQ(restored.weights(), l.weights());
  EXPECT_THROW((void)restored.weights_at(l.height() - 1), LedgerError);

  std::mt19937_64 r2(99);
  StoredFile f = make_file(l, r2, l.state().active_count() - compute_f(l.state().active_count()));
  CommittedBlock cb = commit(l, c, {make_tx(f.tx, c.keys[1])});
  restored.apply(cb);
  EXPECT_EQ(restored.state_hash(), l.state_hash());

  // A replayed transaction is still caught after the restore.
  EXPECT_EQ(restored.check_block(testing::next_block(restored, cb.block.txs)).reason,
            TxReject::kDuplicateTx);
  std::filesystem::remove(path);
}

TEST(Persistence, SnapshotRejectsForeignGenesis) {
  std::mt19937_64 rng(16);
  Chain c = make_chain({1, 1, 1, 1});
  Ledger l(c.genesis);
  commit(l, c);
  auto path = temp_path("snap2.txt");
  l.write_snapshot(path);
  Chain other = make_chain({1, 1, 1, 1, 1});
  EXPECT_THROW(Ledger::from_snapshot(other.genesis, path), ParseError);
  std::filesystem::remove(path);
}

TEST(Ledger, WeightsAreSectorCountsAtEveryHeight) {
  std::mt19937_64 rng(17);
  Chain c = make_chain({2, 1, 1, 1, 2});
  Ledger l = busy_ledger(c, rng, nullptr);
  // Replay block by block and compare each height's table with a recount.
  Ledger r(c.genesis);
  for (const CommittedBlock& cb : l.blocks()) {
    r.apply(cb);
    std::vector<std::uint64_t> count(c.keys.size(), 0);
    for (const auto& [id, rec] : r.state().sectors)
      if (rec.status == SectorStatus::kActive) ++count[rec.owner];
    EXPECT_EQ(r.weights().weights(), count);
    EXPECT_EQ(l.weights_at(cb.block.height), r.weights());
  }
}

}  // namespace
}  // namespace bftdsn::ledger
