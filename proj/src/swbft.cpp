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

#include "bftdsn/swbft.hpp"

namespace bftdsn::bft {

std::string to_string(Step s) {
  switch (s) {
    case Step::kPropose: return "propose";
    case Step::kPrevote: return "prevote";
    case Step::kPrecommit: return "precommit";
    case Step::kCommit: return "commit";
  }
  return "unknown";
}

Outputs ConsensusCore::start_height(Height height, ledger::WeightTable table,
                                    ValueSource value_source) {
  if (table.total() == 0) throw ConsensusError("no voting weight at this height");
  height_ = height;
  table_ = std::move(table);
  value_source_ = std::move(value_source);
  locked_value_.reset();
  locked_round_ = -1;
  valid_value_.reset();
  valid_round_ = -1;
  decision_.reset();
  rounds_.clear();
  Outputs out;
  start_round(0, out);
  run_rules(out);
  return out;
}

void ConsensusCore::start_round(Round r, Outputs& out) {
  round_ = r;
  step_ = Step::kPropose;
  if (proposer(r) == self_) {
    Proposal p;
    p.height = height_;
    p.round = r;
    p.proposer = self_;
    if (valid_value_) {
      p.block = *valid_value_;
      p.valid_round = valid_round_;
    } else {
      p.block = value_source_();
      p.valid_round = -1;
    }
    out.emplace_back(std::move(p));
  } else {
    out.emplace_back(ScheduleTimeout{height_, r, Step::kPropose, round_timeout(delta_, r)});
  }
}

void ConsensusCore::note_sender(RoundState& rs, NodeId who) {
  if (rs.senders.insert(who).second) rs.sender_weight += table_.weight(who);
}

Outputs ConsensusCore::on_proposal(const Proposal& p, bool valid) {
  Outputs out;
  if (p.height != height_ || decision_) return out;
  if (p.proposer != proposer(p.round)) return out;
  RoundState& rs = rounds_[p.round];
  if (rs.proposal) {
    if (rs.proposal->block != p.block || rs.proposal->valid_round != p.valid_round)
      out.emplace_back(ProposalEvidence{*rs.proposal, p});
    return out;
  }
  rs.proposal = p;
  rs.proposal_valid = valid;
  note_sender(rs, p.proposer);
  run_rules(out);
  return out;
}

Outputs ConsensusCore::on_vote(const Vote& v) {
  Outputs out;
  if (v.height != height_ || decision_) return out;
  const std::uint64_t w = table_.weight(v.voter);
  if (w == 0) throw ConsensusError("vote from a voter without weight");
  RoundState& rs = rounds_[v.round];
  Tally& tally = v.type == VoteType::kPrevote ? rs.prevotes : rs.precommits;
  auto& same = tally.by_value[v.block];
  if (same.contains(v.voter)) return out;
  auto it = tally.by_voter.find(v.voter);
  if (it != tally.by_voter.end()) {
    out.emplace_back(VoteEvidence{it->second, v});
  } else {
    tally.by_voter.emplace(v.voter, v);
    tally.total += w;
    note_sender(rs, v.voter);
  }
  same.emplace(v.voter, v);
  tally.weight_by_value[v.block] += w;
  run_rules(out);
  return out;
}

Outputs ConsensusCore::on_timeout(Height height, Round round, Step step) {
  Outputs out;
  if (height != height_ || round != round_ || decision_) return out;
  if (step == Step::kPropose && step_ == Step::kPropose) {
    emit_vote(VoteType::kPrevote, std::nullopt, out);
    step_ = Step::kPrevote;
  } else if (step == Step::kPrevote && step_ == Step::kPrevote) {
    emit_vote(VoteType::kPrecommit, std::nullopt, out);
    step_ = Step::kPrecommit;
  } else if (step == Step::kPrecommit) {
    start_round(round_ + 1, out);
  }
  run_rules(out);
  return out;
}

void ConsensusCore::emit_vote(VoteType t, const std::optional<Hash256>& block, Outputs& out) {
  Vote v;
  v.height = height_;
  v.round = round_;
  v.type = t;
  v.block = block;
  v.voter = self_;
  out.emplace_back(std::move(v));
}

void ConsensusCore::run_rules(Outputs& out) {
  while (!decision_ && step_rules(out)) {
  }
}

// One pass over the rules in a fixed order; returns after the first that fires.
bool ConsensusCore::step_rules(Outputs& out) {
  const std::uint64_t q = quorum();

  // Decide: a proposal of some round with a precommit quorum for it.
  for (auto& [r, rs] : rounds_) {
    if (!rs.proposal || !rs.proposal_valid) continue;
    if (precommit_weight(r, rs.proposal->block) >= q) {
      step_ = Step::kCommit;
      decision_ = Decision{height_, r, rs.proposal->block};
      out.emplace_back(*decision_);
      return false;
    }
  }

  // Round skip: f + 1 weight of senders in a later round.
  for (auto& [r, rs] : rounds_) {
    if (r > round_ && rs.sender_weight >= skip_threshold()) {
      start_round(r, out);
      return true;
    }
  }

  RoundState& cur = rounds_[round_];
  if (step_ == Step::kPropose && cur.proposal) {
    const Proposal& p = *cur.proposal;
    if (p.valid_round == -1) {
      bool accept = cur.proposal_valid && (locked_round_ == -1 || locked_value_ == p.block);
      emit_vote(VoteType::kPrevote, accept ? std::optional(p.block) : std::nullopt, out);
      step_ = Step::kPrevote;
      return true;
    }
    if (p.valid_round >= 0 && static_cast<Round>(p.valid_round) < round_ &&
        prevote_weight(static_cast<Round>(p.valid_round), p.block) >= q) {
      bool accept = cur.proposal_valid &&
                    (locked_round_ <= p.valid_round || locked_value_ == p.block);
      emit_vote(VoteType::kPrevote, accept ? std::optional(p.block) : std::nullopt, out);
      step_ = Step::kPrevote;
      return true;
    }
  }

  if (step_ == Step::kPrevote && cur.prevotes.total >= q && !cur.prevote_timer) {
    cur.prevote_timer = true;
    out.emplace_back(ScheduleTimeout{height_, round_, Step::kPrevote, round_timeout(delta_, round_)});
    return true;
  }

  if (cur.proposal && cur.proposal_valid && step_ >= Step::kPrevote && !cur.locked_on_quorum &&
      prevote_weight(round_, cur.proposal->block) >= q) {
    cur.locked_on_quorum = true;
    const Hash256 v = cur.proposal->block;
    if (step_ == Step::kPrevote) {
      locked_value_ = v;
      locked_round_ = static_cast<std::int32_t>(round_);
      emit_vote(VoteType::kPrecommit, v, out);
      step_ = Step::kPrecommit;
    }
    valid_value_ = v;
    valid_round_ = static_cast<std::int32_t>(round_);
    return true;
  }

  if (step_ == Step::kPrevote && prevote_weight(round_, std::nullopt) >= q) {
    emit_vote(VoteType::kPrecommit, std::nullopt, out);
    step_ = Step::kPrecommit;
    return true;
  }

  if (cur.precommits.total >= q && !cur.precommit_timer) {
    cur.precommit_timer = true;
    out.emplace_back(
        ScheduleTimeout{height_, round_, Step::kPrecommit, round_timeout(delta_, round_)});
    return true;
  }
  return false;
}

std::uint64_t ConsensusCore::prevote_weight(Round r, const std::optional<Hash256>& block) const {
  auto it = rounds_.find(r);
  if (it == rounds_.end()) return 0;
  auto w = it->second.prevotes.weight_by_value.find(block);
  return w == it->second.prevotes.weight_by_value.end() ? 0 : w->second;
}

std::uint64_t ConsensusCore::precommit_weight(Round r, const std::optional<Hash256>& block) const {
  auto it = rounds_.find(r);
  if (it == rounds_.end()) return 0;
  auto w = it->second.precommits.weight_by_value.find(block);
  return w == it->second.precommits.weight_by_value.end() ? 0 : w->second;
}

std::vector<Vote> ConsensusCore::prevotes_for(Round r, const Hash256& block) const {
  std::vector<Vote> out;
  auto it = rounds_.find(r);
  if (it == rounds_.end()) return out;
  auto votes = it->second.prevotes.by_value.find(block);
  if (votes == it->second.prevotes.by_value.end()) return out;
  for (const auto& [voter, v] : votes->second) out.push_back(v);
  return out;
}

std::vector<Vote> ConsensusCore::precommits_for(Round r, const Hash256& block) const {
  std::vector<Vote> out;
  auto it = rounds_.find(r);
  if (it == rounds_.end()) return out;
  auto votes = it->second.precommits.by_value.find(block);
  if (votes == it->second.precommits.by_value.end()) return out;
  for (const auto& [voter, v] : votes->second) out.push_back(v);
  return out;
}

const Proposal* ConsensusCore::proposal_in(Round r) const {
  auto it = rounds_.find(r);
  if (it == rounds_.end() || !it->second.proposal) return nullptr;
  return &*it->second.proposal;
}

}  // namespace bftdsn::bft
