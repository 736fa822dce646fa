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

// Storage-weighted Tendermint. The core is a pure state machine: the host
// feeds it verified proposals, votes and expired timers (including the
// node's own signed messages) and acts on the returned outputs. It never
// signs, sends or reads a clock.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "bftdsn/ledger.hpp"
#include "bftdsn/vote.hpp"

namespace bftdsn::bft {

enum class Step : std::uint8_t { kPropose = 0, kPrevote = 1, kPrecommit = 2, kCommit = 3 };

std::string to_string(Step s);

struct ScheduleTimeout {
  Height height = 0;
  Round round = 0;
  Step step = Step::kPropose;
  std::int64_t delay = 0;
  bool operator==(const ScheduleTimeout&) const = default;
};

struct Decision {
  Height height = 0;
  Round round = 0;
  Hash256 block;
  bool operator==(const Decision&) const = default;
};

struct VoteEvidence {
  Vote first;
  Vote second;
  bool operator==(const VoteEvidence&) const = default;
};

struct ProposalEvidence {
  Proposal first;
  Proposal second;
  bool operator==(const ProposalEvidence&) const = default;
};

/// Proposal and Vote outputs are unsigned; the host signs and broadcasts them
/// and delivers them back to this core.
using Output = std::variant<Proposal, Vote, ScheduleTimeout, Decision, VoteEvidence, ProposalEvidence>;
using Outputs = std::vector<Output>;

/// Timeout for any step of round r: 4 delta + r delta.
inline std::int64_t round_timeout(std::int64_t delta, Round r) {
  return 4 * delta + static_cast<std::int64_t>(r) * delta;
}

using ledger::select_proposer;

class ConsensusCore {
 public:
  /// Returns the id of a fresh block to propose.
  using ValueSource = std::function<Hash256()>;

  ConsensusCore(NodeId self, std::int64_t delta) : self_(self), delta_(delta) {}

  /// Resets for `height`, counting votes under `table` (the table of
  /// height - 1), and starts round 0.
  Outputs start_height(Height height, ledger::WeightTable table, ValueSource value_source);

  /// `valid` is the host's verdict on the proposed block's content.
  Outputs on_proposal(const Proposal& p, bool valid);
  /// Throws ConsensusError for a voter without weight at this height.
  Outputs on_vote(const Vote& v);
  Outputs on_timeout(Height height, Round round, Step step);

  [[nodiscard]] NodeId self() const { return self_; }
  [[nodiscard]] Height height() const { return height_; }
  [[nodiscard]] Round round() const { return round_; }
  [[nodiscard]] Step step() const { return step_; }
  [[nodiscard]] const std::optional<Hash256>& locked_value() const { return locked_value_; }
  [[nodiscard]] std::int32_t locked_round() const { return locked_round_; }
  [[nodiscard]] const std::optional<Hash256>& valid_value() const { return valid_value_; }
  [[nodiscard]] std::int32_t valid_round() const { return valid_round_; }
  [[nodiscard]] const std::optional<Decision>& decision() const { return decision_; }
  [[nodiscard]] const ledger::WeightTable& table() const { return table_; }
  [[nodiscard]] NodeId proposer(Round r) const { return select_proposer(height_, r, table_); }

  /// Accumulated prevote / precommit weight in round r for `block`
  /// (nullopt counts nil votes).
  [[nodiscard]] std::uint64_t prevote_weight(Round r, const std::optional<Hash256>& block) const;
  [[nodiscard]] std::uint64_t precommit_weight(Round r, const std::optional<Hash256>& block) const;
  /// Signed prevotes for `block` in round r, in voter order.
  [[nodiscard]] std::vector<Vote> prevotes_for(Round r, const Hash256& block) const;
  /// Signed precommits for `block` in round r, in voter order.
  [[nodiscard]] std::vector<Vote> precommits_for(Round r, const Hash256& block) const;
  [[nodiscard]] const Proposal* proposal_in(Round r) const;

 private:
  struct Tally {
    std::map<NodeId, Vote> by_voter;  // first vote seen
    // An equivocator counts once for each value it signed.
    std::map<std::optional<Hash256>, std::map<NodeId, Vote>> by_value;
    std::map<std::optional<Hash256>, std::uint64_t> weight_by_value;
    std::uint64_t total = 0;
  };
  struct RoundState {
    std::optional<Proposal> proposal;
    bool proposal_valid = false;
    Tally prevotes;
    Tally precommits;
    std::set<NodeId> senders;
    std::uint64_t sender_weight = 0;
    bool prevote_timer = false;
    bool precommit_timer = false;
    bool locked_on_quorum = false;
  };

  void start_round(Round r, Outputs& out);
  void note_sender(RoundState& rs, NodeId who);
  void run_rules(Outputs& out);
  bool step_rules(Outputs& out);
  void emit_vote(VoteType t, const std::optional<Hash256>& block, Outputs& out);
  [[nodiscard]] std::uint64_t quorum() const { return table_.quorum(); }
  [[nodiscard]] std::uint64_t skip_threshold() const { return table_.f() + 1; }

  NodeId self_;
  std::int64_t delta_;
  Height height_ = 0;
  Round round_ = 0;
  Step step_ = Step::kPropose;
  ledger::WeightTable table_;
  ValueSource value_source_;
  std::optional<Hash256> locked_value_;
  std::int32_t locked_round_ = -1;
  std::optional<Hash256> valid_value_;
  std::int32_t valid_round_ = -1;
  std::optional<Decision> decision_;
  std::map<Round, RoundState> rounds_;
};

}  // namespace bftdsn::bft
