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

// Experiment driver: builds simulated networks from a scenario, runs a
// put/get workload and reports per-trial rows plus aggregates.

#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bftdsn/adversary.hpp"
#include "bftdsn/protocol.hpp"

namespace bftdsn::harness {

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  /// Sectors pledged at genesis.
  std::uint64_t n = 10;
  /// Nodes taking part in the pledge process; 0 means n.
  std::uint64_t candidates = 0;
  double byzantine_fraction = 0.0;
  /// Roles assigned to corrupted miners in rotation.
  std::vector<adversary::Strategy> strategies = {adversary::Strategy::kNone};
  std::uint64_t trials = 1;
  std::uint64_t files_per_trial = 1;
  std::uint64_t gets_per_file = 1;
  std::uint64_t file_size = 4096;
  std::uint64_t sector_size = 16384;
  std::uint64_t fragment_size = 256;
  unsigned security_bits = 128;
  double delta_ms = 1.0;
  double bytes_per_ms = 1e6;
  double gst_ms = 0.0;
  double pre_gst_drop = 0.0;
  bool report_equivocation = true;
  /// Simulated time allowed for one put or get.
  double op_cap_ms = 120000.0;
};

/// "a+b+c" to a role list. Throws ParameterError for unknown names.
std::vector<adversary::Strategy> parse_strategies(std::string_view text);
std::string strategies_name(const std::vector<adversary::Strategy>& roles);

/// Parses a scenario object. Unknown keys and bad values throw
/// ParameterError.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::string& path);
std::string scenario_json(const Scenario& s);

/// Sector counts of the nodes that pledged at least one sector. Each of the
/// `candidates` nodes pledges as a unit-rate Poisson process until `n`
/// sectors exist.
std::vector<std::uint64_t> poisson_genesis(std::uint64_t n, std::uint64_t candidates,
                                           std::uint64_t seed);

struct SafetyReport {
  std::uint64_t conflicting_commits = 0;
  std::uint64_t state_divergences = 0;
  /// Heights at which the coalition held more weight than it pledged.
  std::uint64_t excess_byzantine_weight = 0;
  ledger::Height min_height = 0;
  ledger::Height max_height = 0;
  /// Largest decision round among heights that began after GST.
  bft::Round max_round_after_gst = 0;
  [[nodiscard]] bool ok() const {
    return conflicting_commits == 0 && state_divergences == 0 && excess_byzantine_weight == 0;
  }
};

/// Miners, one client and the simulator they share.
class Network {
 public:
  Network(const Scenario& s, std::uint64_t seed);
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  [[nodiscard]] sim::Simulator& sim() { return *sim_; }
  [[nodiscard]] std::size_t miner_count() const { return miners_.size(); }
  [[nodiscard]] protocol::MinerNode& miner(std::size_t i) { return *miners_[i]; }
  [[nodiscard]] const protocol::MinerNode& miner(std::size_t i) const { return *miners_[i]; }
  [[nodiscard]] protocol::ClientNode& client() { return *client_; }
  [[nodiscard]] const std::set<protocol::MinerId>& corrupted() const { return corrupted_; }
  [[nodiscard]] bool honest(protocol::MinerId m) const { return !corrupted_.contains(m); }
  [[nodiscard]] std::uint64_t byzantine_sectors() const { return byzantine_sectors_; }
  [[nodiscard]] std::uint64_t genesis_sectors() const { return genesis_sectors_; }
  [[nodiscard]] const std::vector<std::uint64_t>& sectors_per_miner() const { return sectors_per_miner_; }
  /// Ledger replica the client reads: the first honest miner's.
  [[nodiscard]] const ledger::Ledger& view() const;
  [[nodiscard]] const protocol::Deployment& deployment() const { return *dep_; }
  [[nodiscard]] const adversary::Coalition& coalition() const { return *coalition_; }

  /// Runs the simulation until the operation finishes or `cap` passes.
  protocol::PutResult put(Bytes file, sim::Time cap, ledger::Height lifetime = 0);
  protocol::GetResult get(const Hash256& id, sim::Time cap);
  /// Runs until every honest miner has applied `height`.
  bool run_to_height(ledger::Height height, sim::Time cap);

  /// Chunk bytes held by all miners.
  [[nodiscard]] std::uint64_t stored_chunk_bytes() const;
  [[nodiscard]] SafetyReport safety() const;

 private:
  void observe(const protocol::MinerNode& node, const ledger::CommittedBlock& cb);

  Scenario scenario_;
  std::unique_ptr<sim::Simulator> sim_;
  std::unique_ptr<protocol::Deployment> dep_;
  std::vector<std::uint64_t> sectors_per_miner_;
  std::set<protocol::MinerId> corrupted_;
  std::shared_ptr<adversary::Coalition> coalition_;
  std::uint64_t byzantine_sectors_ = 0;
  std::uint64_t genesis_sectors_ = 0;
  std::vector<std::unique_ptr<protocol::MinerNode>> miners_;
  std::unique_ptr<protocol::ClientNode> client_;
  std::size_t view_index_ = 0;

  std::map<ledger::Height, Hash256> first_commit_;
  std::uint64_t conflicts_ = 0;
  std::uint64_t excess_weight_ = 0;
  std::map<ledger::Height, sim::Time> height_started_;  // at the view miner
};

/// Outcome of one stored file.
struct FileRecord {
  std::uint64_t trial = 0;
  std::uint64_t file_size = 0;
  bool put_ok = false;
  std::uint32_t encoder_attempts = 0;
  double put_ms = 0.0;
  std::uint64_t gets = 0;
  std::uint64_t gets_ok = 0;
  std::uint64_t tries = 0;  // summed over successful gets
  double get_ms = 0.0;      // summed over successful gets
  std::uint64_t wrong_files = 0;
  std::uint64_t stored_bytes = 0;
  std::uint64_t padded_bytes = 0;
};

/// One trial. Sums rather than means, so aggregates are recomputable.
struct TrialRow {
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  std::uint64_t n = 0;
  std::uint64_t miners = 0;
  double byzantine_fraction = 0.0;
  std::uint64_t byzantine_sectors = 0;
  std::string strategy;
  std::uint64_t file_size = 0;
  std::uint64_t files = 0;
  std::uint64_t puts_ok = 0;
  std::uint64_t gets = 0;
  std::uint64_t gets_ok = 0;
  std::uint64_t wrong_files = 0;
  std::uint64_t tries = 0;
  double put_ms = 0.0;
  double get_ms = 0.0;
  std::uint64_t stored_bytes = 0;
  std::uint64_t padded_bytes = 0;
  std::uint64_t file_bytes = 0;
  std::uint64_t conflicting_commits = 0;
  std::uint64_t state_divergences = 0;
  std::uint64_t excess_byzantine_weight = 0;
  std::uint64_t height = 0;
  std::uint64_t max_round_after_gst = 0;
  bool operator==(const TrialRow&) const = default;
};

struct Aggregates {
  std::uint64_t trials = 0;
  std::uint64_t files = 0;
  double put_success_rate = 0.0;
  double success_rate = 0.0;  // gets
  double mean_tries = 0.0;
  double storage_ratio = 0.0;       // stored / padded
  double storage_per_file_byte = 0.0;  // stored / raw file bytes
  double mean_put_ms = 0.0;
  double mean_get_ms = 0.0;
  std::uint64_t wrong_files = 0;
  std::uint64_t safety_violations = 0;
  std::uint64_t max_round_after_gst = 0;
  bool operator==(const Aggregates&) const = default;
};

Aggregates aggregate(const std::vector<TrialRow>& rows);

struct ScenarioResult {
  Scenario scenario;
  std::vector<TrialRow> rows;
  std::vector<FileRecord> files;
  Aggregates totals;
  /// Any safety breach or wrong-file acceptance.
  [[nodiscard]] bool violated() const {
    return totals.safety_violations > 0 || totals.wrong_files > 0;
  }
};

/// Runs every trial of `s`. Throws ParameterError for an invalid scenario.
ScenarioResult run_scenario(const Scenario& s);

/// Axes crossed over a base scenario; an empty axis keeps the base value.
struct Grid {
  Scenario base;
  std::vector<std::uint64_t> n;
  std::vector<double> byzantine_fraction;
  std::vector<std::vector<adversary::Strategy>> strategies;
  std::vector<std::uint64_t> file_size;
};

/// A scenario object with an optional "grid" member of axis arrays.
Grid parse_grid(std::string_view json_text);
std::vector<Scenario> expand(const Grid& g);
/// One result per grid point, in grid order. Grid points run on up to
/// `threads` threads.
std::vector<ScenarioResult> sweep(const Grid& g, unsigned threads = 1);

// ---- output ----------------------------------------------------------------

void write_csv(std::ostream& out, const std::vector<TrialRow>& rows);
std::vector<TrialRow> read_csv(std::istream& in);
std::string aggregates_json(const std::vector<ScenarioResult>& results);
/// Aggregates in file order.
std::vector<Aggregates> parse_aggregates_json(std::string_view text);
/// Whitespace-separated columns, one line per grid point.
void write_plot_data(std::ostream& out, const std::vector<ScenarioResult>& results);

}  // namespace bftdsn::harness
