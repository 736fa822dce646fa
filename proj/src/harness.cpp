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

#include "bftdsn/harness.hpp"

#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bftdsn/crypto.hpp"
#include "bftdsn/error.hpp"
#include "bftdsn/merkle_pos.hpp"

namespace bftdsn::harness {

using json = nlohmann::json;
using protocol::MinerId;

namespace {

Hash256 derive(std::string_view label, std::uint64_t a, std::uint64_t b = 0) {
  ByteWriter w;
  w.str(label).u64(a).u64(b);
  return crypto::sha256(as_view(w.bytes()));
}

std::uint64_t word(const Hash256& h) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | h.bytes[i];
  return v;
}

sim::Time ms_to_time(double ms) { return static_cast<sim::Time>(std::llround(ms * sim::kMillisecond)); }

void validate(const Scenario& s) {
  if (s.n < 4) throw ParameterError("scenario needs at least 4 sectors");
  if (!(s.byzantine_fraction >= 0.0 && s.byzantine_fraction <= 1.0))
    throw ParameterError("byzantine_fraction outside [0, 1]");
  if (s.strategies.empty()) throw ParameterError("strategy list is empty");
  if (s.file_size == 0) throw ParameterError("file_size must be positive");
  if (s.fragment_size == 0 || s.sector_size % s.fragment_size != 0)
    throw ParameterError("sector_size must be a multiple of fragment_size");
  const std::uint64_t leaves = s.sector_size / s.fragment_size;
  if (leaves < 2 || (leaves & (leaves - 1)) != 0)
    throw ParameterError("sector must hold a power-of-two number of fragments");
  if (s.security_bits != 128 && s.security_bits != 256) throw ParameterError("security_bits is 128 or 256");
  if (!(s.delta_ms > 0.0) || !(s.bytes_per_ms > 0.0)) throw ParameterError("delta and bandwidth must be positive");
  if (s.gst_ms < 0.0 || !(s.pre_gst_drop >= 0.0 && s.pre_gst_drop < 1.0))
    throw ParameterError("bad GST settings");
  if (!(s.op_cap_ms > 0.0)) throw ParameterError("op_cap_ms must be positive");
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParameterError(std::string("scenario field ") + key + ": " + e.what());
  }
}

std::vector<adversary::Strategy> strategies_from(const json& v) {
  if (v.is_string()) return parse_strategies(v.get<std::string>());
  if (!v.is_array()) throw ParameterError("strategy must be a string or an array");
  std::vector<adversary::Strategy> out;
  for (const json& e : v) {
    if (!e.is_string()) throw ParameterError("strategy entries must be strings");
    for (auto s : parse_strategies(e.get<std::string>())) out.push_back(s);
  }
  return out;
}

Scenario scenario_from(const json& j, bool allow_grid) {
  if (!j.is_object()) throw ParameterError("scenario must be a JSON object");
  Scenario s;
  for (const auto& [key, value] : j.items()) {
    if (key == "name") s.name = get_as<std::string>(j, "name");
    else if (key == "seed") s.seed = get_as<std::uint64_t>(j, "seed");
    else if (key == "n") s.n = get_as<std::uint64_t>(j, "n");
    else if (key == "candidates") s.candidates = get_as<std::uint64_t>(j, "candidates");
    else if (key == "byzantine_fraction") s.byzantine_fraction = get_as<double>(j, "byzantine_fraction");
    else if (key == "strategy") s.strategies = strategies_from(value);
    else if (key == "trials") s.trials = get_as<std::uint64_t>(j, "trials");
    else if (key == "files_per_trial") s.files_per_trial = get_as<std::uint64_t>(j, "files_per_trial");
    else if (key == "gets_per_file") s.gets_per_file = get_as<std::uint64_t>(j, "gets_per_file");
    else if (key == "file_size") s.file_size = get_as<std::uint64_t>(j, "file_size");
    else if (key == "sector_size") s.sector_size = get_as<std::uint64_t>(j, "sector_size");
    else if (key == "fragment_size") s.fragment_size = get_as<std::uint64_t>(j, "fragment_size");
    else if (key == "security_bits") s.security_bits = get_as<unsigned>(j, "security_bits");
    else if (key == "delta_ms") s.delta_ms = get_as<double>(j, "delta_ms");
    else if (key == "bandwidth_bytes_per_ms") s.bytes_per_ms = get_as<double>(j, "bandwidth_bytes_per_ms");
    else if (key == "gst_ms") s.gst_ms = get_as<double>(j, "gst_ms");
    else if (key == "pre_gst_drop") s.pre_gst_drop = get_as<double>(j, "pre_gst_drop");
    else if (key == "report_equivocation") s.report_equivocation = get_as<bool>(j, "report_equivocation");
    else if (key == "op_cap_ms") s.op_cap_ms = get_as<double>(j, "op_cap_ms");
    else if (key == "grid" && allow_grid) continue;
    else throw ParameterError("unknown scenario field: " + key);
  }
  validate(s);
  return s;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("scenario is not valid JSON: ") + e.what());
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

// ---- scenario text ----------------------------------------------------------

std::vector<adversary::Strategy> parse_strategies(std::string_view text) {
  std::vector<adversary::Strategy> out;
  std::size_t start = 0;
  while (true) {
    std::size_t plus = text.find('+', start);
    out.push_back(adversary::parse_strategy(text.substr(start, plus - start)));
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return out;
}

std::string strategies_name(const std::vector<adversary::Strategy>& roles) {
  std::string out;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (i) out += '+';
    out += adversary::to_string(roles[i]);
  }
  return out;
}

Scenario parse_scenario(std::string_view json_text) { return scenario_from(parse_json(json_text), false); }

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from(parse_json(ss.str()), true);
}

std::string scenario_json(const Scenario& s) {
  json j = {
      {"name", s.name},
      {"seed", s.seed},
      {"n", s.n},
      {"candidates", s.candidates},
      {"byzantine_fraction", s.byzantine_fraction},
      {"strategy", strategies_name(s.strategies)},
      {"trials", s.trials},
      {"files_per_trial", s.files_per_trial},
      {"gets_per_file", s.gets_per_file},
      {"file_size", s.file_size},
      {"sector_size", s.sector_size},
      {"fragment_size", s.fragment_size},
      {"security_bits", s.security_bits},
      {"delta_ms", s.delta_ms},
      {"bandwidth_bytes_per_ms", s.bytes_per_ms},
      {"gst_ms", s.gst_ms},
      {"pre_gst_drop", s.pre_gst_drop},
      {"report_equivocation", s.report_equivocation},
      {"op_cap_ms", s.op_cap_ms},
  };
  return j.dump(2);
}

std::vector<std::uint64_t> poisson_genesis(std::uint64_t n, std::uint64_t candidates, std::uint64_t seed) {
  if (candidates == 0) candidates = n;
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(1.0);
  std::vector<double> next(candidates);
  for (double& t : next) t = gap(rng);
  std::vector<std::uint64_t> counts(candidates, 0);
  for (std::uint64_t pledged = 0; pledged < n; ++pledged) {
    std::size_t who = 0;
    for (std::size_t i = 1; i < candidates; ++i)
      if (next[i] < next[who]) who = i;
    ++counts[who];
    next[who] += gap(rng);
  }
  std::vector<std::uint64_t> out;
  for (std::uint64_t c : counts)
    if (c > 0) out.push_back(c);
  return out;
}

// ---- network ----------------------------------------------------------------

Network::Network(const Scenario& s, std::uint64_t seed) : scenario_(s) {
  validate(s);
  sim::LinkPolicy link;
  link.delta = ms_to_time(s.delta_ms);
  link.gst = ms_to_time(s.gst_ms);
  link.pre_gst_drop = s.pre_gst_drop;
  link.bytes_per_ms = s.bytes_per_ms;
  sim_ = std::make_unique<sim::Simulator>(link, word(derive("net", seed)));

  sectors_per_miner_ = poisson_genesis(s.n, s.candidates, word(derive("genesis", seed)));
  const auto level = s.security_bits == 256 ? crypto::SecurityLevel::k256 : crypto::SecurityLevel::k128;

  auto genesis = std::make_shared<ledger::Genesis>();
  genesis->config.level = level;
  genesis->config.sector_size = s.sector_size;
  genesis->config.fragment_size = s.fragment_size;
  genesis->seed = derive("genesis-seed", seed);
  std::vector<crypto::KeyPair> keys;
  std::vector<std::map<pos::SectorId, pos::SectorTree>> trees(sectors_per_miner_.size());
  for (std::size_t m = 0; m < sectors_per_miner_.size(); ++m) {
    keys.push_back(crypto::derive_keypair(level, derive("miner-key", seed, m)));
    genesis->miner_keys.push_back(keys.back().public_key);
    for (std::uint32_t i = 0; i < sectors_per_miner_[m]; ++i) {
      const pos::SectorId id = ledger::make_sector_id(static_cast<MinerId>(m), i);
      auto tree = pos::build_tree(pos::pseudorandom_fill(s.sector_size, derive("sector", seed, id)),
                                  s.fragment_size);
      genesis->sectors.push_back({static_cast<MinerId>(m), id, tree.root()});
      trees[m].emplace(id, std::move(tree));
    }
    genesis_sectors_ += sectors_per_miner_[m];
  }

  corrupted_ = adversary::choose_corrupted(sectors_per_miner_, s.byzantine_fraction, word(derive("corrupt", seed)));
  const bool attack = !(s.strategies.size() == 1 && s.strategies[0] == adversary::Strategy::kNone);
  if (!attack) corrupted_.clear();
  for (MinerId m : corrupted_) byzantine_sectors_ += sectors_per_miner_[m];

  dep_ = std::make_unique<protocol::Deployment>();
  dep_->sim = sim_.get();
  dep_->genesis = genesis;
  dep_->cache = std::make_shared<crypto::VerificationCache>();
  dep_->config.delta = link.delta;
  dep_->config.commit_wait = 2 * link.delta;
  dep_->config.report_equivocation = s.report_equivocation;
  dep_->miner_count = sectors_per_miner_.size();

  coalition_ = std::make_shared<adversary::Coalition>();
  std::size_t rank = 0;
  for (std::size_t m = 0; m < sectors_per_miner_.size(); ++m) {
    std::shared_ptr<protocol::Behavior> behavior;
    if (corrupted_.contains(static_cast<MinerId>(m))) {
      const adversary::Strategy role = s.strategies[rank % s.strategies.size()];
      behavior = adversary::make_behavior(role, static_cast<MinerId>(m), rank, coalition_,
                                          word(derive("adversary", seed, m)));
      ++rank;
    }
    miners_.push_back(std::make_unique<protocol::MinerNode>(*dep_, static_cast<MinerId>(m), keys[m],
                                                            std::move(trees[m]), behavior));
    sim_->add_node(miners_.back().get(), !behavior || behavior->honest());
  }
  view_index_ = 0;
  while (view_index_ < miners_.size() && corrupted_.contains(static_cast<MinerId>(view_index_))) ++view_index_;
  if (view_index_ == miners_.size()) throw ParameterError("no honest miner left to serve the client");

  client_ = std::make_unique<protocol::ClientNode>(
      *dep_, static_cast<sim::NodeIndex>(miners_.size()),
      crypto::derive_keypair(level, derive("client-key", seed)), &miners_[view_index_]->ledger(),
      word(derive("client", seed)));
  sim_->add_node(client_.get());

  for (auto& m : miners_)
    m->set_commit_observer([this](const protocol::MinerNode& node, const ledger::CommittedBlock& cb) {
      observe(node, cb);
    });
  height_started_[1] = 0;
  for (auto& m : miners_) m->start();
}

const ledger::Ledger& Network::view() const { return miners_[view_index_]->ledger(); }

void Network::observe(const protocol::MinerNode& node, const ledger::CommittedBlock& cb) {
  if (!honest(node.id())) return;
  const ledger::Height h = cb.block.height;
  const Hash256 hash = cb.block.hash();
  auto [it, fresh] = first_commit_.emplace(h, hash);
  if (!fresh && it->second != hash) ++conflicts_;
  if (node.id() != view_index_) return;
  height_started_[h + 1] = sim_->now() + dep_->config.commit_wait;
  const ledger::WeightTable& w = node.ledger().weights();
  std::uint64_t byz = 0;
  for (MinerId m : corrupted_) byz += w.weight(m);
  if (byz > byzantine_sectors_) ++excess_weight_;
}

protocol::PutResult Network::put(Bytes file, sim::Time cap, ledger::Height lifetime) {
  std::optional<protocol::PutResult> out;
  client_->put(std::move(file), [&](const protocol::PutResult& r) { out = r; }, lifetime);
  sim_->run_until([&] { return out.has_value(); }, sim_->now() + cap);
  if (!out) {
    protocol::PutResult r;
    r.started = sim_->now() - cap;
    r.finished = sim_->now();
    return r;
  }
  return *out;
}

protocol::GetResult Network::get(const Hash256& id, sim::Time cap) {
  std::optional<protocol::GetResult> out;
  client_->get(id, [&](const protocol::GetResult& r) { out = r; });
  sim_->run_until([&] { return out.has_value(); }, sim_->now() + cap);
  if (!out) {
    protocol::GetResult r;
    r.file_id = id;
    r.started = sim_->now() - cap;
    r.finished = sim_->now();
    return r;
  }
  return *out;
}

bool Network::run_to_height(ledger::Height height, sim::Time cap) {
  auto done = [&] {
    for (const auto& m : miners_)
      if (honest(m->id()) && m->ledger().height() < height) return false;
    return true;
  };
  return sim_->run_until(done, sim_->now() + cap).satisfied;
}

std::uint64_t Network::stored_chunk_bytes() const {
  std::uint64_t total = 0;
  for (const auto& m : miners_) total += m->stored_chunk_bytes();
  return total;
}

SafetyReport Network::safety() const {
  SafetyReport r;
  r.conflicting_commits = conflicts_;
  r.excess_byzantine_weight = excess_weight_;
  r.min_height = std::numeric_limits<ledger::Height>::max();
  std::map<ledger::Height, Hash256> state_at;
  for (const auto& m : miners_) {
    if (!honest(m->id())) continue;
    const ledger::Ledger& l = m->ledger();
    r.min_height = std::min(r.min_height, l.height());
    r.max_height = std::max(r.max_height, l.height());
    const Hash256 sh = l.state_hash();
    auto [it, fresh] = state_at.emplace(l.height(), sh);
    if (!fresh && it->second != sh) ++r.state_divergences;
    for (const auto& [h, round] : m->decided_rounds()) {
      auto st = height_started_.find(h);
      if (st != height_started_.end() && st->second >= sim_->policy().gst)
        r.max_round_after_gst = std::max(r.max_round_after_gst, round);
    }
  }
  // Sybil sectors must never become active.
  for (const auto& [id, rec] : view().state().sectors)
    if ((id & 0xffffffffu) >= adversary::kSybilIndexBase && rec.status == ledger::SectorStatus::kActive)
      ++r.excess_byzantine_weight;
  return r;
}

// ---- workload ---------------------------------------------------------------

ScenarioResult run_scenario(const Scenario& s) {
  validate(s);
  ScenarioResult result;
  result.scenario = s;
  const sim::Time cap = ms_to_time(s.op_cap_ms);
  for (std::uint64_t t = 0; t < s.trials; ++t) {
    const std::uint64_t trial_seed = word(derive("trial", s.seed, t));
    Network net(s, trial_seed);
    std::mt19937_64 rng(word(derive("files", trial_seed)));

    TrialRow row;
    row.seed = s.seed;
    row.trial = t;
    row.n = net.genesis_sectors();
    row.miners = net.miner_count();
    row.byzantine_fraction = s.byzantine_fraction;
    row.byzantine_sectors = net.byzantine_sectors();
    row.strategy = strategies_name(s.strategies);
    row.file_size = s.file_size;
    std::uint64_t put_us = 0;
    std::uint64_t get_us = 0;

    for (std::uint64_t f = 0; f < s.files_per_trial; ++f) {
      Bytes data(s.file_size);
      for (auto& b : data) b = static_cast<std::uint8_t>(rng());
      FileRecord rec;
      rec.trial = t;
      rec.file_size = s.file_size;
      const std::uint64_t before = net.stored_chunk_bytes();
      protocol::PutResult p = net.put(data, cap);
      rec.put_ok = p.success;
      rec.encoder_attempts = p.encoder_attempts;
      rec.put_ms = static_cast<double>(p.latency()) / sim::kMillisecond;
      ++row.files;
      row.gets += s.gets_per_file;
      rec.gets = s.gets_per_file;
      if (p.success) {
        ++row.puts_ok;
        put_us += static_cast<std::uint64_t>(p.latency());
        for (std::uint64_t g = 0; g < s.gets_per_file; ++g) {
          protocol::GetResult r = net.get(p.file_id, cap);
          if (!r.success) continue;
          if (r.data != data) {
            ++rec.wrong_files;
            continue;
          }
          ++rec.gets_ok;
          rec.tries += r.tries;
          rec.get_ms += static_cast<double>(r.latency()) / sim::kMillisecond;
          get_us += static_cast<std::uint64_t>(r.latency());
        }
        if (auto m = net.view().manifest(p.file_id)) rec.padded_bytes = m->padded_size();
        rec.stored_bytes = net.stored_chunk_bytes() - before;
        row.stored_bytes += rec.stored_bytes;
        row.padded_bytes += rec.padded_bytes;
        row.file_bytes += s.file_size;
      }
      row.gets_ok += rec.gets_ok;
      row.tries += rec.tries;
      row.wrong_files += rec.wrong_files;
      result.files.push_back(rec);
    }
    row.put_ms = static_cast<double>(put_us) / sim::kMillisecond;
    row.get_ms = static_cast<double>(get_us) / sim::kMillisecond;
    const SafetyReport safety = net.safety();
    row.conflicting_commits = safety.conflicting_commits;
    row.state_divergences = safety.state_divergences;
    row.excess_byzantine_weight = safety.excess_byzantine_weight;
    row.height = safety.max_height;
    row.max_round_after_gst = safety.max_round_after_gst;
    result.rows.push_back(std::move(row));
  }
  result.totals = aggregate(result.rows);
  return result;
}

Aggregates aggregate(const std::vector<TrialRow>& rows) {
  Aggregates a;
  std::uint64_t puts_ok = 0, gets = 0, gets_ok = 0, tries = 0, stored = 0, padded = 0, file_bytes = 0;
  double put_ms = 0.0, get_ms = 0.0;
  for (const TrialRow& r : rows) {
    ++a.trials;
    a.files += r.files;
    puts_ok += r.puts_ok;
    gets += r.gets;
    gets_ok += r.gets_ok;
    tries += r.tries;
    stored += r.stored_bytes;
    padded += r.padded_bytes;
    file_bytes += r.file_bytes;
    put_ms += r.put_ms;
    get_ms += r.get_ms;
    a.wrong_files += r.wrong_files;
    a.safety_violations += r.conflicting_commits + r.state_divergences + r.excess_byzantine_weight;
    a.max_round_after_gst = std::max(a.max_round_after_gst, r.max_round_after_gst);
  }
  auto ratio = [](double x, std::uint64_t y) { return y == 0 ? 0.0 : x / static_cast<double>(y); };
  a.put_success_rate = ratio(static_cast<double>(puts_ok), a.files);
  a.success_rate = ratio(static_cast<double>(gets_ok), gets);
  a.mean_tries = ratio(static_cast<double>(tries), gets_ok);
  a.storage_ratio = ratio(static_cast<double>(stored), padded);
  a.storage_per_file_byte = ratio(static_cast<double>(stored), file_bytes);
  a.mean_put_ms = ratio(put_ms, puts_ok);
  a.mean_get_ms = ratio(get_ms, gets_ok);
  return a;
}

// ---- sweeps -----------------------------------------------------------------

Grid parse_grid(std::string_view json_text) {
  json j = parse_json(json_text);
  Grid g;
  g.base = scenario_from(j, true);
  if (!j.contains("grid")) return g;
  const json& axes = j["grid"];
  if (!axes.is_object()) throw ParameterError("grid must be an object");
  for (const auto& [key, value] : axes.items()) {
    if (!value.is_array() || value.empty()) throw ParameterError("grid axis " + key + " must be a nonempty array");
    try {
      if (key == "n") g.n = value.get<std::vector<std::uint64_t>>();
      else if (key == "byzantine_fraction") g.byzantine_fraction = value.get<std::vector<double>>();
      else if (key == "file_size") g.file_size = value.get<std::vector<std::uint64_t>>();
      else if (key == "strategy")
        for (const json& e : value) g.strategies.push_back(strategies_from(e));
      else throw ParameterError("unknown grid axis: " + key);
    } catch (const json::exception& e) {
      throw ParameterError("grid axis " + key + ": " + e.what());
    }
  }
  return g;
}

std::vector<Scenario> expand(const Grid& g) {
  auto or_base = [](const auto& axis, auto base) {
    using T = std::decay_t<decltype(base)>;
    return axis.empty() ? std::vector<T>{base} : std::vector<T>(axis.begin(), axis.end());
  };
  std::vector<Scenario> out;
  for (std::uint64_t n : or_base(g.n, g.base.n))
    for (double fr : or_base(g.byzantine_fraction, g.base.byzantine_fraction))
      for (const auto& st : or_base(g.strategies, g.base.strategies))
        for (std::uint64_t fs : or_base(g.file_size, g.base.file_size)) {
          Scenario s = g.base;
          s.n = n;
          s.byzantine_fraction = fr;
          s.strategies = st;
          s.file_size = fs;
          validate(s);
          out.push_back(std::move(s));
        }
  return out;
}

std::vector<ScenarioResult> sweep(const Grid& g, unsigned threads) {
  const std::vector<Scenario> points = expand(g);
  std::vector<ScenarioResult> results(points.size());
  if (threads <= 1 || points.size() <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i) results[i] = run_scenario(points[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(points.size());
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, points.size()); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < points.size(); i = next++) {
        try {
          results[i] = run_scenario(points[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

// ---- output -----------------------------------------------------------------

namespace {

constexpr const char* kCsvHeader =
    "seed,trial,n,miners,byzantine_fraction,byzantine_sectors,strategy,file_size,files,puts_ok,gets,"
    "gets_ok,wrong_files,tries,put_ms,get_ms,stored_bytes,padded_bytes,file_bytes,conflicting_commits,"
    "state_divergences,excess_byzantine_weight,height,max_round_after_gst";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

json aggregates_to_json(const Aggregates& a) {
  return {
      {"trials", a.trials},
      {"files", a.files},
      {"put_success_rate", a.put_success_rate},
      {"success_rate", a.success_rate},
      {"mean_tries", a.mean_tries},
      {"storage_ratio", a.storage_ratio},
      {"storage_per_file_byte", a.storage_per_file_byte},
      {"mean_put_ms", a.mean_put_ms},
      {"mean_get_ms", a.mean_get_ms},
      {"wrong_files", a.wrong_files},
      {"safety_violations", a.safety_violations},
      {"max_round_after_gst", a.max_round_after_gst},
  };
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<TrialRow>& rows) {
  out << kCsvHeader << '\n';
  for (const TrialRow& r : rows) {
    out << r.seed << ',' << r.trial << ',' << r.n << ',' << r.miners << ',' << fmt("%.17g", r.byzantine_fraction)
        << ',' << r.byzantine_sectors << ',' << r.strategy << ',' << r.file_size << ',' << r.files << ','
        << r.puts_ok << ',' << r.gets << ',' << r.gets_ok << ',' << r.wrong_files << ',' << r.tries << ','
        << fmt("%.3f", r.put_ms) << ',' << fmt("%.3f", r.get_ms) << ',' << r.stored_bytes << ','
        << r.padded_bytes << ',' << r.file_bytes << ',' << r.conflicting_commits << ','
        << r.state_divergences << ',' << r.excess_byzantine_weight << ',' << r.height << ','
        << r.max_round_after_gst << '\n';
  }
}

std::vector<TrialRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError("unexpected CSV header");
  std::vector<TrialRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split(line, ',');
    if (c.size() != 24) throw ParseError("CSV row has the wrong number of columns");
    try {
      TrialRow r;
      std::size_t i = 0;
      auto u = [&] { return std::stoull(c[i++]); };
      auto d = [&] { return std::stod(c[i++]); };
      r.seed = u();
      r.trial = u();
      r.n = u();
      r.miners = u();
      r.byzantine_fraction = d();
      r.byzantine_sectors = u();
      r.strategy = c[i++];
      r.file_size = u();
      r.files = u();
      r.puts_ok = u();
      r.gets = u();
      r.gets_ok = u();
      r.wrong_files = u();
      r.tries = u();
      r.put_ms = d();
      r.get_ms = d();
      r.stored_bytes = u();
      r.padded_bytes = u();
      r.file_bytes = u();
      r.conflicting_commits = u();
      r.state_divergences = u();
      r.excess_byzantine_weight = u();
      r.height = u();
      r.max_round_after_gst = u();
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ParseError("CSV cell is not a number");
    }
  }
  return rows;
}

std::string aggregates_json(const std::vector<ScenarioResult>& results) {
  json arr = json::array();
  for (const ScenarioResult& r : results) {
    json e = aggregates_to_json(r.totals);
    e["scenario"] = json::parse(scenario_json(r.scenario));
    arr.push_back(std::move(e));
  }
  return json{{"results", arr}}.dump(2);
}

std::vector<Aggregates> parse_aggregates_json(std::string_view text) {
  std::vector<Aggregates> out;
  try {
    json j = json::parse(text);
    for (const json& e : j.at("results")) {
      Aggregates a;
      a.trials = e.at("trials").get<std::uint64_t>();
      a.files = e.at("files").get<std::uint64_t>();
      a.put_success_rate = e.at("put_success_rate").get<double>();
      a.success_rate = e.at("success_rate").get<double>();
      a.mean_tries = e.at("mean_tries").get<double>();
      a.storage_ratio = e.at("storage_ratio").get<double>();
      a.storage_per_file_byte = e.at("storage_per_file_byte").get<double>();
      a.mean_put_ms = e.at("mean_put_ms").get<double>();
      a.mean_get_ms = e.at("mean_get_ms").get<double>();
      a.wrong_files = e.at("wrong_files").get<std::uint64_t>();
      a.safety_violations = e.at("safety_violations").get<std::uint64_t>();
      a.max_round_after_gst = e.at("max_round_after_gst").get<std::uint64_t>();
      out.push_back(a);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad aggregates JSON: ") + e.what());
  }
  return out;
}

void write_plot_data(std::ostream& out, const std::vector<ScenarioResult>& results) {
  out << "# n byzantine_fraction strategy file_size success_rate mean_tries storage_ratio "
         "storage_per_file_byte mean_put_ms mean_get_ms\n";
  for (const ScenarioResult& r : results) {
    const Aggregates& a = r.totals;
    out << r.scenario.n << ' ' << fmt("%.6g", r.scenario.byzantine_fraction) << ' '
        << strategies_name(r.scenario.strategies) << ' ' << r.scenario.file_size << ' '
        << fmt("%.6f", a.success_rate) << ' ' << fmt("%.6f", a.mean_tries) << ' '
        << fmt("%.6f", a.storage_ratio) << ' ' << fmt("%.6f", a.storage_per_file_byte) << ' '
        << fmt("%.3f", a.mean_put_ms) << ' ' << fmt("%.3f", a.mean_get_ms) << '\n';
  }
}

}  // namespace bftdsn::harness
