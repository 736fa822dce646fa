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

#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "bftdsn/error.hpp"

namespace bftdsn::harness {
namespace {

using adversary::Strategy;

Scenario small(std::uint64_t n = 10) {
  Scenario s;
  s.n = n;
  s.trials = 2;
  s.file_size = 3000;
  s.sector_size = 8192;
  s.fragment_size = 256;
  return s;
}

TEST(Genesis, PoissonPledgesSumToN) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto counts = poisson_genesis(40, 0, seed);
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}), 40u);
    for (auto c : counts) EXPECT_GT(c, 0u);
    EXPECT_LE(counts.size(), 40u);
  }
  EXPECT_EQ(poisson_genesis(40, 0, 3), poisson_genesis(40, 0, 3));
  EXPECT_EQ(poisson_genesis(5, 1, 3), (std::vector<std::uint64_t>{5}));
}

TEST(Genesis, PoissonSharesAreRoughlyEven) {
  // Each of c candidates owns 1/c of the arrivals in expectation.
  std::vector<double> share(4, 0.0);
  const int runs = 400;
  for (int r = 0; r < runs; ++r) {
    // Ask for many sectors so no candidate is dropped.
    auto counts = poisson_genesis(400, 4, r);
    ASSERT_EQ(counts.size(), 4u);
    for (int i = 0; i < 4; ++i) share[i] += static_cast<double>(counts[i]) / 400.0;
  }
  for (double s : share) EXPECT_NEAR(s / runs, 0.25, 0.01);
}

TEST(Scenario, ParseAndPrintRoundTrip) {
  Scenario s = parse_scenario(R"({"name":"x","seed":9,"n":22,"byzantine_fraction":0.2,
      "strategy":"drop-chunk+equivocate","trials":3,"file_size":1024,"gst_ms":50})");
  EXPECT_EQ(s.n, 22u);
  EXPECT_EQ(s.strategies, (std::vector<Strategy>{Strategy::kDropChunk, Strategy::kEquivocate}));
  Scenario back = parse_scenario(scenario_json(s));
  EXPECT_EQ(scenario_json(back), scenario_json(s));
}

TEST(Scenario, InvalidSchemaThrows) {
  EXPECT_THROW(parse_scenario("not json"), ParameterError);
  EXPECT_THROW(parse_scenario(R"({"n":3})"), ParameterError);
  EXPECT_THROW(parse_scenario(R"({"colour":"red"})"), ParameterError);
  EXPECT_THROW(parse_scenario(R"({"n":"ten"})"), ParameterError);
  EXPECT_THROW(parse_scenario(R"({"strategy":"teleport"})"), ParameterError);
  EXPECT_THROW(parse_scenario(R"({"byzantine_fraction":1.5})"), ParameterError);
  EXPECT_THROW(parse_scenario(R"({"sector_size":1000,"fragment_size":256})"), ParameterError);
  EXPECT_THROW(parse_scenario("[]"), ParameterError);
}

TEST(Grid, ExpandsAxes) {
  Grid g = parse_grid(R"({"trials":1,"grid":{"n":[10,22],"byzantine_fraction":[0,0.1,0.2],
      "strategy":["tamper-chunk","combined"]}})");
  auto points = expand(g);
  ASSERT_EQ(points.size(), 12u);
  EXPECT_EQ(points[0].n, 10u);
  EXPECT_EQ(points.back().n, 22u);
  EXPECT_EQ(points.back().strategies, (std::vector<Strategy>{Strategy::kCombined}));
  EXPECT_THROW(parse_grid(R"({"grid":{"n":[]}})"), ParameterError);
  EXPECT_THROW(parse_grid(R"({"grid":{"speed":[1]}})"), ParameterError);
}

TEST(Network, CorruptionStaysWithinBudget) {
  Scenario s = small(22);
  s.byzantine_fraction = 0.33;
  s.strategies = {Strategy::kTamperChunk};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Network net(s, seed);
    EXPECT_LE(net.byzantine_sectors(), 7u);  // floor(0.33 * 22)
    EXPECT_EQ(net.genesis_sectors(), 22u);
    for (auto m : net.corrupted()) EXPECT_FALSE(net.honest(m));
  }
}

TEST(RunScenario, HonestStorageRatio) {
  Scenario s = small(10);
  s.files_per_trial = 3;
  ScenarioResult r = run_scenario(s);
  EXPECT_EQ(r.totals.success_rate, 1.0);
  EXPECT_EQ(r.totals.wrong_files, 0u);
  EXPECT_EQ(r.totals.safety_violations, 0u);
  EXPECT_DOUBLE_EQ(r.totals.storage_ratio, 10.0 / 7.0);
  EXPECT_DOUBLE_EQ(r.totals.mean_tries, 1.0);
  EXPECT_EQ(r.files.size(), 6u);
  EXPECT_FALSE(r.violated());
}

TEST(RunScenario, TamperBelowThresholdAlwaysSucceeds) {
  Scenario s = small(40);
  s.byzantine_fraction = 0.3;
  s.strategies = {Strategy::kTamperChunk};
  ScenarioResult r = run_scenario(s);
  EXPECT_EQ(r.totals.success_rate, 1.0);
  EXPECT_EQ(r.totals.wrong_files, 0u);
  EXPECT_EQ(r.totals.safety_violations, 0u);
}

TEST(RunScenario, SybilPledgesNeverGainWeight) {
  Scenario s = small(10);
  s.byzantine_fraction = 0.3;
  s.strategies = {Strategy::kSybilPledge};
  s.files_per_trial = 2;
  ScenarioResult r = run_scenario(s);
  EXPECT_EQ(r.totals.success_rate, 1.0);
  EXPECT_EQ(r.totals.safety_violations, 0u);
}

TEST(RunScenario, SameSeedSameCsv) {
  Scenario s = small(10);
  s.byzantine_fraction = 0.2;
  s.strategies = {Strategy::kFuzz};
  std::ostringstream a, b;
  write_csv(a, run_scenario(s).rows);
  write_csv(b, run_scenario(s).rows);
  EXPECT_EQ(a.str(), b.str());
  s.seed = 2;
  std::ostringstream c;
  write_csv(c, run_scenario(s).rows);
  EXPECT_NE(a.str(), c.str());
}

TEST(Emit, EmptyResultsGiveHeaderOnlyCsv) {
  std::ostringstream out;
  write_csv(out, {});
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  EXPECT_EQ(text.rfind("seed,trial,", 0), 0u);
  std::istringstream in(text);
  EXPECT_TRUE(read_csv(in).empty());
}

TEST(Emit, CsvAndJsonRoundTrip) {
  Scenario s = small(10);
  s.byzantine_fraction = 0.3;
  s.strategies = {Strategy::kBadRetrieval};
  s.gets_per_file = 4;
  ScenarioResult r = run_scenario(s);
  std::stringstream csv;
  write_csv(csv, r.rows);
  auto rows = read_csv(csv);
  EXPECT_EQ(rows, r.rows);
  EXPECT_EQ(aggregate(rows), r.totals);
  auto parsed = parse_aggregates_json(aggregates_json({r, r}));
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[0], r.totals);
  EXPECT_THROW(parse_aggregates_json("{}"), ParseError);
  std::istringstream bad("nope\n");
  EXPECT_THROW(read_csv(bad), ParseError);
}

TEST(Emit, PlotDataHasOneLinePerPoint) {
  Grid g;
  g.base = small(10);
  g.base.trials = 1;
  g.n = {10, 13};
  auto results = sweep(g, 2);
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[1].scenario.n, 13u);
  std::ostringstream out;
  write_plot_data(out, results);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  // Threaded and serial sweeps agree.
  auto serial = sweep(g, 1);
  for (std::size_t i = 0; i < serial.size(); ++i) EXPECT_EQ(serial[i].rows, results[i].rows);
}

}  // namespace
}  // namespace bftdsn::harness
