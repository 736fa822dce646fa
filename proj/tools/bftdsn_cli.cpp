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

// bftdsn: run scenarios and sweeps, write CSV / JSON / plot data.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "bftdsn/error.hpp"
#include "bftdsn/harness.hpp"

namespace fs = std::filesystem;
using namespace bftdsn;

namespace {

struct Overrides {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> n;
  std::optional<double> byz_fraction;
  std::optional<std::string> strategy;
  std::optional<std::uint64_t> file_size;
  std::optional<std::uint64_t> trials;
  std::string out = ".";
  std::string format = "csv";
  unsigned threads = 1;
};

void add_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--scenario", o.scenario, "Scenario JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override the scenario seed");
  cmd->add_option("--n", o.n, "Sectors at genesis");
  cmd->add_option("--byz-fraction", o.byz_fraction, "Fraction of sectors corrupted");
  cmd->add_option("--strategy", o.strategy, "Adversary strategy, roles joined with '+'");
  cmd->add_option("--file-size", o.file_size, "File size in bytes");
  cmd->add_option("--trials", o.trials, "Trials per grid point");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

harness::Grid load(const Overrides& o, bool keep_axes) {
  harness::Grid g;
  if (!o.scenario.empty()) {
    std::ifstream in(o.scenario);
    std::stringstream ss;
    ss << in.rdbuf();
    g = harness::parse_grid(ss.str());
  }
  harness::Scenario& s = g.base;
  if (o.seed) s.seed = *o.seed;
  if (o.n) {
    s.n = *o.n;
    g.n.clear();
  }
  if (o.byz_fraction) {
    s.byzantine_fraction = *o.byz_fraction;
    g.byzantine_fraction.clear();
  }
  if (o.strategy) {
    s.strategies = harness::parse_strategies(*o.strategy);
    g.strategies.clear();
  }
  if (o.file_size) {
    s.file_size = *o.file_size;
    g.file_size.clear();
  }
  if (o.trials) s.trials = *o.trials;
  if (!keep_axes) g = harness::Grid{s, {}, {}, {}, {}};
  return g;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw ParameterError("cannot write " + p.string());
  return out;
}

void emit(const std::vector<harness::ScenarioResult>& results, const Overrides& o) {
  fs::create_directories(o.out);
  if (o.format == "csv") {
    std::vector<harness::TrialRow> rows;
    for (const auto& r : results) rows.insert(rows.end(), r.rows.begin(), r.rows.end());
    auto out = open_out(fs::path(o.out) / "trials.csv");
    harness::write_csv(out, rows);
  }
  auto out = open_out(fs::path(o.out) / "aggregates.json");
  out << harness::aggregates_json(results) << '\n';
}

int summarize(const std::vector<harness::ScenarioResult>& results) {
  int status = 0;
  for (const auto& r : results) {
    const auto& a = r.totals;
    std::cout << r.scenario.name << " n=" << r.scenario.n << " byz=" << r.scenario.byzantine_fraction
              << " strategy=" << harness::strategies_name(r.scenario.strategies)
              << " file_size=" << r.scenario.file_size << " trials=" << a.trials
              << " success_rate=" << a.success_rate << " mean_tries=" << a.mean_tries
              << " storage_ratio=" << a.storage_ratio << " put_ms=" << a.mean_put_ms
              << " get_ms=" << a.mean_get_ms << " wrong_files=" << a.wrong_files
              << " safety_violations=" << a.safety_violations << '\n';
    if (r.violated()) status = 2;
  }
  if (status) std::cerr << "invariant violation detected\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bftdsn storage network simulator"};
  app.require_subcommand(1);
  Overrides run_o, sweep_o, plot_o;
  auto* run = app.add_subcommand("run", "Run one scenario");
  add_flags(run, run_o);
  auto* sw = app.add_subcommand("sweep", "Run every point of a scenario grid");
  add_flags(sw, sweep_o);
  sw->add_option("--threads", sweep_o.threads, "Grid points run in parallel");
  auto* plot = app.add_subcommand("plot-data", "Run a grid and write gnuplot columns");
  add_flags(plot, plot_o);
  plot->add_option("--threads", plot_o.threads, "Grid points run in parallel");
  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto g = load(run_o, false);
      std::vector<harness::ScenarioResult> results = {harness::run_scenario(g.base)};
      emit(results, run_o);
      return summarize(results);
    }
    if (sw->parsed()) {
      auto results = harness::sweep(load(sweep_o, true), sweep_o.threads);
      emit(results, sweep_o);
      return summarize(results);
    }
    auto results = harness::sweep(load(plot_o, true), plot_o.threads);
    fs::create_directories(plot_o.out);
    auto out = open_out(fs::path(plot_o.out) / "plot.dat");
    harness::write_plot_data(out, results);
    return summarize(results);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
