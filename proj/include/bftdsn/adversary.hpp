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

// Byzantine miner strategies, expressed as protocol::Behavior overrides.
// The corruption set is fixed when the network is built.

#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bftdsn/protocol.hpp"

namespace bftdsn::adversary {

enum class Strategy : std::uint8_t {
  kNone = 0,
  kTamperChunk,
  kDropChunk,
  kBadEncoder,
  kBadRetrieval,
  kSybilPledge,
  kGenerationAttack,
  kEquivocate,
  kCombined,
  kFuzz,
};

/// "tamper-chunk", "drop-chunk", ... and "none".
std::string to_string(Strategy s);
/// Throws ParameterError for an unknown name.
Strategy parse_strategy(std::string_view name);
/// Every strategy except kNone.
const std::vector<Strategy>& attack_strategies();

struct AdversaryConfig {
  Strategy strategy = Strategy::kNone;
  double byzantine_fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Whole miners in seeded random order, each taken while the running sector
/// total stays within floor(fraction * n). Throws ParameterError for a
/// fraction outside [0, 1].
std::set<protocol::MinerId> choose_corrupted(std::span<const std::uint64_t> sectors_per_miner,
                                             double fraction, std::uint64_t seed);

/// State the corrupted miners share.
struct Coalition {
  /// Chunks the coalition kept per file (generation attack).
  std::map<Hash256, std::uint32_t> vault;
  std::uint64_t sybil_pledges = 0;
};

/// Behaviour of corrupted miner `id`; `rank` is its position in the
/// coalition and picks the role under kCombined.
std::shared_ptr<protocol::Behavior> make_behavior(Strategy strategy, protocol::MinerId id,
                                                  std::size_t rank,
                                                  std::shared_ptr<Coalition> coalition,
                                                  std::uint64_t seed);

/// Fake sectors a sybil miner pledges at its first height.
inline constexpr std::uint32_t kSybilSectors = 3;
/// Local sector indices at or above this value are sybil claims.
inline constexpr std::uint32_t kSybilIndexBase = 1u << 20;

}  // namespace bftdsn::adversary
