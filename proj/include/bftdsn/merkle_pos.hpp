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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bftdsn/bytes.hpp"

namespace bftdsn::pos {

using SectorId = std::uint64_t;

inline constexpr std::size_t kDefaultFragmentSize = 256;
inline constexpr std::size_t kDefaultSectorSize = 1u << 20;

/// H(0x00 || fragment)
Hash256 leaf_hash(ByteView fragment);
/// H(0x01 || left || right)
Hash256 node_hash(const Hash256& left, const Hash256& right);

/// Merkle tree over a sector's fixed-size fragments, holding the sector bytes.
/// Values are immutable; update_tree returns a new tree.
class SectorTree {
 public:
  SectorTree() = default;

  [[nodiscard]] std::size_t fragment_size() const { return fragment_size_; }
  [[nodiscard]] std::size_t leaf_count() const { return levels_.empty() ? 0 : levels_[0].size(); }
  /// Number of sibling hashes in a proof path.
  [[nodiscard]] std::size_t depth() const { return levels_.empty() ? 0 : levels_.size() - 1; }
  [[nodiscard]] const Hash256& root() const { return levels_.back().front(); }
  [[nodiscard]] const Bytes& data() const { return data_; }
  [[nodiscard]] ByteView fragment(std::size_t leaf) const;
  /// levels()[0] are the leaf hashes, levels().back() holds the root.
  [[nodiscard]] const std::vector<std::vector<Hash256>>& levels() const { return levels_; }

 private:
  friend SectorTree build_tree(Bytes sector_data, std::size_t fragment_size);
  friend SectorTree update_tree(const SectorTree& tree, std::size_t offset, ByteView new_data);

  std::size_t fragment_size_ = 0;
  Bytes data_;
  std::vector<std::vector<Hash256>> levels_;
};

/// Throws ShapeError unless the length is a power-of-two multiple of the
/// fragment size.
SectorTree build_tree(Bytes sector_data, std::size_t fragment_size = kDefaultFragmentSize);

/// Overwrites bytes at `offset`, rehashing only touched leaves and their
/// ancestors. Throws ShapeError when the write leaves the sector.
SectorTree update_tree(const SectorTree& tree, std::size_t offset, ByteView new_data);

struct PosProof {
  SectorId sector_id = 0;
  std::uint64_t epoch = 0;
  std::uint64_t leaf_index = 0;
  Bytes leaf_data;
  std::vector<Hash256> path;  // siblings, bottom-up

  bool operator==(const PosProof&) const = default;

  /// sector (8) || epoch (8) || leaf index (8) || blob(fragment) || u8 count || hashes
  [[nodiscard]] Bytes encode() const;
  static PosProof decode(ByteView bytes);
  /// H(encode()); feeds the next challenge.
  [[nodiscard]] Hash256 digest() const;
  [[nodiscard]] std::size_t size_bytes() const {
    return path.size() * sizeof(Hash256::bytes) + leaf_data.size();
  }
};

/// Everything the verifier needs besides the root.
struct ChallengeContext {
  std::size_t leaf_count = 1;
  std::size_t fragment_size = kDefaultFragmentSize;
  /// Digest of the previous accepted proof, or initial_challenge_seed() at epoch 0.
  Hash256 previous_digest;
};

/// Throws ShapeError for an out-of-range leaf.
PosProof prove(const SectorTree& tree, std::size_t leaf_index, SectorId sector_id = 0,
               std::uint64_t epoch = 0);

/// Folds H(leaf) up the path and compares to `root`. Ignores the challenge.
bool verify_path(const Hash256& root, const PosProof& proof);

/// verify_path plus: fragment size, path length and that leaf_index is the
/// challenge derived from ctx.previous_digest.
bool verify_proof(const Hash256& root, const PosProof& proof, const ChallengeContext& ctx);

/// (first 8 bytes of H(previous_digest), big-endian) mod leaf_count.
std::size_t challenge_index(const Hash256& previous_digest, std::size_t leaf_count);

/// H(sector id || genesis hash): stands in for the previous proof at epoch 0.
Hash256 initial_challenge_seed(SectorId sector, const Hash256& genesis_hash);

/// Seeded pseudorandom bytes used to fill freshly pledged sectors.
Bytes pseudorandom_fill(std::size_t size, const Hash256& seed);

}  // namespace bftdsn::pos
