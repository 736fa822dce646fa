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

#include "bftdsn/merkle_pos.hpp"

#include <sodium.h>

#include <algorithm>
#include <bit>

#include "bftdsn/crypto.hpp"

namespace bftdsn::pos {

Hash256 leaf_hash(ByteView fragment) {
  static constexpr std::uint8_t kLeaf = 0x00;
  return crypto::sha256({ByteView(&kLeaf, 1), fragment});
}

Hash256 node_hash(const Hash256& left, const Hash256& right) {
  static constexpr std::uint8_t kNode = 0x01;
  return crypto::sha256({ByteView(&kNode, 1), left.view(), right.view()});
}

ByteView SectorTree::fragment(std::size_t leaf) const {
  if (leaf >= leaf_count()) throw ShapeError("leaf index out of range");
  return ByteView(data_).subspan(leaf * fragment_size_, fragment_size_);
}

SectorTree build_tree(Bytes sector_data, std::size_t fragment_size) {
  if (fragment_size == 0 || sector_data.empty() || sector_data.size() % fragment_size != 0)
    throw ShapeError("sector size must be a nonzero multiple of the fragment size");
  const std::size_t leaves = sector_data.size() / fragment_size;
  if (!std::has_single_bit(leaves)) throw ShapeError("fragment count must be a power of two");

  SectorTree t;
  t.fragment_size_ = fragment_size;
  t.data_ = std::move(sector_data);
  std::vector<Hash256> level(leaves);
  for (std::size_t i = 0; i < leaves; ++i)
    level[i] = leaf_hash(ByteView(t.data_).subspan(i * fragment_size, fragment_size));
  t.levels_.push_back(std::move(level));
  while (t.levels_.back().size() > 1) {
    const auto& below = t.levels_.back();
    std::vector<Hash256> up(below.size() / 2);
    for (std::size_t i = 0; i < up.size(); ++i) up[i] = node_hash(below[2 * i], below[2 * i + 1]);
    t.levels_.push_back(std::move(up));
  }
  return t;
}

SectorTree update_tree(const SectorTree& tree, std::size_t offset, ByteView new_data) {
  if (offset > tree.data_.size() || new_data.size() > tree.data_.size() - offset)
    throw ShapeError("write falls outside the sector");
  SectorTree t = tree;
  if (new_data.empty()) return t;
  std::copy(new_data.begin(), new_data.end(), t.data_.begin() + static_cast<std::ptrdiff_t>(offset));

  std::size_t first = offset / t.fragment_size_;
  std::size_t last = (offset + new_data.size() - 1) / t.fragment_size_;
  for (std::size_t i = first; i <= last; ++i) t.levels_[0][i] = leaf_hash(t.fragment(i));
  for (std::size_t lvl = 1; lvl < t.levels_.size(); ++lvl) {
    first /= 2;
    last /= 2;
    const auto& below = t.levels_[lvl - 1];
    for (std::size_t i = first; i <= last; ++i)
      t.levels_[lvl][i] = node_hash(below[2 * i], below[2 * i + 1]);
  }
  return t;
}

Bytes PosProof::encode() const {
  ByteWriter w(24 + 4 + leaf_data.size() + 1 + 32 * path.size());
  w.u64(sector_id).u64(epoch).u64(leaf_index).blob(as_view(leaf_data));
  w.u8(static_cast<std::uint8_t>(path.size()));
  for (const Hash256& h : path) w.hash(h);
  return std::move(w).take();
}

PosProof PosProof::decode(ByteView bytes) {
  ByteReader r(bytes);
  PosProof p;
  p.sector_id = r.u64();
  p.epoch = r.u64();
  p.leaf_index = r.u64();
  p.leaf_data = r.blob();
  std::uint8_t n = r.u8();
  p.path.reserve(n);
  for (std::uint8_t i = 0; i < n; ++i) p.path.push_back(r.hash());
  r.expect_done();
  return p;
}

Hash256 PosProof::digest() const { return crypto::sha256(as_view(encode())); }

PosProof prove(const SectorTree& tree, std::size_t leaf_index, SectorId sector_id,
               std::uint64_t epoch) {
  if (leaf_index >= tree.leaf_count()) throw ShapeError("challenge index outside the tree");
  PosProof p;
  p.sector_id = sector_id;
  p.epoch = epoch;
  p.leaf_index = leaf_index;
  ByteView frag = tree.fragment(leaf_index);
  p.leaf_data.assign(frag.begin(), frag.end());
  std::size_t idx = leaf_index;
  for (std::size_t lvl = 0; lvl + 1 < tree.levels().size(); ++lvl) {
    p.path.push_back(tree.levels()[lvl][idx ^ 1]);
    idx /= 2;
  }
  return p;
}

bool verify_path(const Hash256& root, const PosProof& proof) {
  if (proof.path.size() >= 64) return false;
  if (proof.leaf_index >> proof.path.size() != 0) return false;
  Hash256 acc = leaf_hash(as_view(proof.leaf_data));
  std::uint64_t idx = proof.leaf_index;
  for (const Hash256& sibling : proof.path) {
    acc = (idx & 1) ? node_hash(sibling, acc) : node_hash(acc, sibling);
    idx >>= 1;
  }
  return acc == root;
}

bool verify_proof(const Hash256& root, const PosProof& proof, const ChallengeContext& ctx) {
  if (ctx.leaf_count == 0 || !std::has_single_bit(ctx.leaf_count)) return false;
  if (proof.leaf_data.size() != ctx.fragment_size) return false;
  if (proof.path.size() != static_cast<std::size_t>(std::countr_zero(ctx.leaf_count))) return false;
  if (proof.leaf_index != challenge_index(ctx.previous_digest, ctx.leaf_count)) return false;
  return verify_path(root, proof);
}

std::size_t challenge_index(const Hash256& previous_digest, std::size_t leaf_count) {
  if (leaf_count == 0) throw ShapeError("leaf count must be positive");
  return static_cast<std::size_t>(crypto::sha256(previous_digest.view()).prefix_u64() % leaf_count);
}

Hash256 initial_challenge_seed(SectorId sector, const Hash256& genesis_hash) {
  ByteWriter w;
  w.u64(sector).hash(genesis_hash);
  return crypto::sha256(as_view(w.bytes()));
}

Bytes pseudorandom_fill(std::size_t size, const Hash256& seed) {
  static_assert(randombytes_SEEDBYTES == 32);
  Bytes out(size);
  randombytes_buf_deterministic(out.data(), out.size(), seed.bytes.data());
  return out;
}

}  // namespace bftdsn::pos
