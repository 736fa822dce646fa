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

// Weighted threshold signatures.
//
// The aggregate is the list of distinct signers' deterministic signatures;
// verification checks every member and sums the signers' public weights.
// Aggregates therefore grow with the signer count, but the setup / keygen /
// sign / aggregate / verify contract is the usual one: verify(m, sigma, vk, t)
// holds iff signers of total weight >= t signed m.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "bftdsn/bytes.hpp"
#include "bftdsn/crypto.hpp"

namespace bftdsn::wts {

using SignerId = std::uint32_t;

struct PublicParams {
  crypto::SecurityLevel level = crypto::SecurityLevel::k128;
  Hash256 seed;

  bool operator==(const PublicParams&) const = default;
};

/// Public keys of all signers, shared between vk and ak.
struct KeyDirectory {
  crypto::SecurityLevel level = crypto::SecurityLevel::k128;
  std::vector<Bytes> public_keys;
};

/// Aggregation key: what the aggregator needs to screen partials.
class AggregationKey {
 public:
  AggregationKey() = default;
  AggregationKey(std::shared_ptr<const KeyDirectory> keys,
                 std::shared_ptr<crypto::VerificationCache> cache)
      : keys_(std::move(keys)), cache_(std::move(cache)) {}

  [[nodiscard]] const KeyDirectory& keys() const { return *keys_; }
  [[nodiscard]] crypto::VerificationCache* cache() const { return cache_.get(); }

 private:
  std::shared_ptr<const KeyDirectory> keys_;
  std::shared_ptr<crypto::VerificationCache> cache_;
};

/// Verification key: the public keys plus the weight vector.
class VerificationKey {
 public:
  VerificationKey() = default;
  VerificationKey(std::shared_ptr<const KeyDirectory> keys, std::vector<std::uint64_t> weights,
                  std::shared_ptr<crypto::VerificationCache> cache = nullptr);

  [[nodiscard]] std::size_t size() const { return weights_.size(); }
  [[nodiscard]] std::uint64_t weight(SignerId id) const {
    return id < weights_.size() ? weights_[id] : 0;
  }
  [[nodiscard]] const std::vector<std::uint64_t>& weights() const { return weights_; }
  [[nodiscard]] std::uint64_t total_weight() const { return total_; }
  [[nodiscard]] const KeyDirectory& keys() const { return *keys_; }
  [[nodiscard]] crypto::VerificationCache* cache() const { return cache_.get(); }

  /// Same keys under a new weight vector (zero allowed for retired signers).
  [[nodiscard]] VerificationKey reweighted(std::vector<std::uint64_t> weights) const;
  [[nodiscard]] AggregationKey aggregation_key() const { return AggregationKey(keys_, cache_); }

 private:
  std::shared_ptr<const KeyDirectory> keys_;
  std::vector<std::uint64_t> weights_;
  std::uint64_t total_ = 0;
  std::shared_ptr<crypto::VerificationCache> cache_;
};

struct SigningKey {
  SignerId signer = 0;
  crypto::KeyPair key;
};

struct WtsKeys {
  VerificationKey vk;
  AggregationKey ak;
  std::vector<SigningKey> signing_keys;
};

struct PartialSignature {
  SignerId signer = 0;
  Hash256 message_digest;
  Bytes tag;

  bool operator==(const PartialSignature&) const = default;
};

struct AggregateSignature {
  std::vector<PartialSignature> parts;

  bool operator==(const AggregateSignature&) const = default;
};

struct AggregateResult {
  AggregateSignature signature;
  /// Signers whose partial failed validation, for fault reporting.
  std::vector<SignerId> rejected;
};

/// Supported levels are 128 and 256 bits; anything else is a ParameterError.
PublicParams wts_setup(unsigned security_bits, const Hash256& seed);

/// Throws ParameterError if weights.size() != nn, nn == 0, or any weight is 0.
WtsKeys wts_keygen(const PublicParams& pp, std::size_t nn, std::span<const std::uint64_t> weights,
                   std::shared_ptr<crypto::VerificationCache> cache = nullptr);

/// Deterministic: the same (message, key) yields the same partial.
PartialSignature wts_psign(ByteView message, const SigningKey& sk);

/// Checks a single partial against the signer's public key.
bool partial_valid(const PartialSignature& partial, const AggregationKey& ak);

/// Keeps valid partials (first per signer). With `expected_digest` set,
/// partials over any other digest are rejected; otherwise the first valid
/// partial fixes the message.
AggregateResult wts_aggregate(std::span<const PartialSignature> partials, const AggregationKey& ak,
                              std::optional<Hash256> expected_digest = std::nullopt);

/// Sum of distinct signers' weights, without checking signatures.
std::uint64_t effective_weight(const AggregateSignature& sig, const VerificationKey& vk);

bool wts_verify(ByteView message, const AggregateSignature& sig, const VerificationKey& vk,
                std::uint64_t threshold);

/// Wire form: u32 count, then (u32 signer, blob signature) per member.
void encode_aggregate(ByteWriter& w, const AggregateSignature& sig);
/// The digest is not on the wire; callers pass the one the aggregate covers.
AggregateSignature decode_aggregate(ByteReader& r, const Hash256& message_digest);

}  // namespace bftdsn::wts
