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

#include "bftdsn/wts.hpp"

#include <set>
#include <string>

namespace bftdsn::wts {

VerificationKey::VerificationKey(std::shared_ptr<const KeyDirectory> keys,
                                 std::vector<std::uint64_t> weights,
                                 std::shared_ptr<crypto::VerificationCache> cache)
    : keys_(std::move(keys)), weights_(std::move(weights)), cache_(std::move(cache)) {
  if (!keys_ || keys_->public_keys.size() != weights_.size())
    throw ParameterError("weight vector length must match the key count");
  for (std::uint64_t w : weights_) total_ += w;
}

VerificationKey VerificationKey::reweighted(std::vector<std::uint64_t> weights) const {
  return VerificationKey(keys_, std::move(weights), cache_);
}

PublicParams wts_setup(unsigned security_bits, const Hash256& seed) {
  PublicParams pp;
  if (security_bits == 128) {
    pp.level = crypto::SecurityLevel::k128;
  } else if (security_bits == 256) {
    pp.level = crypto::SecurityLevel::k256;
  } else {
    throw ParameterError("unsupported security level " + std::to_string(security_bits));
  }
  ByteWriter w;
  w.str("bftdsn/wts-setup").u16(static_cast<std::uint16_t>(security_bits)).hash(seed);
  pp.seed = crypto::sha256(as_view(w.bytes()));
  return pp;
}

WtsKeys wts_keygen(const PublicParams& pp, std::size_t nn, std::span<const std::uint64_t> weights,
                   std::shared_ptr<crypto::VerificationCache> cache) {
  if (nn == 0) throw ParameterError("need at least one signer");
  if (weights.size() != nn) throw ParameterError("weight vector length must equal nn");
  for (std::uint64_t w : weights)
    if (w == 0) throw ParameterError("weights must be positive");

  auto dir = std::make_shared<KeyDirectory>();
  dir->level = pp.level;
  WtsKeys keys;
  keys.signing_keys.reserve(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    ByteWriter w;
    w.str("bftdsn/wts-signer").hash(pp.seed).u64(i);
    SigningKey sk{static_cast<SignerId>(i),
                  crypto::derive_keypair(pp.level, crypto::sha256(as_view(w.bytes())))};
    dir->public_keys.push_back(sk.key.public_key);
    keys.signing_keys.push_back(std::move(sk));
  }
  keys.vk = VerificationKey(dir, std::vector<std::uint64_t>(weights.begin(), weights.end()), cache);
  keys.ak = keys.vk.aggregation_key();
  return keys;
}

PartialSignature wts_psign(ByteView message, const SigningKey& sk) {
  PartialSignature p;
  p.signer = sk.signer;
  p.message_digest = crypto::sha256(message);
  p.tag = crypto::sign(sk.key, p.message_digest.view());
  return p;
}

namespace {

bool check_partial(const PartialSignature& p, const KeyDirectory& keys,
                   crypto::VerificationCache* cache) {
  if (p.signer >= keys.public_keys.size()) return false;
  return crypto::verify_cached(cache, keys.level, as_view(keys.public_keys[p.signer]),
                               p.message_digest.view(), as_view(p.tag));
}

}  // namespace

bool partial_valid(const PartialSignature& partial, const AggregationKey& ak) {
  return check_partial(partial, ak.keys(), ak.cache());
}

AggregateResult wts_aggregate(std::span<const PartialSignature> partials, const AggregationKey& ak,
                              std::optional<Hash256> expected_digest) {
  AggregateResult result;
  std::set<SignerId> seen;
  for (const PartialSignature& p : partials) {
    if (expected_digest && !(p.message_digest == *expected_digest)) {
      result.rejected.push_back(p.signer);
      continue;
    }
    if (!check_partial(p, ak.keys(), ak.cache())) {
      result.rejected.push_back(p.signer);
      continue;
    }
    if (!expected_digest) expected_digest = p.message_digest;
    if (!seen.insert(p.signer).second) continue;  // duplicate signer
    result.signature.parts.push_back(p);
  }
  return result;
}

std::uint64_t effective_weight(const AggregateSignature& sig, const VerificationKey& vk) {
  std::set<SignerId> seen;
  std::uint64_t total = 0;
  for (const PartialSignature& p : sig.parts) {
    if (seen.insert(p.signer).second) total += vk.weight(p.signer);
  }
  return total;
}

bool wts_verify(ByteView message, const AggregateSignature& sig, const VerificationKey& vk,
                std::uint64_t threshold) {
  const Hash256 digest = crypto::sha256(message);
  std::set<SignerId> seen;
  std::uint64_t total = 0;
  for (const PartialSignature& p : sig.parts) {
    if (!seen.insert(p.signer).second) return false;
    if (!(p.message_digest == digest)) return false;
    if (!check_partial(p, vk.keys(), vk.cache())) return false;
    total += vk.weight(p.signer);
  }
  return total >= threshold;
}

void encode_aggregate(ByteWriter& w, const AggregateSignature& sig) {
  w.u32(static_cast<std::uint32_t>(sig.parts.size()));
  for (const PartialSignature& p : sig.parts) w.u32(p.signer).blob(as_view(p.tag));
}

AggregateSignature decode_aggregate(ByteReader& r, const Hash256& message_digest) {
  AggregateSignature sig;
  std::uint32_t count = r.u32();
  if (count > 1u << 16) throw ParseError("aggregate member count implausible");
  sig.parts.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    PartialSignature p;
    p.signer = r.u32();
    p.message_digest = message_digest;
    p.tag = r.blob();
    sig.parts.push_back(std::move(p));
  }
  return sig;
}

}  // namespace bftdsn::wts
