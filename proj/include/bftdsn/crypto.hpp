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

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "bftdsn/bytes.hpp"

namespace bftdsn::crypto {

/// The network-wide hash H: SHA-256.
Hash256 sha256(ByteView data);
/// H over the concatenation of the parts.
Hash256 sha256(std::initializer_list<ByteView> parts);

class Sha256Stream {
 public:
  Sha256Stream();
  ~Sha256Stream();
  Sha256Stream(const Sha256Stream&) = delete;
  Sha256Stream& operator=(const Sha256Stream&) = delete;

  Sha256Stream& update(ByteView data);
  Sha256Stream& update_u64(std::uint64_t v);
  Hash256 finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// 128 maps to Ed25519 (libsodium), 256 to Ed448 (OpenSSL). Both deterministic.
enum class SecurityLevel : std::uint16_t { k128 = 128, k256 = 256 };

struct KeyPair {
  SecurityLevel level = SecurityLevel::k128;
  Bytes public_key;
  Bytes secret_key;
};

/// Deterministically expands a 32-byte seed into a key pair.
KeyPair derive_keypair(SecurityLevel level, const Hash256& seed);
Bytes sign(const KeyPair& key, ByteView message);
bool verify(SecurityLevel level, ByteView public_key, ByteView message, ByteView signature);

/// Memo of signature/proof check outcomes keyed by a digest of the checked
/// statement. The checks are pure functions, so a hit returns exactly what a
/// fresh check would. Safe to share across threads.
class VerificationCache {
 public:
  explicit VerificationCache(std::size_t max_entries = 1u << 20) : max_entries_(max_entries) {}

  bool find(const Hash256& key, bool& result) const;
  void store(const Hash256& key, bool result);
  [[nodiscard]] std::size_t hits() const;
  [[nodiscard]] std::size_t misses() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<Hash256, bool, Hash256Hasher> entries_;
  std::size_t max_entries_;
  mutable std::size_t hits_ = 0;
  mutable std::size_t misses_ = 0;
};

/// verify(), consulting and filling `cache` when it is non-null.
bool verify_cached(VerificationCache* cache, SecurityLevel level, ByteView public_key,
                   ByteView message, ByteView signature);

}  // namespace bftdsn::crypto
