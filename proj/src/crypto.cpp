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

#include "bftdsn/crypto.hpp"

#include <openssl/evp.h>
#include <sodium.h>

#include <algorithm>

namespace bftdsn::crypto {

namespace {

constexpr std::size_t kEd448KeyBytes = 57;
constexpr std::size_t kEd448SigBytes = 114;

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw Error("libsodium initialisation failed");
}

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

// Fetched once; the implicit fetch behind SHA256() dominates small inputs.
const EVP_MD* sha256_md() {
  static const EVP_MD* md = EVP_MD_fetch(nullptr, "SHA256", nullptr);
  if (!md) throw Error("sha256 unavailable");
  return md;
}

Bytes ed448_secret_from_seed(const Hash256& seed) {
  // 57 bytes of key material: H(seed||0) || H(seed||1)[0..25).
  Bytes out;
  for (std::uint8_t ctr = 0; out.size() < kEd448KeyBytes; ++ctr) {
    std::uint8_t c = ctr;
    Hash256 h = sha256({seed.view(), ByteView(&c, 1)});
    out.insert(out.end(), h.bytes.begin(), h.bytes.end());
  }
  out.resize(kEd448KeyBytes);
  return out;
}

}  // namespace

Hash256 sha256(ByteView data) {
  thread_local MdCtxPtr ctx{EVP_MD_CTX_new()};
  Hash256 h;
  if (!ctx || EVP_DigestInit_ex2(ctx.get(), sha256_md(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), h.bytes.data(), nullptr) != 1)
    throw Error("sha256 failed");
  return h;
}

Hash256 sha256(std::initializer_list<ByteView> parts) {
  Sha256Stream s;
  for (ByteView p : parts) s.update(p);
  return s.finish();
}

struct Sha256Stream::Impl {
  MdCtxPtr ctx{EVP_MD_CTX_new()};
};

Sha256Stream::Sha256Stream() : impl_(std::make_unique<Impl>()) {
  if (!impl_->ctx || EVP_DigestInit_ex2(impl_->ctx.get(), sha256_md(), nullptr) != 1)
    throw Error("sha256 init failed");
}
Sha256Stream::~Sha256Stream() = default;

Sha256Stream& Sha256Stream::update(ByteView data) {
  EVP_DigestUpdate(impl_->ctx.get(), data.data(), data.size());
  return *this;
}

Sha256Stream& Sha256Stream::update_u64(std::uint64_t v) {
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
  return update(ByteView(buf, 8));
}

Hash256 Sha256Stream::finish() {
  Hash256 h;
  EVP_DigestFinal_ex(impl_->ctx.get(), h.bytes.data(), nullptr);
  return h;
}

KeyPair derive_keypair(SecurityLevel level, const Hash256& seed) {
  KeyPair kp;
  kp.level = level;
  if (level == SecurityLevel::k128) {
    ensure_sodium();
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.bytes.data());
    return kp;
  }
  kp.secret_key = ed448_secret_from_seed(seed);
  PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED448, nullptr, kp.secret_key.data(),
                                           kp.secret_key.size()));
  if (!key) throw Error("Ed448 key derivation failed");
  std::size_t len = kEd448KeyBytes;
  kp.public_key.resize(len);
  if (EVP_PKEY_get_raw_public_key(key.get(), kp.public_key.data(), &len) != 1)
    throw Error("Ed448 public key export failed");
  return kp;
}

Bytes sign(const KeyPair& key, ByteView message) {
  if (key.level == SecurityLevel::k128) {
    ensure_sodium();
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(),
                         key.secret_key.data());
    return sig;
  }
  PkeyPtr pkey(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED448, nullptr, key.secret_key.data(),
                                            key.secret_key.size()));
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!pkey || !ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1)
    throw Error("Ed448 signing setup failed");
  Bytes sig(kEd448SigBytes);
  std::size_t len = sig.size();
  if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1)
    throw Error("Ed448 signing failed");
  sig.resize(len);
  return sig;
}

bool verify(SecurityLevel level, ByteView public_key, ByteView message, ByteView signature) {
  if (level == SecurityLevel::k128) {
    ensure_sodium();
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES || signature.size() != crypto_sign_BYTES)
      return false;
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                       public_key.data()) == 0;
  }
  if (public_key.size() != kEd448KeyBytes || signature.size() != kEd448SigBytes) return false;
  PkeyPtr pkey(
      EVP_PKEY_new_raw_public_key(EVP_PKEY_ED448, nullptr, public_key.data(), public_key.size()));
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!pkey || !ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1)
    return false;
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                          message.size()) == 1;
}

bool VerificationCache::find(const Hash256& key, bool& result) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++misses_;
    return false;
  }
  ++hits_;
  result = it->second;
  return true;
}

void VerificationCache::store(const Hash256& key, bool result) {
  std::lock_guard lock(mu_);
  if (entries_.size() >= max_entries_) entries_.clear();
  entries_.emplace(key, result);
}

std::size_t VerificationCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::size_t VerificationCache::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

bool verify_cached(VerificationCache* cache, SecurityLevel level, ByteView public_key,
                   ByteView message, ByteView signature) {
  if (cache == nullptr) return verify(level, public_key, message, signature);
  Sha256Stream s;
  std::uint8_t tag[3] = {'s', static_cast<std::uint8_t>(static_cast<unsigned>(level) >> 8),
                         static_cast<std::uint8_t>(static_cast<unsigned>(level))};
  s.update(ByteView(tag, 3));
  s.update_u64(public_key.size()).update(public_key);
  s.update_u64(message.size()).update(message);
  s.update(signature);
  Hash256 key = s.finish();
  bool result = false;
  if (cache->find(key, result)) return result;
  result = verify(level, public_key, message, signature);
  cache->store(key, result);
  return result;
}

}  // namespace bftdsn::crypto
