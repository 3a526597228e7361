#include "bcer/crypto.hpp"

#include <sodium.h>

namespace bcer {
namespace {

void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    return true;
  }();
  (void)ready;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw HexError("odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) throw HexError("invalid hex digit at offset " + std::to_string(hi < 0 ? i : i + 1));
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

namespace crypto {

HashDigest sha256(ByteView data) {
  ensure_sodium();
  HashDigest out;
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

PublicKey derive_public_key(const Seed& seed) {
  ensure_sodium();
  PublicKey pk;
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk{};
  crypto_sign_seed_keypair(pk.data(), sk.data(), seed.data());
  sodium_memzero(sk.data(), sk.size());
  return pk;
}

Signature sign(const Seed& seed, ByteView message) {
  ensure_sodium();
  PublicKey pk;
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk{};
  crypto_sign_seed_keypair(pk.data(), sk.data(), seed.data());
  Signature sig;
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), sk.data());
  sodium_memzero(sk.data(), sk.size());
  return sig;
}

bool verify(const PublicKey& key, ByteView message, ByteView signature) {
  ensure_sodium();
  if (signature.size() != Signature::kSize) return false;
  return crypto_sign_verify_detached(signature.data(), message.data(), message.size(), key.data()) == 0;
}

bool VerifyCache::verify(const PublicKey& key, ByteView message, ByteView signature) {
  std::string k;
  k.reserve(PublicKey::kSize + signature.size() + message.size() + 4);
  k.append(reinterpret_cast<const char*>(key.data()), PublicKey::kSize);
  const auto sig_len = static_cast<std::uint32_t>(signature.size());
  k.append(reinterpret_cast<const char*>(&sig_len), sizeof sig_len);
  k.append(reinterpret_cast<const char*>(signature.data()), signature.size());
  k.append(reinterpret_cast<const char*>(message.data()), message.size());
  auto [it, inserted] = results_.try_emplace(std::move(k), false);
  if (inserted) it->second = crypto::verify(key, message, signature);
  return it->second;
}

Seed random_seed() {
  ensure_sodium();
  Seed seed;
  randombytes_buf(seed.data(), Seed::kSize);
  return seed;
}

std::array<std::uint8_t, 16> random_128() {
  ensure_sodium();
  std::array<std::uint8_t, 16> out{};
  randombytes_buf(out.data(), out.size());
  return out;
}

std::string random_id() { return to_hex(random_128()); }

}  // namespace crypto
}  // namespace bcer
