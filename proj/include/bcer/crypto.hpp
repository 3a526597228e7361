#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bcer {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

Bytes to_bytes(std::string_view text);

/// Lowercase hex. Decoding is strict: uppercase digits, odd lengths and
/// stray characters are rejected so that one textual form maps to one value.
std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

class HexError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace crypto {

template <std::size_t N, typename Tag>
class FixedBytes {
 public:
  static constexpr std::size_t kSize = N;

  FixedBytes() : bytes_{} {}
  explicit FixedBytes(const std::array<std::uint8_t, N>& bytes) : bytes_(bytes) {}

  static FixedBytes from_span(ByteView data) {
    if (data.size() != N) {
      throw std::invalid_argument("expected " + std::to_string(N) + " bytes, got " +
                                  std::to_string(data.size()));
    }
    FixedBytes out;
    std::copy(data.begin(), data.end(), out.bytes_.begin());
    return out;
  }
  static FixedBytes from_hex(std::string_view hex) { return from_span(bcer::from_hex(hex)); }

  std::string hex() const { return to_hex(bytes_); }
  Bytes to_vector() const { return Bytes(bytes_.begin(), bytes_.end()); }
  const std::array<std::uint8_t, N>& array() const { return bytes_; }
  std::uint8_t* data() { return bytes_.data(); }
  const std::uint8_t* data() const { return bytes_.data(); }
  ByteView view() const { return bytes_; }
  bool is_zero() const {
    for (auto b : bytes_)
      if (b != 0) return false;
    return true;
  }

  auto operator<=>(const FixedBytes&) const = default;

 private:
  std::array<std::uint8_t, N> bytes_;
};

struct DigestTag {};
struct PublicKeyTag {};
struct SeedTag {};
struct SignatureTag {};

/// SHA-256 output.
using HashDigest = FixedBytes<32, DigestTag>;
/// Ed25519 public key.
using PublicKey = FixedBytes<32, PublicKeyTag>;
/// Ed25519 32-byte secret seed.
using Seed = FixedBytes<32, SeedTag>;
using Signature = FixedBytes<64, SignatureTag>;

HashDigest sha256(ByteView data);
inline HashDigest sha256(std::string_view text) {
  return sha256(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

PublicKey derive_public_key(const Seed& seed);
Signature sign(const Seed& seed, ByteView message);
/// Accepts any byte string as signature; wrong lengths simply fail.
bool verify(const PublicKey& key, ByteView message, ByteView signature);

/// Memoizes verify() results. Not thread-safe; scope one per simulation or request.
class VerifyCache {
 public:
  bool verify(const PublicKey& key, ByteView message, ByteView signature);
  std::size_t size() const { return results_.size(); }

 private:
  std::unordered_map<std::string, bool> results_;
};

inline bool verify(const PublicKey& key, ByteView message, ByteView signature, VerifyCache* cache) {
  return cache ? cache->verify(key, message, signature) : verify(key, message, signature);
}

Seed random_seed();
std::array<std::uint8_t, 16> random_128();
/// 128-bit random value as 32 lowercase hex characters.
std::string random_id();

}  // namespace crypto
}  // namespace bcer
