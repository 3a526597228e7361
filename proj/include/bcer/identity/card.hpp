#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcer/crypto.hpp"
#include "bcer/ledger/encoding.hpp"

namespace bcer::identity {

struct KeyPair {
  crypto::PublicKey public_key;
  crypto::Seed secret_key;

  static KeyPair generate();
  /// Standard Ed25519 derivation; throws std::invalid_argument unless 32 bytes.
  static KeyPair from_seed(ByteView seed);

  crypto::Signature sign(ByteView message) const { return crypto::sign(secret_key, message); }
};

enum class Role { Coordinator, User };

const char* to_string(Role role);
Role role_from_string(const std::string& text);

struct ConnectionProfile {
  std::string network_id;
  std::vector<std::string> node_endpoints;

  friend bool operator==(const ConnectionProfile&, const ConnectionProfile&) = default;
};

/// Participant credential. Holder copies carry the secret key; public copies
/// (kept in server-side registries) do not.
struct IdCard {
  std::string card_id;
  std::string participant_type;
  std::string participant_ref;
  Role role = Role::User;
  ConnectionProfile profile;
  crypto::PublicKey public_key;
  std::optional<crypto::Seed> secret_key;
  Bytes issuer_signature;

  bool has_secret() const { return secret_key.has_value(); }
  IdCard public_copy() const;

  /// What the registration authority signs: every field except the secret
  /// key and the signature itself.
  Bytes issued_bytes() const;

  ledger::Value to_value() const;
  static IdCard from_value(const ledger::Value& value);

  friend bool operator==(const IdCard&, const IdCard&) = default;
};

class CardError : public std::runtime_error {
 public:
  enum class Code { Malformed, SignatureInvalid, MissingSecret, InvalidRequest };
  CardError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

IdCard issue_card(const KeyPair& authority, const std::string& participant_type, const std::string& participant_ref,
                  Role role, const ConnectionProfile& profile);
/// Same, with a caller-chosen holder key and card id (reproducible fixtures).
IdCard issue_card(const KeyPair& authority, const std::string& participant_type, const std::string& participant_ref,
                  Role role, const ConnectionProfile& profile, const KeyPair& holder, const std::string& card_id);

bool verify_card(const IdCard& card, const crypto::PublicKey& authority_key);

/// Throws CardError(MissingSecret) for public copies.
crypto::Signature sign(const IdCard& card, ByteView message);
bool verify(const IdCard& card, ByteView message, ByteView signature);

/// `.bcid` text form: the card's canonical encoding as one hex line.
std::string encode_card(const IdCard& card);
/// Throws CardError(Malformed) or CardError(SignatureInvalid).
IdCard decode_card(std::string_view text, const crypto::PublicKey& authority_key);
/// Parses without checking the issuer signature.
IdCard decode_card_unverified(std::string_view text);

/// Public copies of every card known to a network, keyed by card_id.
class CardDirectory {
 public:
  /// Stores the public copy. Returns false if the id is already taken by a
  /// different card.
  bool add(const IdCard& card);
  const IdCard* find(const std::string& card_id) const;
  std::size_t size() const { return cards_.size(); }
  const std::map<std::string, IdCard>& cards() const { return cards_; }

 private:
  std::map<std::string, IdCard> cards_;
};

void save_card(const IdCard& card, const std::filesystem::path& path);
IdCard load_card(const std::filesystem::path& path, const crypto::PublicKey& authority_key);

}  // namespace bcer::identity
