#include "bcer/identity/card.hpp"

#include <fstream>
#include <sstream>

namespace bcer::identity {

using ledger::List;
using ledger::Map;
using ledger::Value;

KeyPair KeyPair::generate() { return from_seed(crypto::random_seed().view()); }

KeyPair KeyPair::from_seed(ByteView seed) {
  if (seed.size() != crypto::Seed::kSize)
    throw std::invalid_argument("seed must be 32 bytes, got " + std::to_string(seed.size()));
  KeyPair kp;
  kp.secret_key = crypto::Seed::from_span(seed);
  kp.public_key = crypto::derive_public_key(kp.secret_key);
  return kp;
}

const char* to_string(Role role) { return role == Role::Coordinator ? "coordinator" : "user"; }

Role role_from_string(const std::string& text) {
  if (text == "coordinator") return Role::Coordinator;
  if (text == "user") return Role::User;
  throw std::invalid_argument("unknown role '" + text + "'");
}

IdCard IdCard::public_copy() const {
  IdCard copy = *this;
  copy.secret_key.reset();
  return copy;
}

namespace {

Map issued_map(const IdCard& c) {
  List endpoints;
  for (const auto& e : c.profile.node_endpoints) endpoints.emplace_back(e);
  return Map{
      {"card_id", c.card_id},
      {"participant_type", c.participant_type},
      {"participant_ref", c.participant_ref},
      {"role", to_string(c.role)},
      {"profile", Map{{"network_id", c.profile.network_id}, {"node_endpoints", std::move(endpoints)}}},
      {"public_key", c.public_key.to_vector()},
  };
}

}  // namespace

Bytes IdCard::issued_bytes() const { return ledger::canonical_encode(issued_map(*this)); }

Value IdCard::to_value() const {
  Map m = issued_map(*this);
  if (secret_key) m.emplace("secret_key", secret_key->to_vector());
  m.emplace("issuer_signature", issuer_signature);
  return m;
}

IdCard IdCard::from_value(const Value& value) {
  const auto& m = value.as_map();
  ledger::expect_keys(m, {"card_id", "participant_type", "participant_ref", "role", "profile", "public_key",
                          "issuer_signature"},
                      {"secret_key"});
  IdCard c;
  c.card_id = m.at("card_id").as_string();
  c.participant_type = m.at("participant_type").as_string();
  c.participant_ref = m.at("participant_ref").as_string();
  try {
    c.role = role_from_string(m.at("role").as_string());
  } catch (const std::invalid_argument& e) {
    throw ledger::EncodingError(e.what());
  }
  const auto& profile = m.at("profile").as_map();
  ledger::expect_keys(profile, {"network_id", "node_endpoints"});
  c.profile.network_id = profile.at("network_id").as_string();
  for (const auto& e : profile.at("node_endpoints").as_list()) c.profile.node_endpoints.push_back(e.as_string());
  const auto& pk = m.at("public_key").as_bytes();
  if (pk.size() != crypto::PublicKey::kSize) throw ledger::EncodingError("public_key must be 32 bytes");
  c.public_key = crypto::PublicKey::from_span(pk);
  if (const auto* sk = ledger::find_field(m, "secret_key")) {
    if (sk->as_bytes().size() != crypto::Seed::kSize) throw ledger::EncodingError("secret_key must be 32 bytes");
    c.secret_key = crypto::Seed::from_span(sk->as_bytes());
  }
  c.issuer_signature = m.at("issuer_signature").as_bytes();
  return c;
}

IdCard issue_card(const KeyPair& authority, const std::string& participant_type, const std::string& participant_ref,
                  Role role, const ConnectionProfile& profile) {
  return issue_card(authority, participant_type, participant_ref, role, profile, KeyPair::generate(),
                    crypto::random_id());
}

IdCard issue_card(const KeyPair& authority, const std::string& participant_type, const std::string& participant_ref,
                  Role role, const ConnectionProfile& profile, const KeyPair& holder, const std::string& card_id) {
  if (card_id.empty()) throw CardError(CardError::Code::InvalidRequest, "card_id must not be empty");
  if (participant_ref.empty()) throw CardError(CardError::Code::InvalidRequest, "participant_ref must not be empty");
  if (participant_type.empty()) throw CardError(CardError::Code::InvalidRequest, "participant_type must not be empty");
  if (profile.network_id.empty() || profile.node_endpoints.empty())
    throw CardError(CardError::Code::InvalidRequest, "connection profile needs a network id and an endpoint");
  IdCard card;
  card.card_id = card_id;
  card.participant_type = participant_type;
  card.participant_ref = participant_ref;
  card.role = role;
  card.profile = profile;
  card.public_key = holder.public_key;
  card.secret_key = holder.secret_key;
  card.issuer_signature = authority.sign(card.issued_bytes()).to_vector();
  return card;
}

bool verify_card(const IdCard& card, const crypto::PublicKey& authority_key) {
  if (card.secret_key && crypto::derive_public_key(*card.secret_key) != card.public_key) return false;
  return crypto::verify(authority_key, card.issued_bytes(), card.issuer_signature);
}

crypto::Signature sign(const IdCard& card, ByteView message) {
  if (!card.secret_key) throw CardError(CardError::Code::MissingSecret, "card '" + card.card_id + "' has no secret key");
  return crypto::sign(*card.secret_key, message);
}

bool verify(const IdCard& card, ByteView message, ByteView signature) {
  return crypto::verify(card.public_key, message, signature);
}

std::string encode_card(const IdCard& card) { return to_hex(ledger::canonical_encode(card.to_value())) + "\n"; }

IdCard decode_card_unverified(std::string_view text) {
  while (!text.empty() && (text.back() == '\n')) text.remove_suffix(1);
  try {
    return IdCard::from_value(ledger::canonical_decode(from_hex(text)));
  } catch (const HexError& e) {
    throw CardError(CardError::Code::Malformed, std::string("malformed card file: ") + e.what());
  } catch (const ledger::DecodeError& e) {
    throw CardError(CardError::Code::Malformed, std::string("malformed card file: ") + e.what());
  } catch (const ledger::EncodingError& e) {
    throw CardError(CardError::Code::Malformed, std::string("malformed card file: ") + e.what());
  }
}

IdCard decode_card(std::string_view text, const crypto::PublicKey& authority_key) {
  IdCard card = decode_card_unverified(text);
  if (!verify_card(card, authority_key))
    throw CardError(CardError::Code::SignatureInvalid, "card '" + card.card_id + "' failed issuer verification");
  return card;
}

bool CardDirectory::add(const IdCard& card) {
  auto pub = card.public_copy();
  auto [it, inserted] = cards_.try_emplace(pub.card_id, pub);
  return inserted || it->second == pub;
}

const IdCard* CardDirectory::find(const std::string& card_id) const {
  auto it = cards_.find(card_id);
  return it == cards_.end() ? nullptr : &it->second;
}

void save_card(const IdCard& card, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write card file " + path.string());
  out << encode_card(card);
  if (!out.flush()) throw std::runtime_error("failed writing card file " + path.string());
}

IdCard load_card(const std::filesystem::path& path, const crypto::PublicKey& authority_key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CardError(CardError::Code::Malformed, "cannot read card file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_card(ss.str(), authority_key);
}

}  // namespace bcer::identity
