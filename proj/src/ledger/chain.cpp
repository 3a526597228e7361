#include "bcer/ledger/chain.hpp"

#include <set>
#include <unordered_set>

namespace bcer::ledger {
namespace {

struct CheckResult {
  ChainCheck check = ChainCheck::Ok;
  std::string detail;
};

CheckResult check_genesis(const Block& block) {
  if (block.header.height != 0) return {ChainCheck::BadGenesis, "genesis height is not 0"};
  if (!block.header.previous_hash.is_zero()) return {ChainCheck::BadGenesis, "genesis previous_hash is not zero"};
  if (!block.header.payload_hash.is_zero()) return {ChainCheck::BadGenesis, "genesis payload_hash is not zero"};
  if (block.reg) return {ChainCheck::BadGenesis, "genesis carries a register"};
  if (!block.endorsements.empty()) return {ChainCheck::BadGenesis, "genesis carries endorsements"};
  if (block.header.proposer_id.empty()) return {ChainCheck::BadGenesis, "genesis has no network id"};
  return {};
}

CheckResult check_successor(const Block& prev, const HashDigest& prev_hash, const Block& block,
                            const HashDigest& block_hash, std::size_t quorum, const ValidatorKeys& keys,
                            const std::unordered_set<std::string>& seen_register_ids, crypto::VerifyCache* cache) {
  const auto& h = block.header;
  if (h.height != prev.header.height + 1) {
    return {ChainCheck::HeightMismatch,
            "expected height " + std::to_string(prev.header.height + 1) + ", found " + std::to_string(h.height)};
  }
  if (h.previous_hash != prev_hash) return {ChainCheck::BadLink, "previous_hash does not match predecessor"};
  if (!block.reg) return {ChainCheck::MissingRegister, "block carries no register"};
  if (block.reg->register_id.empty() || block.reg->resource_type.empty())
    return {ChainCheck::MissingRegister, "register has empty id or resource type"};
  if (h.payload_hash != payload_hash_of(*block.reg))
    return {ChainCheck::PayloadHashMismatch, "payload_hash does not match register"};
  if (h.timestamp_ms < prev.header.timestamp_ms)
    return {ChainCheck::NonMonotonicTimestamp, "timestamp earlier than predecessor"};

  std::set<std::string> endorsers;
  for (const auto& e : block.endorsements) {
    if (!endorsers.insert(e.validator_id).second)
      return {ChainCheck::DuplicateEndorser, "validator '" + e.validator_id + "' endorsed twice"};
    auto key = keys.find(e.validator_id);
    if (key == keys.end()) return {ChainCheck::UnknownValidator, "unknown validator '" + e.validator_id + "'"};
    if (!crypto::verify(key->second, block_hash.view(), e.signature, cache))
      return {ChainCheck::BadEndorsementSignature, "bad signature from '" + e.validator_id + "'"};
  }
  if (endorsers.size() < quorum) {
    return {ChainCheck::InsufficientEndorsements,
            std::to_string(endorsers.size()) + " endorsements, quorum is " + std::to_string(quorum)};
  }
  if (seen_register_ids.count(block.reg->register_id))
    return {ChainCheck::DuplicateRegisterId, "register id '" + block.reg->register_id + "' already on chain"};
  return {};
}

AppendError::Code append_code(ChainCheck check) {
  switch (check) {
    case ChainCheck::BadLink: return AppendError::Code::BadLink;
    case ChainCheck::HeightMismatch: return AppendError::Code::BadHeight;
    case ChainCheck::InsufficientEndorsements: return AppendError::Code::InsufficientEndorsements;
    case ChainCheck::UnknownValidator:
    case ChainCheck::BadEndorsementSignature: return AppendError::Code::BadEndorsementSignature;
    case ChainCheck::DuplicateEndorser: return AppendError::Code::DuplicateEndorser;
    case ChainCheck::DuplicateRegisterId: return AppendError::Code::DuplicateRegisterId;
    case ChainCheck::NonMonotonicTimestamp: return AppendError::Code::NonMonotonicTimestamp;
    case ChainCheck::PayloadHashMismatch: return AppendError::Code::PayloadHashMismatch;
    case ChainCheck::MissingRegister: return AppendError::Code::MissingRegister;
    default: return AppendError::Code::InvalidChain;
  }
}

Value digest_value(const HashDigest& d) { return Value(d.to_vector()); }

HashDigest digest_from(const Value& v) {
  const auto& b = v.as_bytes();
  if (b.size() != HashDigest::kSize) throw EncodingError("digest must be 32 bytes");
  return HashDigest::from_span(b);
}

}  // namespace

const char* to_string(RegisterKind kind) {
  switch (kind) {
    case RegisterKind::AssetCreate: return "asset-create";
    case RegisterKind::AssetUpdate: return "asset-update";
    case RegisterKind::ParticipantCreate: return "participant-create";
  }
  return "?";
}

RegisterKind register_kind_from_string(const std::string& text) {
  if (text == "asset-create") return RegisterKind::AssetCreate;
  if (text == "asset-update") return RegisterKind::AssetUpdate;
  if (text == "participant-create") return RegisterKind::ParticipantCreate;
  throw EncodingError("unknown register kind '" + text + "'");
}

Bytes Register::signing_bytes() const {
  return canonical_encode(Value(List{register_id, to_string(kind), resource_type, payload}));
}

Value Register::to_value() const {
  return Map{
      {"register_id", register_id},
      {"kind", to_string(kind)},
      {"resource_type", resource_type},
      {"payload", payload},
      {"submitter_card_id", submitter_card_id},
      {"submitter_signature", submitter_signature},
  };
}

Register Register::from_value(const Value& value) {
  const auto& m = value.as_map();
  expect_keys(m, {"register_id", "kind", "resource_type", "payload", "submitter_card_id", "submitter_signature"});
  Register r;
  r.register_id = m.at("register_id").as_string();
  r.kind = register_kind_from_string(m.at("kind").as_string());
  r.resource_type = m.at("resource_type").as_string();
  r.payload = m.at("payload").as_bytes();
  r.submitter_card_id = m.at("submitter_card_id").as_string();
  r.submitter_signature = m.at("submitter_signature").as_bytes();
  return r;
}

Value BlockHeader::to_value() const {
  return Map{
      {"height", static_cast<std::int64_t>(height)},
      {"previous_hash", digest_value(previous_hash)},
      {"payload_hash", digest_value(payload_hash)},
      {"timestamp_ms", timestamp_ms},
      {"proposer_id", proposer_id},
  };
}

BlockHeader BlockHeader::from_value(const Value& value) {
  const auto& m = value.as_map();
  expect_keys(m, {"height", "previous_hash", "payload_hash", "timestamp_ms", "proposer_id"});
  BlockHeader h;
  auto height = m.at("height").as_int();
  if (height < 0) throw EncodingError("negative block height");
  h.height = static_cast<std::uint64_t>(height);
  h.previous_hash = digest_from(m.at("previous_hash"));
  h.payload_hash = digest_from(m.at("payload_hash"));
  h.timestamp_ms = m.at("timestamp_ms").as_int();
  h.proposer_id = m.at("proposer_id").as_string();
  return h;
}

Value Block::body_value() const {
  Map m{{"header", header.to_value()}};
  if (reg) m.emplace("register", reg->to_value());
  return m;
}

Value Block::to_value() const {
  Map m = body_value().as_map();
  List list;
  for (const auto& e : endorsements)
    list.push_back(Map{{"validator_id", e.validator_id}, {"signature", e.signature}});
  m.emplace("endorsements", std::move(list));
  return m;
}

Block Block::from_value(const Value& value) {
  const auto& m = value.as_map();
  expect_keys(m, {"header", "endorsements"}, {"register"});
  Block b;
  b.header = BlockHeader::from_value(m.at("header"));
  if (const auto* r = find_field(m, "register")) b.reg = Register::from_value(*r);
  for (const auto& item : m.at("endorsements").as_list()) {
    const auto& em = item.as_map();
    expect_keys(em, {"validator_id", "signature"});
    b.endorsements.push_back({em.at("validator_id").as_string(), em.at("signature").as_bytes()});
  }
  return b;
}

HashDigest payload_hash_of(const Register& reg) { return crypto::sha256(canonical_encode(reg.to_value())); }

Chain::Chain(Block genesis) {
  auto check = check_genesis(genesis);
  if (check.check != ChainCheck::Ok) throw AppendError(AppendError::Code::InvalidChain, check.detail);
  auto hash = genesis.hash();
  entries_.push_back(std::make_shared<const Entry>(Entry{std::move(genesis), hash}));
}

Chain Chain::from_blocks(std::vector<Block> blocks) {
  Chain chain;
  chain.entries_.reserve(blocks.size());
  for (auto& b : blocks) {
    auto hash = b.hash();
    chain.entries_.push_back(std::make_shared<const Entry>(Entry{std::move(b), hash}));
  }
  return chain;
}

std::string Chain::network_id() const {
  if (entries_.empty() || entries_.front()->block.header.height != 0) return {};
  return entries_.front()->block.header.proposer_id;
}

std::vector<Block> Chain::blocks() const {
  std::vector<Block> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e->block);
  return out;
}

const char* to_string(AppendError::Code code) {
  switch (code) {
    case AppendError::Code::BadLink: return "bad-link";
    case AppendError::Code::BadHeight: return "bad-height";
    case AppendError::Code::InsufficientEndorsements: return "insufficient-endorsements";
    case AppendError::Code::BadEndorsementSignature: return "bad-endorsement-signature";
    case AppendError::Code::DuplicateEndorser: return "duplicate-endorser";
    case AppendError::Code::DuplicateRegisterId: return "duplicate-register-id";
    case AppendError::Code::NonMonotonicTimestamp: return "non-monotonic-timestamp";
    case AppendError::Code::PayloadHashMismatch: return "payload-hash-mismatch";
    case AppendError::Code::MissingRegister: return "missing-register";
    case AppendError::Code::InvalidChain: return "invalid-chain";
  }
  return "?";
}

Block make_genesis(const std::string& network_id, std::int64_t created_ms) {
  if (network_id.empty()) throw std::invalid_argument("network id must not be empty");
  Block genesis;
  genesis.header.height = 0;
  genesis.header.timestamp_ms = created_ms;
  genesis.header.proposer_id = network_id;
  return genesis;
}

Chain append_block(const Chain& chain, Block block, std::size_t quorum, const ValidatorKeys& validator_keys,
                   crypto::VerifyCache* cache) {
  if (chain.empty()) throw AppendError(AppendError::Code::InvalidChain, "chain has no genesis");
  if (quorum == 0) throw std::invalid_argument("quorum must be positive");
  const auto& tip = *chain.entries_.back();
  if (block.header.height != tip.block.header.height + 1) {
    throw AppendError(AppendError::Code::BadHeight, "block height " + std::to_string(block.header.height) +
                                                        " does not follow tip " +
                                                        std::to_string(tip.block.header.height));
  }
  std::unordered_set<std::string> seen;
  if (block.reg) {
    // Only the candidate id matters here; the existing chain is already unique.
    for (const auto& e : chain.entries_)
      if (e->block.reg && e->block.reg->register_id == block.reg->register_id) seen.insert(e->block.reg->register_id);
  }
  auto hash = block.hash();
  auto result = check_successor(tip.block, tip.hash, block, hash, quorum, validator_keys, seen, cache);
  if (result.check != ChainCheck::Ok) throw AppendError(append_code(result.check), result.detail);

  Chain next = chain;
  next.entries_.push_back(std::make_shared<const Chain::Entry>(Chain::Entry{std::move(block), hash}));
  return next;
}

const char* to_string(ChainCheck check) {
  switch (check) {
    case ChainCheck::Ok: return "ok";
    case ChainCheck::MissingGenesis: return "missing-genesis";
    case ChainCheck::BadGenesis: return "bad-genesis";
    case ChainCheck::HeightMismatch: return "height-mismatch";
    case ChainCheck::BadLink: return "bad-link";
    case ChainCheck::MissingRegister: return "missing-register";
    case ChainCheck::PayloadHashMismatch: return "payload-hash-mismatch";
    case ChainCheck::NonMonotonicTimestamp: return "non-monotonic-timestamp";
    case ChainCheck::InsufficientEndorsements: return "insufficient-endorsements";
    case ChainCheck::DuplicateEndorser: return "duplicate-endorser";
    case ChainCheck::UnknownValidator: return "unknown-validator";
    case ChainCheck::BadEndorsementSignature: return "bad-endorsement-signature";
    case ChainCheck::DuplicateRegisterId: return "duplicate-register-id";
    case ChainCheck::BrokenAncestor: return "broken-ancestor";
    case ChainCheck::Unreadable: return "unreadable";
  }
  return "?";
}

const HeightReport* ValidationReport::first_failure() const {
  for (const auto& h : heights)
    if (!h.ok()) return &h;
  return nullptr;
}

ValidationReport validate_chain(const Chain& chain, std::size_t quorum, const ValidatorKeys& validator_keys,
                                crypto::VerifyCache* cache) {
  ValidationReport report;
  if (chain.empty()) {
    report.heights.push_back({0, ChainCheck::MissingGenesis, "chain has no blocks"});
    return report;
  }
  bool broken = false;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const Block& block = chain.at(i);
    CheckResult result;
    if (i == 0) {
      result = check_genesis(block);
    } else {
      result = check_successor(chain.at(i - 1), chain.hash_at(i - 1), block, chain.hash_at(i), quorum,
                               validator_keys, seen, cache);
    }
    if (result.check == ChainCheck::Ok && broken) {
      result = {ChainCheck::BrokenAncestor, "an earlier block failed validation"};
    }
    if (result.check != ChainCheck::Ok) broken = true;
    if (block.reg) seen.insert(block.reg->register_id);
    // Report by position: a mangled height field must not relabel the entry.
    report.heights.push_back({static_cast<std::uint64_t>(i), result.check, std::move(result.detail)});
  }
  report.valid = !broken;
  return report;
}

std::optional<RegisterLocation> find_register(const Chain& chain, const std::string& register_id) {
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& b = chain.at(i);
    if (b.reg && b.reg->register_id == register_id) return RegisterLocation{*b.reg, b.header.height};
  }
  return std::nullopt;
}

}  // namespace bcer::ledger
