#include "bcer/consensus/validator.hpp"

#include <algorithm>
#include <map>

#include "bcer/model/instance.hpp"

namespace bcer::consensus {

model::Operation operation_for(ledger::RegisterKind kind) {
  switch (kind) {
    case ledger::RegisterKind::AssetCreate:
    case ledger::RegisterKind::ParticipantCreate: return model::Operation::Create;
    case ledger::RegisterKind::AssetUpdate: return model::Operation::Update;
  }
  return model::Operation::Create;
}

const std::string& leader_for(std::uint64_t height, const std::vector<std::string>& validator_ids,
                              std::uint32_t round) {
  if (validator_ids.empty()) throw ConsensusError(ConsensusError::Code::EmptyValidatorSet, "empty validator set");
  return validator_ids[(height + round) % validator_ids.size()];
}

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::WrongLeader: return "wrong-leader";
    case RejectReason::BadLink: return "bad-link";
    case RejectReason::BadSignature: return "bad-signature";
    case RejectReason::Unauthorized: return "unauthorized";
    case RejectReason::SchemaViolation: return "schema-violation";
    case RejectReason::StaleRound: return "stale-round";
    case RejectReason::ConflictingLock: return "conflicting-lock";
  }
  return "?";
}

ValidatorNode::ValidatorNode(std::string id, identity::KeyPair keys, ledger::Chain chain,
                             std::vector<std::string> roster, ledger::ValidatorKeys roster_keys, std::size_t quorum)
    : id_(std::move(id)),
      keys_(std::move(keys)),
      chain_(std::move(chain)),
      roster_(std::move(roster)),
      roster_keys_(std::move(roster_keys)),
      quorum_(quorum) {
  if (chain_.empty()) throw std::invalid_argument("validator needs at least a genesis block");
}

void ValidatorNode::commit(ledger::Block block, crypto::VerifyCache* cache) {
  chain_ = ledger::append_block(chain_, std::move(block), quorum_, roster_keys_, cache);
}

std::optional<Rejection> check_register_signature(const ledger::Register& reg, const identity::CardDirectory& cards,
                                                  crypto::VerifyCache* cache) {
  const auto* card = cards.find(reg.submitter_card_id);
  if (!card) return Rejection{RejectReason::BadSignature, "unknown submitter card '" + reg.submitter_card_id + "'"};
  if (!crypto::verify(card->public_key, reg.signing_bytes(), reg.submitter_signature, cache))
    return Rejection{RejectReason::BadSignature, "register signature does not verify"};
  return std::nullopt;
}

std::optional<Rejection> check_register_policy(const ledger::Register& reg, const ValidationContext& ctx) {
  const auto* card = ctx.cards.find(reg.submitter_card_id);
  if (!card) return Rejection{RejectReason::BadSignature, "unknown submitter card"};
  const auto op = operation_for(reg.kind);
  if (model::authorize(ctx.acl, card->participant_type, op, reg.resource_type) != model::Action::Allow) {
    return Rejection{RejectReason::Unauthorized, card->participant_type + " may not " + model::to_string(op) + " " +
                                                     reg.resource_type};
  }
  ledger::Value instance;
  try {
    instance = ledger::canonical_decode(reg.payload);
  } catch (const ledger::DecodeError& e) {
    return Rejection{RejectReason::SchemaViolation, std::string("payload does not decode: ") + e.what()};
  }
  auto errors = model::validate_instance(ctx.model, reg.resource_type, instance);
  if (!errors.empty()) return Rejection{RejectReason::SchemaViolation, errors.front().message};
  return std::nullopt;
}

Proposal propose(const ValidatorNode& node, const ledger::Register& reg, std::int64_t now_ms,
                 const identity::CardDirectory& cards, std::uint32_t round, crypto::VerifyCache* cache) {
  const auto height = node.next_height();
  const auto& leader = leader_for(height, node.roster(), round);
  if (leader != node.id()) {
    throw ConsensusError(ConsensusError::Code::NotLeader, node.id() + " does not lead height " +
                                                              std::to_string(height) + " round " +
                                                              std::to_string(round) + " (" + leader + " does)");
  }
  if (auto rejection = check_register_signature(reg, cards, cache))
    throw ConsensusError(ConsensusError::Code::InvalidRegister, rejection->detail);

  Proposal p;
  auto& header = p.block_body.header;
  header.height = height;
  header.previous_hash = node.chain().tip_hash();
  header.payload_hash = ledger::payload_hash_of(reg);
  header.timestamp_ms = std::max(now_ms, node.chain().tip().header.timestamp_ms);
  header.proposer_id = node.id();
  p.block_body.reg = reg;
  p.height = height;
  p.round = round;
  p.proposer_id = node.id();
  p.proposal_id = p.block_body.hash().hex();
  return p;
}

std::variant<Endorsement, Rejection> on_proposal(const ValidatorNode& node, const Proposal& proposal,
                                                 const ValidationContext& ctx, crypto::VerifyCache* cache) {
  const auto& body = proposal.block_body;
  if (proposal.height != body.header.height) return Rejection{RejectReason::BadLink, "proposal height mismatch"};
  if (proposal.proposer_id != leader_for(proposal.height, node.roster(), proposal.round))
    return Rejection{RejectReason::WrongLeader, proposal.proposer_id + " does not lead this round"};
  if (!node.roster_keys().count(body.header.proposer_id))
    return Rejection{RejectReason::WrongLeader, "block proposer is not a validator"};
  if (body.header.height != node.next_height() || body.header.previous_hash != node.chain().tip_hash())
    return Rejection{RejectReason::BadLink, "block does not extend local tip"};
  if (body.header.timestamp_ms < node.chain().tip().header.timestamp_ms)
    return Rejection{RejectReason::BadLink, "block timestamp precedes local tip"};
  if (!body.reg) return Rejection{RejectReason::SchemaViolation, "block carries no register"};
  if (body.header.payload_hash != ledger::payload_hash_of(*body.reg))
    return Rejection{RejectReason::BadLink, "payload hash does not match register"};
  if (ledger::find_register(node.chain(), body.reg->register_id))
    return Rejection{RejectReason::SchemaViolation, "register id already on chain"};
  if (auto r = check_register_signature(*body.reg, ctx.cards, cache)) return *r;
  if (auto r = check_register_policy(*body.reg, ctx)) return *r;

  const auto hash = body.hash();
  if (hash.hex() != proposal.proposal_id) return Rejection{RejectReason::BadLink, "proposal id does not match body"};
  return Endorsement{proposal.proposal_id, node.id(), node.keys().sign(hash.view()).to_vector()};
}

std::optional<ledger::Block> try_commit(const Proposal& proposal, const std::vector<Endorsement>& endorsements,
                                        std::size_t quorum, const ledger::ValidatorKeys& validator_keys,
                                        crypto::VerifyCache* cache) {
  const auto hash = proposal.block_body.hash();
  std::map<std::string, Bytes> valid;
  for (const auto& e : endorsements) {
    if (e.proposal_id != proposal.proposal_id || valid.count(e.validator_id)) continue;
    auto key = validator_keys.find(e.validator_id);
    if (key == validator_keys.end()) continue;
    if (!crypto::verify(key->second, hash.view(), e.signature, cache)) continue;
    valid.emplace(e.validator_id, e.signature);
  }
  if (valid.size() < quorum) return std::nullopt;
  ledger::Block block = proposal.block_body;
  block.endorsements.clear();
  for (auto& [id, sig] : valid) block.endorsements.push_back({id, std::move(sig)});
  return block;
}

}  // namespace bcer::consensus
