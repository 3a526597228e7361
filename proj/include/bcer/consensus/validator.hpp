#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bcer/identity/card.hpp"
#include "bcer/ledger/chain.hpp"
#include "bcer/model/acl.hpp"
#include "bcer/model/model.hpp"

namespace bcer::consensus {

/// Business-network knowledge a validator needs to judge a register.
struct ValidationContext {
  const model::ModelDefinition& model;
  const model::AclRuleSet& acl;
  const identity::CardDirectory& cards;
};

/// The ACL operation a register kind stands for.
model::Operation operation_for(ledger::RegisterKind kind);

/// Round-robin rotation; `round` advances the rotation when a height has to
/// be retried under a different leader.
const std::string& leader_for(std::uint64_t height, const std::vector<std::string>& validator_ids,
                              std::uint32_t round = 0);

struct Proposal {
  /// Hex hash of block_body; endorsements refer to it.
  std::string proposal_id;
  std::uint64_t height = 0;
  std::uint32_t round = 0;
  ledger::Block block_body;
  std::string proposer_id;
};

struct Endorsement {
  std::string proposal_id;
  std::string validator_id;
  Bytes signature;
};

enum class RejectReason {
  WrongLeader,
  BadLink,
  BadSignature,
  Unauthorized,
  SchemaViolation,
  StaleRound,
  ConflictingLock,
};

const char* to_string(RejectReason reason);

struct Rejection {
  RejectReason reason;
  std::string detail;
};

class ConsensusError : public std::runtime_error {
 public:
  enum class Code { NotLeader, InvalidRegister, EmptyValidatorSet };
  ConsensusError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

class ValidatorNode {
 public:
  ValidatorNode(std::string id, identity::KeyPair keys, ledger::Chain chain, std::vector<std::string> roster,
                ledger::ValidatorKeys roster_keys, std::size_t quorum);

  const std::string& id() const { return id_; }
  const identity::KeyPair& keys() const { return keys_; }
  const ledger::Chain& chain() const { return chain_; }
  const std::vector<std::string>& roster() const { return roster_; }
  const ledger::ValidatorKeys& roster_keys() const { return roster_keys_; }
  std::size_t quorum() const { return quorum_; }
  std::uint64_t next_height() const { return chain_.tip_height() + 1; }

  /// Appends a committed block after full verification. Throws AppendError.
  void commit(ledger::Block block, crypto::VerifyCache* cache = nullptr);

 private:
  std::string id_;
  identity::KeyPair keys_;
  ledger::Chain chain_;
  std::vector<std::string> roster_;
  ledger::ValidatorKeys roster_keys_;
  std::size_t quorum_;
};

/// Verifies the submitter's signature over the register.
std::optional<Rejection> check_register_signature(const ledger::Register& reg, const identity::CardDirectory& cards,
                                                  crypto::VerifyCache* cache = nullptr);
/// ACL and schema checks for a register, given a known submitter.
std::optional<Rejection> check_register_policy(const ledger::Register& reg, const ValidationContext& ctx);

/// Builds the next block body. Throws ConsensusError(NotLeader) unless `node`
/// leads (next height, round), and ConsensusError(InvalidRegister) when the
/// register signature does not verify.
Proposal propose(const ValidatorNode& node, const ledger::Register& reg, std::int64_t now_ms,
                 const identity::CardDirectory& cards, std::uint32_t round = 0, crypto::VerifyCache* cache = nullptr);

/// Endorses iff the proposer leads the round, the body links to the local
/// tip, the register is correctly signed, the submitter is authorized and the
/// payload type-checks.
std::variant<Endorsement, Rejection> on_proposal(const ValidatorNode& node, const Proposal& proposal,
                                                 const ValidationContext& ctx, crypto::VerifyCache* cache = nullptr);

/// Assembles the committed block once at least `quorum` distinct validators
/// have validly endorsed the proposal. Invalid or foreign endorsements are
/// ignored. Endorsements are ordered by validator id.
std::optional<ledger::Block> try_commit(const Proposal& proposal, const std::vector<Endorsement>& endorsements,
                                        std::size_t quorum, const ledger::ValidatorKeys& validator_keys,
                                        crypto::VerifyCache* cache = nullptr);

}  // namespace bcer::consensus
