#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcer/crypto.hpp"
#include "bcer/ledger/encoding.hpp"

namespace bcer::ledger {

using crypto::HashDigest;
using ValidatorKeys = std::map<std::string, crypto::PublicKey>;

enum class RegisterKind { AssetCreate, AssetUpdate, ParticipantCreate };

const char* to_string(RegisterKind kind);
RegisterKind register_kind_from_string(const std::string& text);

/// One signed ledger entry. Exactly one per non-genesis block.
struct Register {
  std::string register_id;
  RegisterKind kind = RegisterKind::AssetCreate;
  std::string resource_type;
  Bytes payload;
  std::string submitter_card_id;
  Bytes submitter_signature;

  /// The bytes the submitter signs: canonical list of
  /// [register_id, kind, resource_type, payload].
  Bytes signing_bytes() const;

  Value to_value() const;
  static Register from_value(const Value& value);

  friend bool operator==(const Register&, const Register&) = default;
};

struct BlockHeader {
  std::uint64_t height = 0;
  HashDigest previous_hash;
  HashDigest payload_hash;
  std::int64_t timestamp_ms = 0;
  /// For genesis this carries the network id.
  std::string proposer_id;

  Value to_value() const;
  static BlockHeader from_value(const Value& value);

  friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

struct Endorsement {
  std::string validator_id;
  Bytes signature;

  friend bool operator==(const Endorsement&, const Endorsement&) = default;
};

struct Block {
  BlockHeader header;
  std::optional<Register> reg;
  std::vector<Endorsement> endorsements;

  bool is_genesis() const { return header.height == 0; }

  /// Header and register only; what endorsers sign and what the next block links to.
  Value body_value() const;
  Value to_value() const;
  static Block from_value(const Value& value);

  Bytes body_bytes() const { return canonical_encode(body_value()); }
  Bytes encode() const { return canonical_encode(to_value()); }
  static Block decode(ByteView bytes) { return from_value(canonical_decode(bytes)); }

  HashDigest hash() const { return crypto::sha256(body_bytes()); }

  friend bool operator==(const Block&, const Block&) = default;
};

HashDigest payload_hash_of(const Register& reg);

/// Majority quorum for a validator set of size n.
inline std::size_t majority_quorum(std::size_t n) { return n / 2 + 1; }

/// Immutable sequence of blocks. Copies share block storage; appending
/// yields a new Chain and leaves the source untouched.
class Chain {
 public:
  Chain() = default;
  explicit Chain(Block genesis);

  /// Builds a chain without any validation. Used by loaders and tests that
  /// need to inspect broken chains; run validate_chain on the result.
  static Chain from_blocks(std::vector<Block> blocks);

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const Block& at(std::size_t index) const { return entries_.at(index)->block; }
  const HashDigest& hash_at(std::size_t index) const { return entries_.at(index)->hash; }
  const Block& tip() const { return entries_.back()->block; }
  const HashDigest& tip_hash() const { return entries_.back()->hash; }
  std::uint64_t tip_height() const { return tip().header.height; }
  /// Empty when the chain has no genesis.
  std::string network_id() const;

  std::vector<Block> blocks() const;

 private:
  struct Entry {
    Block block;
    HashDigest hash;
  };

  friend Chain append_block(const Chain&, Block, std::size_t, const ValidatorKeys&, crypto::VerifyCache*);

  std::vector<std::shared_ptr<const Entry>> entries_;
};

class AppendError : public std::runtime_error {
 public:
  enum class Code {
    BadLink,
    BadHeight,
    InsufficientEndorsements,
    BadEndorsementSignature,
    DuplicateEndorser,
    DuplicateRegisterId,
    NonMonotonicTimestamp,
    PayloadHashMismatch,
    MissingRegister,
    InvalidChain,
  };
  AppendError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

const char* to_string(AppendError::Code code);

Block make_genesis(const std::string& network_id, std::int64_t created_ms);

/// Verifies `block` against the tip of `chain` and returns the extended chain.
/// Throws AppendError. `chain` itself is not modified.
Chain append_block(const Chain& chain, Block block, std::size_t quorum, const ValidatorKeys& validator_keys,
                   crypto::VerifyCache* cache = nullptr);

enum class ChainCheck {
  Ok,
  MissingGenesis,
  BadGenesis,
  HeightMismatch,
  BadLink,
  MissingRegister,
  PayloadHashMismatch,
  NonMonotonicTimestamp,
  InsufficientEndorsements,
  DuplicateEndorser,
  UnknownValidator,
  BadEndorsementSignature,
  DuplicateRegisterId,
  BrokenAncestor,
  /// The stored bytes for this height do not decode (reported by loaders).
  Unreadable,
};

const char* to_string(ChainCheck check);

struct HeightReport {
  std::uint64_t height = 0;
  ChainCheck check = ChainCheck::Ok;
  std::string detail;

  bool ok() const { return check == ChainCheck::Ok; }
};

struct ValidationReport {
  bool valid = false;
  std::vector<HeightReport> heights;

  /// First failing entry, if any.
  const HeightReport* first_failure() const;
};

/// Checks every block; once a height fails, every later height is reported
/// broken too (its own first failing check, or BrokenAncestor).
ValidationReport validate_chain(const Chain& chain, std::size_t quorum, const ValidatorKeys& validator_keys,
                                crypto::VerifyCache* cache = nullptr);

struct RegisterLocation {
  Register reg;
  std::uint64_t height = 0;
};

std::optional<RegisterLocation> find_register(const Chain& chain, const std::string& register_id);

}  // namespace bcer::ledger
