#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bcer/consensus/simulation.hpp"
#include "bcer/identity/card.hpp"
#include "bcer/ledger/chain.hpp"
#include "bcer/model/acl.hpp"
#include "bcer/model/model.hpp"
#include "bcer/records/handlers.hpp"
#include "bcer/records/record.hpp"

namespace bcer::records {

/// Model and ACL sources of the default business network.
std::string_view default_model_source();
std::string_view default_acl_source();

/// Participant type a card role stands for ("Coordinator", "User").
std::string participant_type_for(identity::Role role);

struct NetworkSetup {
  model::ModelDefinition model;
  model::AclRuleSet acl;
  crypto::PublicKey authority_key;
  std::vector<std::string> validator_ids;
  std::vector<identity::KeyPair> validator_keys;
  /// 0 means majority.
  std::size_t quorum = 0;
  /// Network conditions for each registration round; fault-free by default.
  consensus::SimConfig sim;
  /// Wall clock in ms; injectable for reproducible chains.
  std::function<std::int64_t()> clock;
};

struct UpdateRequest {
  std::string record_id;
  std::optional<std::string> title;
  std::optional<std::string> course;
  std::optional<std::string> issued_on;
  std::optional<Bytes> document;
  std::optional<identity::IdCard> card;
  std::optional<Bytes> signature;
};

/// The business network: records pipeline on top of a chain and a validator
/// roster. Registration is serialized; reads work on chain snapshots.
class RecordsNetwork {
 public:
  /// `chain` may be invalid (e.g. loaded from a damaged file); reads then
  /// report integrity failures and writes are refused. `load_fault`
  /// describes damage the loader found before validation.
  RecordsNetwork(NetworkSetup setup, ledger::Chain chain, identity::CardDirectory cards = {},
                 std::string load_fault = {});

  ledger::Chain chain() const;
  std::size_t quorum() const { return quorum_; }
  const NetworkSetup& setup() const { return setup_; }
  identity::CardDirectory cards() const;
  /// Full validation of the current chain; empty when sound.
  std::string integrity_problem() const;

  /// Called with each committed block, in height order, before the new
  /// chain becomes visible. Throwing aborts the registration.
  void on_commit(std::function<void(const ledger::Block&)> listener) { commit_listener_ = std::move(listener); }
  /// Called once for each card the network sees for the first time.
  void on_card(std::function<void(const identity::IdCard&)> listener) { card_listener_ = std::move(listener); }

  /// Checks the issuer signature and stores the public copy. Throws
  /// RecordsError(InvalidCard).
  void enroll_card(const identity::IdCard& card);

  /// Bytes the holder signs for a registration, after filling in defaults
  /// exactly as register_certificate does.
  static EducationalRecord complete_record(EducationalRecord record, const identity::IdCard& card,
                                           const std::optional<Bytes>& document);
  static Bytes registration_signing_bytes(const EducationalRecord& completed);

  RegistrationOutcome register_certificate(const RegistrationRequest& request);
  VerificationResult verify_certificate(const std::string& record_id) const;
  DocumentCheck verify_document(const std::string& record_id, ByteView document) const;
  std::vector<RecordSummary> list_records(const RecordFilter& filter = {}) const;

  /// Card-gated reads and writes, so every ACL cell is observable.
  EducationalRecord read_record(const std::string& record_id, const identity::IdCard& card) const;
  RegistrationOutcome update_record(const UpdateRequest& request);
  void delete_record(const std::string& record_id, const identity::IdCard& card);

 private:
  const identity::IdCard& check_card(const std::optional<identity::IdCard>& card);
  void require(const identity::IdCard& card, model::Operation op) const;
  Bytes sign_register(const ledger::Register& reg, const identity::IdCard& card,
                      const std::optional<Bytes>& signature) const;
  RegistrationOutcome commit(ledger::Register reg, const std::string& record_id);

  NetworkSetup setup_;
  std::size_t quorum_;
  ledger::ValidatorKeys roster_;
  HandlerRegistry handlers_;
  std::string load_fault_;

  mutable std::mutex state_mutex_;
  ledger::Chain chain_;
  identity::CardDirectory cards_;
  mutable crypto::VerifyCache verify_cache_;

  std::mutex write_mutex_;
  std::function<void(const ledger::Block&)> commit_listener_;
  std::function<void(const identity::IdCard&)> card_listener_;
};

/// Register history of one record, oldest first.
std::vector<std::pair<std::uint64_t, const ledger::Register*>> record_registers(const ledger::Chain& chain,
                                                                                 const std::string& record_id);

}  // namespace bcer::records
