#pragma once

// The default business network with reproducible cards, for consensus and
// records tests.

#include <string>

#include "bcer/consensus/validator.hpp"
#include "bcer/identity/card.hpp"
#include "bcer/model/acl.hpp"
#include "bcer/model/model.hpp"
#include "fixture_files.hpp"

namespace bcer::testing {

inline identity::KeyPair fixed_keypair(const std::string& label) {
  return identity::KeyPair::from_seed(crypto::sha256(label).view());
}

struct TestNetwork {
  model::ModelDefinition model;
  model::AclRuleSet acl;
  identity::KeyPair authority = fixed_keypair("test-authority");
  identity::CardDirectory cards;
  identity::IdCard coordinator;
  identity::IdCard user;

  TestNetwork() {
    model = model::parse_model(read_file(std::filesystem::path(BCER_NETWORK_DIR) / "network.model"));
    acl = model::parse_acl(read_file(std::filesystem::path(BCER_NETWORK_DIR) / "network.acl"), model);
    identity::ConnectionProfile profile{"unifacs-net", {"http://127.0.0.1:8080"}};
    coordinator = identity::issue_card(authority, "Coordinator", "coord-1", identity::Role::Coordinator, profile,
                                       fixed_keypair("test-coordinator"), "card-coordinator");
    user = identity::issue_card(authority, "User", "user-1", identity::Role::User, profile,
                                fixed_keypair("test-user"), "card-user");
    cards.add(coordinator);
    cards.add(user);
  }

  consensus::ValidationContext ctx() const { return {model, acl, cards}; }

  static ledger::Map record_payload(const std::string& id, const std::string& card_id) {
    return {{"record_id", id},
            {"kind", "certificate"},
            {"title", "Course " + id},
            {"student_ref", "student-" + id},
            {"institution", "UNIFACS"},
            {"course", "Computer Science"},
            {"issued_on", "2024-06-30"},
            {"issuer_card_id", card_id},
            {"document_hash", crypto::sha256(id).hex()}};
  }

  /// A signed asset-create register for an EducationalRecord.
  static ledger::Register signed_register(const identity::IdCard& card, const std::string& id,
                                          ledger::Value payload) {
    ledger::Register r;
    r.register_id = id;
    r.kind = ledger::RegisterKind::AssetCreate;
    r.resource_type = "EducationalRecord";
    r.payload = ledger::canonical_encode(payload);
    r.submitter_card_id = card.card_id;
    r.submitter_signature = identity::sign(card, r.signing_bytes()).to_vector();
    return r;
  }

  ledger::Register record_register(const std::string& id) const {
    return signed_register(coordinator, id, record_payload(id, coordinator.card_id));
  }

  std::vector<ledger::Register> workload(std::size_t n, const std::string& prefix = "rec-") const {
    std::vector<ledger::Register> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(record_register(prefix + std::to_string(i)));
    return out;
  }
};

}  // namespace bcer::testing
