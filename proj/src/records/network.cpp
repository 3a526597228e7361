#include "bcer/records/network.hpp"

#include <chrono>

#include "default_network.hpp"

namespace bcer::records {

std::string_view default_model_source() { return generated::kDefaultModel; }
std::string_view default_acl_source() { return generated::kDefaultAcl; }

std::string participant_type_for(identity::Role role) {
  return role == identity::Role::Coordinator ? "Coordinator" : "User";
}

namespace {

std::int64_t system_now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

bool is_update_of(const ledger::Register& reg, const std::string& record_id) {
  try {
    const auto value = ledger::canonical_decode(reg.payload);
    const auto* id = ledger::find_field(value.as_map(), "record_id");
    return id && id->is_string() && id->as_string() == record_id;
  } catch (const std::exception&) {
    return false;
  }
}

std::optional<EducationalRecord> decode_record(const ledger::Register& reg) {
  try {
    return EducationalRecord::from_value(ledger::canonical_decode(reg.payload));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<std::pair<std::uint64_t, const ledger::Register*>> record_registers(const ledger::Chain& chain,
                                                                                 const std::string& record_id) {
  std::vector<std::pair<std::uint64_t, const ledger::Register*>> out;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& block = chain.at(i);
    if (!block.reg || block.reg->resource_type != kRecordType) continue;
    const auto& reg = *block.reg;
    if (reg.kind == ledger::RegisterKind::AssetCreate ? reg.register_id == record_id
                                                      : is_update_of(reg, record_id)) {
      out.emplace_back(i, &reg);  // position, not the (possibly tampered) declared height
    }
  }
  return out;
}

RecordsNetwork::RecordsNetwork(NetworkSetup setup, ledger::Chain chain, identity::CardDirectory cards,
                               std::string load_fault)
    : setup_(std::move(setup)),
      quorum_(setup_.quorum ? setup_.quorum : ledger::majority_quorum(setup_.validator_ids.size())),
      roster_(consensus::roster_keys(setup_.validator_ids, setup_.validator_keys)),
      handlers_(HandlerRegistry::defaults()),
      load_fault_(std::move(load_fault)),
      chain_(std::move(chain)),
      cards_(std::move(cards)) {
  if (setup_.validator_ids.empty()) throw std::invalid_argument("network needs at least one validator");
  if (quorum_ > setup_.validator_ids.size()) throw std::invalid_argument("quorum exceeds validator count");
  if (chain_.empty()) throw std::invalid_argument("network needs a chain with a genesis block");
  handlers_.check_complete(setup_.model);
  if (!setup_.clock) setup_.clock = system_now_ms;
}

ledger::Chain RecordsNetwork::chain() const {
  std::lock_guard lock(state_mutex_);
  return chain_;
}

identity::CardDirectory RecordsNetwork::cards() const {
  std::lock_guard lock(state_mutex_);
  return cards_;
}

std::string RecordsNetwork::integrity_problem() const {
  if (!load_fault_.empty()) return load_fault_;
  std::lock_guard lock(state_mutex_);
  auto report = ledger::validate_chain(chain_, quorum_, roster_, &verify_cache_);
  if (report.valid) return {};
  const auto* bad = report.first_failure();
  return "height " + std::to_string(bad->height) + ": " + ledger::to_string(bad->check) +
         (bad->detail.empty() ? "" : " (" + bad->detail + ")");
}

void RecordsNetwork::enroll_card(const identity::IdCard& card) {
  check_card(card);
}

const identity::IdCard& RecordsNetwork::check_card(const std::optional<identity::IdCard>& card) {
  if (!card) throw RecordsError(RecordsError::Code::InvalidCard, "an ID card is required");
  if (!identity::verify_card(*card, setup_.authority_key))
    throw RecordsError(RecordsError::Code::InvalidCard, "card was not issued by this network's authority");
  {
    std::lock_guard lock(state_mutex_);
    if (const auto* known = cards_.find(card->card_id)) {
      if (known->public_key != card->public_key || known->participant_type != card->participant_type)
        throw RecordsError(RecordsError::Code::InvalidCard, "card id is already bound to another key");
      return *card;
    }
    cards_.add(*card);
  }
  if (card_listener_) card_listener_(card->public_copy());
  return *card;
}

void RecordsNetwork::require(const identity::IdCard& card, model::Operation op) const {
  if (model::authorize(setup_.acl, card.participant_type, op, kRecordType) != model::Action::Allow) {
    throw RecordsError(RecordsError::Code::Unauthorized,
                       card.participant_type + " may not " + model::to_string(op) + " " + kRecordType);
  }
}

Bytes RecordsNetwork::sign_register(const ledger::Register& reg, const identity::IdCard& card,
                                    const std::optional<Bytes>& signature) const {
  if (card.secret_key) return identity::sign(card, reg.signing_bytes()).to_vector();
  if (!signature) throw RecordsError(RecordsError::Code::InvalidCard, "public card given without a signature");
  if (!identity::verify(card, reg.signing_bytes(), *signature))
    throw RecordsError(RecordsError::Code::InvalidCard, "signature does not match the card");
  return *signature;
}

EducationalRecord RecordsNetwork::complete_record(EducationalRecord record, const identity::IdCard& card,
                                                  const std::optional<Bytes>& document) {
  if (record.record_id.empty()) record.record_id = new_record_id();
  record.issuer_card_id = card.card_id;
  if (document) {
    record.document_hash = crypto::sha256(*document);
  } else if (record.document_hash.is_zero()) {
    record.document_hash = crypto::sha256(ByteView{});
  }
  return record;
}

Bytes RecordsNetwork::registration_signing_bytes(const EducationalRecord& completed) {
  ledger::Register reg;
  reg.register_id = completed.record_id;
  reg.kind = ledger::RegisterKind::AssetCreate;
  reg.resource_type = kRecordType;
  reg.payload = ledger::canonical_encode(completed.to_value());
  return reg.signing_bytes();
}

RegistrationOutcome RecordsNetwork::register_certificate(const RegistrationRequest& request) {
  std::lock_guard write(write_mutex_);
  const auto& card = check_card(request.card);
  require(card, model::Operation::Create);
  auto record = complete_record(request.record, card, request.document);

  if (auto problem = integrity_problem(); !problem.empty())
    throw RecordsError(RecordsError::Code::IntegrityFailure, "chain is damaged: " + problem);
  auto snapshot = chain();
  if (!record_registers(snapshot, record.record_id).empty())
    throw RecordsError(RecordsError::Code::DuplicateRecordId, "record '" + record.record_id + "' already exists");

  auto tx = record.to_value();
  tx.erase("issuer_card_id");
  auto regs = dispatch_transaction("RegisterRecord", tx, handlers_, setup_.model, {snapshot, card});
  auto reg = std::move(regs.at(0));
  reg.submitter_signature = sign_register(reg, card, request.signature);
  return commit(std::move(reg), record.record_id);
}

RegistrationOutcome RecordsNetwork::update_record(const UpdateRequest& request) {
  std::lock_guard write(write_mutex_);
  const auto& card = check_card(request.card);
  require(card, model::Operation::Update);
  if (auto problem = integrity_problem(); !problem.empty())
    throw RecordsError(RecordsError::Code::IntegrityFailure, "chain is damaged: " + problem);
  auto snapshot = chain();
  auto history = record_registers(snapshot, request.record_id);
  if (history.empty()) throw RecordsError(RecordsError::Code::NotFound, "record '" + request.record_id + "' not found");
  auto current = decode_record(*history.back().second);
  if (!current) throw RecordsError(RecordsError::Code::IntegrityFailure, "stored record does not decode");

  ledger::Map tx{{"record_id", request.record_id},
                 {"title", request.title.value_or(current->title)},
                 {"course", request.course.value_or(current->course)},
                 {"issued_on", request.issued_on.value_or(current->issued_on)},
                 {"document_hash", request.document ? crypto::sha256(*request.document).hex()
                                                    : current->document_hash.hex()}};
  auto regs = dispatch_transaction("UpdateRecord", tx, handlers_, setup_.model, {snapshot, card});
  auto reg = std::move(regs.at(0));
  reg.submitter_signature = sign_register(reg, card, request.signature);
  return commit(std::move(reg), request.record_id);
}

void RecordsNetwork::delete_record(const std::string& record_id, const identity::IdCard& card) {
  check_card(card);
  require(card, model::Operation::Delete);
  throw RecordsError(RecordsError::Code::Unsupported,
                     "ledger entries are permanent; record '" + record_id + "' cannot be deleted");
}

EducationalRecord RecordsNetwork::read_record(const std::string& record_id, const identity::IdCard& card) const {
  if (!identity::verify_card(card, setup_.authority_key))
    throw RecordsError(RecordsError::Code::InvalidCard, "card was not issued by this network's authority");
  require(card, model::Operation::Read);
  auto snapshot = chain();
  auto history = record_registers(snapshot, record_id);
  if (history.empty()) throw RecordsError(RecordsError::Code::NotFound, "record '" + record_id + "' not found");
  auto record = decode_record(*history.back().second);
  if (!record) throw RecordsError(RecordsError::Code::IntegrityFailure, "stored record does not decode");
  return *record;
}

RegistrationOutcome RecordsNetwork::commit(ledger::Register reg, const std::string& record_id) {
  auto snapshot = chain();
  auto cards = this->cards();
  consensus::ValidationContext ctx{setup_.model, setup_.acl, cards};
  auto cfg = setup_.sim;
  cfg.quorum = quorum_;
  cfg.record_events = false;
  cfg.start_ms = setup_.clock();
  cfg.network_id = snapshot.network_id();

  consensus::Simulation sim(cfg, snapshot, setup_.validator_ids, setup_.validator_keys, ctx);
  const auto reg_id = reg.register_id;
  sim.submit(std::move(reg));
  auto result = sim.run();
  if (result.committed.empty()) {
    throw RecordsError(RecordsError::Code::ConsensusTimeout,
                       "register '" + reg_id + "' was not committed by a quorum of validators");
  }

  const auto& next = result.best_chain();
  RegistrationOutcome outcome{record_id, 0, {}};
  for (auto h = snapshot.size(); h < next.size(); ++h) {
    if (commit_listener_) commit_listener_(next.at(h));
    if (next.at(h).reg && next.at(h).reg->register_id == reg_id) {
      outcome.height = next.at(h).header.height;
      outcome.block_hash = next.hash_at(h).hex();
    }
  }
  std::lock_guard lock(state_mutex_);
  chain_ = next;
  return outcome;
}

VerificationResult RecordsNetwork::verify_certificate(const std::string& record_id) const {
  VerificationResult result;
  const auto problem = integrity_problem();
  const auto snapshot = chain();
  result.chain_valid = problem.empty();

  auto history = record_registers(snapshot, record_id);
  if (!history.empty()) {
    const auto create_height = history.front().first;
    const auto& block = snapshot.at(create_height);
    result.height = create_height;
    result.block_hash = snapshot.hash_at(create_height).hex();
    result.endorsement_count = block.endorsements.size();
    for (const auto& e : block.endorsements) result.endorsers.push_back(e.validator_id);
    for (const auto& [height, reg] : history) {
      result.history.push_back({height, ledger::to_string(reg->kind), reg->submitter_card_id,
                                snapshot.at(height).header.timestamp_ms, snapshot.hash_at(height).hex()});
    }
    result.record = decode_record(*history.back().second);
    if (result.record) {
      result.issuer_card_id = result.record->issuer_card_id;
      result.issued_on = result.record->issued_on;
    }
  }

  if (!result.chain_valid) {
    result.status = VerifyStatus::IntegrityFailure;
    result.detail = problem;
  } else if (history.empty()) {
    result.status = VerifyStatus::NotFound;
  } else if (!result.record || result.endorsement_count < quorum_) {
    result.status = VerifyStatus::IntegrityFailure;
    result.detail = "record block is not properly endorsed";
  } else {
    result.status = VerifyStatus::Authentic;
  }
  return result;
}

DocumentCheck RecordsNetwork::verify_document(const std::string& record_id, ByteView document) const {
  DocumentCheck check;
  check.verification = verify_certificate(record_id);
  if (check.verification.status == VerifyStatus::NotFound)
    throw RecordsError(RecordsError::Code::NotFound, "record '" + record_id + "' not found");
  check.matches = check.verification.status == VerifyStatus::Authentic &&
                  check.verification.record->document_hash == crypto::sha256(document);
  return check;
}

std::vector<RecordSummary> RecordsNetwork::list_records(const RecordFilter& filter) const {
  const auto snapshot = chain();
  std::map<std::string, RecordSummary> by_id;
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    const auto& block = snapshot.at(i);
    if (!block.reg || block.reg->resource_type != kRecordType) continue;
    auto record = decode_record(*block.reg);
    if (!record) continue;
    if (block.reg->kind == ledger::RegisterKind::AssetCreate) {
      by_id.insert_or_assign(record->record_id, RecordSummary{*record, i});
    } else if (auto it = by_id.find(record->record_id); it != by_id.end()) {
      it->second.record = *record;
    }
  }
  std::vector<RecordSummary> out;
  for (auto& [id, summary] : by_id) {
    const auto& r = summary.record;
    if (filter.student_ref && r.student_ref != *filter.student_ref) continue;
    if (filter.institution && r.institution != *filter.institution) continue;
    if (filter.kind && r.kind != *filter.kind) continue;
    out.push_back(std::move(summary));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.height > b.height; });
  return out;
}

}  // namespace bcer::records
