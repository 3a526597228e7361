#include "bcer/records/handlers.hpp"

#include "bcer/model/instance.hpp"
#include "bcer/records/network.hpp"
#include "bcer/records/record.hpp"

namespace bcer::records {

namespace {

ledger::Register make_register(std::string register_id, ledger::RegisterKind kind, const EducationalRecord& record,
                               const identity::IdCard& submitter) {
  ledger::Register reg;
  reg.register_id = std::move(register_id);
  reg.kind = kind;
  reg.resource_type = kRecordType;
  reg.payload = ledger::canonical_encode(record.to_value());
  reg.submitter_card_id = submitter.card_id;
  return reg;
}

std::vector<ledger::Register> register_record(const ledger::Map& tx, const HandlerContext& ctx) {
  auto fields = tx;
  fields["issuer_card_id"] = ctx.submitter.card_id;
  auto record = EducationalRecord::from_value(fields);
  return {make_register(record.record_id, ledger::RegisterKind::AssetCreate, record, ctx.submitter)};
}

std::vector<ledger::Register> update_record(const ledger::Map& tx, const HandlerContext& ctx) {
  const auto& record_id = tx.at("record_id").as_string();
  auto history = record_registers(ctx.chain, record_id);
  if (history.empty()) throw RecordsError(RecordsError::Code::NotFound, "record '" + record_id + "' not found");
  auto record = EducationalRecord::from_value(ledger::canonical_decode(history.back().second->payload));
  record.title = tx.at("title").as_string();
  record.course = tx.at("course").as_string();
  record.issued_on = tx.at("issued_on").as_string();
  try {
    record.document_hash = crypto::HashDigest::from_hex(tx.at("document_hash").as_string());
  } catch (const std::exception& e) {
    throw RecordsError(RecordsError::Code::SchemaViolation, std::string("document_hash: ") + e.what());
  }
  auto reg_id = record_id + ".u" + std::to_string(history.size());
  return {make_register(std::move(reg_id), ledger::RegisterKind::AssetUpdate, record, ctx.submitter)};
}

}  // namespace

void HandlerRegistry::add(const std::string& transaction_type, TransactionHandler handler) {
  if (!handlers_.emplace(transaction_type, std::move(handler)).second)
    throw std::invalid_argument("handler for '" + transaction_type + "' already registered");
}

const TransactionHandler* HandlerRegistry::find(const std::string& transaction_type) const {
  auto it = handlers_.find(transaction_type);
  return it == handlers_.end() ? nullptr : &it->second;
}

std::vector<std::string> HandlerRegistry::missing(const model::ModelDefinition& model) const {
  std::vector<std::string> out;
  for (const auto& tx : model.transactions)
    if (!handlers_.count(tx.name)) out.push_back(tx.name);
  return out;
}

void HandlerRegistry::check_complete(const model::ModelDefinition& model) const {
  auto gaps = missing(model);
  if (gaps.empty()) return;
  std::string names;
  for (const auto& g : gaps) names += (names.empty() ? "" : ", ") + g;
  throw RecordsError(RecordsError::Code::NoHandler, "no handler for transaction type(s): " + names);
}

HandlerRegistry HandlerRegistry::defaults() {
  HandlerRegistry r;
  r.add("RegisterRecord", register_record);
  r.add("UpdateRecord", update_record);
  return r;
}

std::vector<ledger::Register> dispatch_transaction(const std::string& transaction_type,
                                                   const ledger::Value& instance, const HandlerRegistry& registry,
                                                   const model::ModelDefinition& model, const HandlerContext& ctx) {
  if (!model.find(transaction_type, model::DeclKind::Transaction))
    throw RecordsError(RecordsError::Code::NoHandler, "'" + transaction_type + "' is not a declared transaction");
  const auto* handler = registry.find(std::string(model.local_name(transaction_type)));
  if (!handler) throw RecordsError(RecordsError::Code::NoHandler, "no handler for '" + transaction_type + "'");
  auto errors = model::validate_instance(model, transaction_type, instance);
  if (!errors.empty()) throw RecordsError(RecordsError::Code::SchemaViolation, errors.front().message);
  return (*handler)(instance.as_map(), ctx);
}

}  // namespace bcer::records
