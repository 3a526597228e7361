#include "bcer/records/record.hpp"

namespace bcer::records {

const char* to_string(RecordKind kind) {
  return kind == RecordKind::Diploma ? "diploma" : "certificate";
}

std::optional<RecordKind> record_kind_from_string(std::string_view text) {
  if (text == "certificate") return RecordKind::Certificate;
  if (text == "diploma") return RecordKind::Diploma;
  return std::nullopt;
}

ledger::Map EducationalRecord::to_value() const {
  return {{"record_id", record_id},
          {"kind", to_string(kind)},
          {"title", title},
          {"student_ref", student_ref},
          {"institution", institution},
          {"course", course},
          {"issued_on", issued_on},
          {"issuer_card_id", issuer_card_id},
          {"document_hash", document_hash.hex()}};
}

EducationalRecord EducationalRecord::from_value(const ledger::Value& value) {
  try {
    const auto& m = value.as_map();
    ledger::expect_keys(m, {"record_id", "kind", "title", "student_ref", "institution", "course", "issued_on",
                            "issuer_card_id", "document_hash"});
    EducationalRecord r;
    r.record_id = m.at("record_id").as_string();
    auto kind = record_kind_from_string(m.at("kind").as_string());
    if (!kind) throw RecordsError(RecordsError::Code::SchemaViolation, "kind: expected certificate or diploma");
    r.kind = *kind;
    r.title = m.at("title").as_string();
    r.student_ref = m.at("student_ref").as_string();
    r.institution = m.at("institution").as_string();
    r.course = m.at("course").as_string();
    r.issued_on = m.at("issued_on").as_string();
    r.issuer_card_id = m.at("issuer_card_id").as_string();
    r.document_hash = crypto::HashDigest::from_hex(m.at("document_hash").as_string());
    return r;
  } catch (const RecordsError&) {
    throw;
  } catch (const std::exception& e) {
    throw RecordsError(RecordsError::Code::SchemaViolation, std::string("malformed record: ") + e.what());
  }
}

std::string new_record_id() { return crypto::random_id(); }

const char* to_string(RecordsError::Code code) {
  switch (code) {
    case RecordsError::Code::InvalidCard: return "invalid-card";
    case RecordsError::Code::Unauthorized: return "unauthorized";
    case RecordsError::Code::SchemaViolation: return "schema-violation";
    case RecordsError::Code::DuplicateRecordId: return "duplicate-record-id";
    case RecordsError::Code::ConsensusTimeout: return "consensus-timeout";
    case RecordsError::Code::NotFound: return "not-found";
    case RecordsError::Code::NoHandler: return "no-handler";
    case RecordsError::Code::Unsupported: return "unsupported";
    case RecordsError::Code::IntegrityFailure: return "integrity-failure";
  }
  return "?";
}

const char* to_string(VerifyStatus status) {
  switch (status) {
    case VerifyStatus::Authentic: return "authentic";
    case VerifyStatus::NotFound: return "not-found";
    case VerifyStatus::IntegrityFailure: return "integrity-failure";
  }
  return "?";
}

nlohmann::json to_json(const EducationalRecord& r) {
  return {{"record_id", r.record_id},     {"kind", to_string(r.kind)},
          {"title", r.title},             {"student_ref", r.student_ref},
          {"institution", r.institution}, {"course", r.course},
          {"issued_on", r.issued_on},     {"issuer_card_id", r.issuer_card_id},
          {"document_hash", r.document_hash.hex()}};
}

nlohmann::json to_json(const VerificationResult& v) {
  nlohmann::json j = {{"status", to_string(v.status)},
                      {"height", v.height ? nlohmann::json(*v.height) : nlohmann::json(nullptr)},
                      {"issuer_card_id", v.issuer_card_id},
                      {"issued_on", v.issued_on},
                      {"endorsement_count", v.endorsement_count},
                      {"chain_valid", v.chain_valid}};
  if (v.record) j["record"] = to_json(*v.record);
  if (!v.block_hash.empty()) j["block_hash"] = v.block_hash;
  if (!v.endorsers.empty()) j["endorsers"] = v.endorsers;
  if (!v.history.empty()) {
    auto& h = j["history"] = nlohmann::json::array();
    for (const auto& e : v.history)
      h.push_back({{"height", e.height},
                   {"kind", e.kind},
                   {"submitter_card_id", e.submitter_card_id},
                   {"timestamp_ms", e.timestamp_ms},
                   {"block_hash", e.block_hash}});
  }
  if (!v.detail.empty()) j["detail"] = v.detail;
  return j;
}

nlohmann::json to_json(const RecordSummary& s) {
  auto j = to_json(s.record);
  j["height"] = s.height;
  return j;
}

nlohmann::json to_json(const ledger::Value& value) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Bytes>) {
          return to_hex(v);
        } else if constexpr (std::is_same_v<T, ledger::List>) {
          auto out = nlohmann::json::array();
          for (const auto& item : v) out.push_back(to_json(item));
          return out;
        } else if constexpr (std::is_same_v<T, ledger::Map>) {
          auto out = nlohmann::json::object();
          for (const auto& [k, item] : v) out[k] = to_json(item);
          return out;
        } else {
          return v;
        }
      },
      value.storage());
}

}  // namespace bcer::records
