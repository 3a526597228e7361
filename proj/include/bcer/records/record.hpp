#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcer/crypto.hpp"
#include "bcer/identity/card.hpp"
#include "bcer/ledger/encoding.hpp"

namespace bcer::records {

inline constexpr const char* kRecordType = "EducationalRecord";

enum class RecordKind { Certificate, Diploma };

const char* to_string(RecordKind kind);
std::optional<RecordKind> record_kind_from_string(std::string_view text);

struct EducationalRecord {
  std::string record_id;
  RecordKind kind = RecordKind::Certificate;
  std::string title;
  std::string student_ref;
  std::string institution;
  std::string course;
  /// ISO-8601 date.
  std::string issued_on;
  std::string issuer_card_id;
  crypto::HashDigest document_hash;

  /// Instance of the model's EducationalRecord asset.
  ledger::Map to_value() const;
  /// Throws RecordsError(SchemaViolation) on a malformed instance.
  static EducationalRecord from_value(const ledger::Value& value);

  friend bool operator==(const EducationalRecord&, const EducationalRecord&) = default;
};

/// Fresh 128-bit identifier, lowercase hex.
std::string new_record_id();

class RecordsError : public std::runtime_error {
 public:
  enum class Code {
    InvalidCard,
    Unauthorized,
    SchemaViolation,
    DuplicateRecordId,
    ConsensusTimeout,
    NotFound,
    NoHandler,
    Unsupported,
    IntegrityFailure,
  };
  RecordsError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Machine code, e.g. "duplicate-record-id".
const char* to_string(RecordsError::Code code);

struct RegistrationRequest {
  /// An empty record_id gets a fresh one; issuer_card_id and document_hash
  /// are filled in from the card and document.
  EducationalRecord record;
  std::optional<identity::IdCard> card;
  /// Required when the card is a public copy: the holder's signature over
  /// the register signing bytes.
  std::optional<Bytes> signature;
  /// Hashed, never stored.
  std::optional<Bytes> document;
};

struct RegistrationOutcome {
  std::string record_id;
  std::uint64_t height = 0;
  std::string block_hash;
};

enum class VerifyStatus { Authentic, NotFound, IntegrityFailure };
const char* to_string(VerifyStatus status);

struct ProvenanceEntry {
  std::uint64_t height = 0;
  std::string kind;
  std::string submitter_card_id;
  std::int64_t timestamp_ms = 0;
  std::string block_hash;

  friend bool operator==(const ProvenanceEntry&, const ProvenanceEntry&) = default;
};

struct VerificationResult {
  VerifyStatus status = VerifyStatus::NotFound;
  std::optional<std::uint64_t> height;
  std::string issuer_card_id;
  std::string issued_on;
  std::size_t endorsement_count = 0;
  bool chain_valid = false;
  /// Current state of the record (after any updates).
  std::optional<EducationalRecord> record;
  std::string block_hash;
  std::vector<std::string> endorsers;
  std::vector<ProvenanceEntry> history;
  /// Why integrity failed, e.g. the first broken height.
  std::string detail;

  friend bool operator==(const VerificationResult&, const VerificationResult&) = default;
};

struct DocumentCheck {
  bool matches = false;
  VerificationResult verification;
};

struct RecordFilter {
  std::optional<std::string> student_ref;
  std::optional<std::string> institution;
  std::optional<RecordKind> kind;
};

struct RecordSummary {
  EducationalRecord record;
  std::uint64_t height = 0;
};

// JSON views; field names follow the struct members.
nlohmann::json to_json(const EducationalRecord& record);
nlohmann::json to_json(const VerificationResult& result);
nlohmann::json to_json(const RecordSummary& summary);
nlohmann::json to_json(const ledger::Value& value);

}  // namespace bcer::records
