#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bcer/ledger/encoding.hpp"
#include "bcer/model/model.hpp"

namespace bcer::model {

struct InstanceError {
  enum class Code { UnknownType, NotARecord, MissingField, UnknownField, TypeMismatch, EmptyIdentifier };
  Code code;
  std::string field;
  std::string message;
};

const char* to_string(InstanceError::Code code);

/// Checks a resource instance against its declaration. Booleans are the
/// integers 0 and 1; DateTime values are ISO-8601 strings; references are
/// identifier strings. An empty result means the instance is valid.
std::vector<InstanceError> validate_instance(const ModelDefinition& model, std::string_view type_name,
                                             const ledger::Value& instance);

/// YYYY-MM-DD, optionally followed by THH:MM:SS[.fraction]Z.
bool is_iso8601(std::string_view text);

}  // namespace bcer::model
