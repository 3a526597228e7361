#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcer/model/lexer.hpp"

namespace bcer::model {

enum class PrimitiveType { String, Integer, Boolean, DateTime };

const char* to_string(PrimitiveType type);
std::optional<PrimitiveType> primitive_from_string(std::string_view text);

struct FieldDef {
  std::string name;
  /// Set for `--> Type name` fields; otherwise `primitive` applies.
  std::optional<std::string> reference_type;
  PrimitiveType primitive = PrimitiveType::String;
  bool optional = false;
  SourcePos pos;

  bool is_reference() const { return reference_type.has_value(); }
};

enum class DeclKind { Asset, Participant, Transaction, Event };

const char* to_string(DeclKind kind);

/// One asset, participant, transaction or event declaration.
struct TypeDecl {
  DeclKind kind = DeclKind::Asset;
  std::string name;
  /// Only assets and participants are identified.
  std::string identified_by;
  std::vector<FieldDef> fields;
  SourcePos pos;

  const FieldDef* field(std::string_view field_name) const;
};

using AssetDef = TypeDecl;
using ParticipantDef = TypeDecl;
using TransactionDef = TypeDecl;
using EventDef = TypeDecl;

struct ModelDefinition {
  std::string ns;
  std::vector<AssetDef> assets;
  std::vector<ParticipantDef> participants;
  std::vector<TransactionDef> transactions;
  std::vector<EventDef> events;

  const TypeDecl* find(std::string_view name) const;
  const TypeDecl* find(std::string_view name, DeclKind kind) const;
  /// Strips a leading "<namespace>." qualifier when present.
  std::string_view local_name(std::string_view name) const;
};

// Structural equality: source positions are ignored.
bool operator==(const FieldDef& a, const FieldDef& b);
bool operator==(const TypeDecl& a, const TypeDecl& b);
bool operator==(const ModelDefinition& a, const ModelDefinition& b);

/// Parses and cross-checks a model source. Throws ModelError.
ModelDefinition parse_model(std::string_view source);

/// Canonical source text; parse_model(format_model(m)) == m.
std::string format_model(const ModelDefinition& model);

}  // namespace bcer::model
