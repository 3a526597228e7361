#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bcer/model/model.hpp"

namespace bcer::model {

enum class Operation { Create, Read, Update, Delete };
enum class Action { Allow, Deny };

const char* to_string(Operation op);
const char* to_string(Action action);
std::optional<Operation> operation_from_string(std::string_view text);

inline constexpr Operation kAllOperations[] = {Operation::Create, Operation::Read, Operation::Update,
                                               Operation::Delete};

struct AclRule {
  std::string name;
  /// nullopt means ANY.
  std::optional<std::string> participant_type;
  std::set<Operation> operations;
  std::optional<std::string> resource_type;
  Action action = Action::Deny;
  SourcePos pos;

  bool matches(std::string_view participant, Operation op, std::string_view resource) const;
};

bool operator==(const AclRule& a, const AclRule& b);

struct AclRuleSet {
  std::vector<AclRule> rules;
};

/// Parses rules and resolves their type names against `model`. Throws ModelError.
AclRuleSet parse_acl(std::string_view source, const ModelDefinition& model);

std::string format_acl(const AclRuleSet& rules);

/// First matching rule wins; no match denies.
Action authorize(const AclRuleSet& rules, std::string_view participant_type, Operation op,
                 std::string_view resource_type);

}  // namespace bcer::model
