#include "bcer/model/acl.hpp"

#include <map>

namespace bcer::model {
namespace {

std::optional<std::string> parse_type_ref(TokenCursor& cur, const ModelDefinition& model, bool participant) {
  if (cur.peek_keyword("ANY")) {
    cur.advance();
    return std::nullopt;
  }
  if (cur.peek().kind != TokenKind::String) cur.fail_expected({participant ? "participant type string" : "resource type string", "ANY"});
  const Token t = cur.advance();
  const auto local = std::string(model.local_name(t.text));
  const TypeDecl* decl = participant ? model.find(local, DeclKind::Participant) : model.find(local);
  if (!decl) {
    throw ModelError(ModelError::Kind::UnknownType, t.pos,
                     std::string("unknown ") + (participant ? "participant" : "resource") + " type '" + t.text + "'");
  }
  return local;
}

AclRule parse_rule(TokenCursor& cur, const ModelDefinition& model) {
  AclRule r;
  r.pos = cur.expect_keyword("rule").pos;
  r.name = cur.expect_identifier("rule name").text;
  cur.expect(TokenKind::LBrace, "'{'");

  cur.expect_keyword("participant");
  cur.expect(TokenKind::Colon, "':'");
  r.participant_type = parse_type_ref(cur, model, true);

  cur.expect_keyword("operation");
  const Token colon = cur.expect(TokenKind::Colon, "':'");
  if (cur.peek().kind != TokenKind::Identifier || cur.peek_keyword("resource"))
    throw ModelError(ModelError::Kind::EmptyOperations, colon.pos, "rule '" + r.name + "' lists no operations");
  while (true) {
    const Token op = cur.peek();
    auto parsed = op.kind == TokenKind::Identifier ? operation_from_string(op.text) : std::nullopt;
    if (!parsed) cur.fail_expected({"CREATE", "READ", "UPDATE", "DELETE"});
    cur.advance();
    r.operations.insert(*parsed);
    if (cur.peek().kind != TokenKind::Comma) break;
    cur.advance();
  }

  cur.expect_keyword("resource");
  cur.expect(TokenKind::Colon, "':'");
  r.resource_type = parse_type_ref(cur, model, false);

  cur.expect_keyword("action");
  cur.expect(TokenKind::Colon, "':'");
  r.action = cur.expect_one_of({"ALLOW", "DENY"}).text == "ALLOW" ? Action::Allow : Action::Deny;
  cur.expect(TokenKind::RBrace, "'}'");
  return r;
}

}  // namespace

const char* to_string(Operation op) {
  switch (op) {
    case Operation::Create: return "CREATE";
    case Operation::Read: return "READ";
    case Operation::Update: return "UPDATE";
    case Operation::Delete: return "DELETE";
  }
  return "?";
}

const char* to_string(Action action) { return action == Action::Allow ? "ALLOW" : "DENY"; }

std::optional<Operation> operation_from_string(std::string_view text) {
  if (text == "CREATE") return Operation::Create;
  if (text == "READ") return Operation::Read;
  if (text == "UPDATE") return Operation::Update;
  if (text == "DELETE") return Operation::Delete;
  return std::nullopt;
}

bool AclRule::matches(std::string_view participant, Operation op, std::string_view resource) const {
  if (participant_type && *participant_type != participant) return false;
  if (resource_type && *resource_type != resource) return false;
  return operations.count(op) > 0;
}

bool operator==(const AclRule& a, const AclRule& b) {
  return a.name == b.name && a.participant_type == b.participant_type && a.operations == b.operations &&
         a.resource_type == b.resource_type && a.action == b.action;
}

AclRuleSet parse_acl(std::string_view source, const ModelDefinition& model) {
  TokenCursor cur(tokenize(source));
  AclRuleSet set;
  std::map<std::string, SourcePos> names;
  while (!cur.at_end()) {
    if (!cur.peek_keyword("rule")) cur.fail_expected({"rule"});
    auto rule = parse_rule(cur, model);
    if (auto [it, inserted] = names.emplace(rule.name, rule.pos); !inserted) {
      throw ModelError(ModelError::Kind::DuplicateRule, rule.pos,
                       "rule '" + rule.name + "' is already defined at " + to_string(it->second));
    }
    set.rules.push_back(std::move(rule));
  }
  return set;
}

std::string format_acl(const AclRuleSet& rules) {
  std::string out;
  for (const auto& r : rules.rules) {
    if (!out.empty()) out += "\n";
    out += "rule " + r.name + " {\n";
    out += "  participant: " + (r.participant_type ? "\"" + *r.participant_type + "\"" : std::string("ANY")) + "\n";
    out += "  operation: ";
    bool first = true;
    for (auto op : r.operations) {
      if (!first) out += ", ";
      out += to_string(op);
      first = false;
    }
    out += "\n";
    out += "  resource: " + (r.resource_type ? "\"" + *r.resource_type + "\"" : std::string("ANY")) + "\n";
    out += std::string("  action: ") + to_string(r.action) + "\n}\n";
  }
  return out;
}

Action authorize(const AclRuleSet& rules, std::string_view participant_type, Operation op,
                 std::string_view resource_type) {
  for (const auto& rule : rules.rules)
    if (rule.matches(participant_type, op, resource_type)) return rule.action;
  return Action::Deny;
}

}  // namespace bcer::model
