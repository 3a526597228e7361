#include "bcer/model/model.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace bcer::model {
namespace {

bool is_reserved(std::string_view name) { return primitive_from_string(name).has_value() || name == "ANY"; }

std::string parse_dotted(TokenCursor& cur) {
  std::string out = cur.expect_identifier("namespace name").text;
  while (cur.peek().kind == TokenKind::Dot) {
    cur.advance();
    out += "." + cur.expect_identifier("identifier after '.'").text;
  }
  return out;
}

FieldDef parse_field(TokenCursor& cur) {
  FieldDef f;
  f.pos = cur.peek().pos;
  if (cur.peek().kind == TokenKind::Arrow) {
    cur.advance();
    f.reference_type = cur.expect_identifier("referenced type name").text;
    f.name = cur.expect_identifier("field name").text;
    return f;
  }
  cur.expect_keyword("o");
  const Token type_token = cur.peek();
  auto prim = type_token.kind == TokenKind::Identifier ? primitive_from_string(type_token.text) : std::nullopt;
  if (!prim) cur.fail_expected({"String", "Integer", "Boolean", "DateTime"});
  cur.advance();
  f.primitive = *prim;
  f.name = cur.expect_identifier("field name").text;
  if (cur.peek_keyword("optional")) {
    cur.advance();
    f.optional = true;
  }
  return f;
}

TypeDecl parse_decl(TokenCursor& cur) {
  TypeDecl d;
  d.pos = cur.peek().pos;
  const Token keyword = cur.expect_one_of({"asset", "participant", "transaction", "event"});
  if (keyword.text == "asset") d.kind = DeclKind::Asset;
  else if (keyword.text == "participant") d.kind = DeclKind::Participant;
  else if (keyword.text == "transaction") d.kind = DeclKind::Transaction;
  else d.kind = DeclKind::Event;

  const Token name = cur.expect_identifier("type name");
  if (is_reserved(name.text))
    throw ModelError(ModelError::Kind::ReservedName, name.pos, "'" + name.text + "' is a reserved name");
  d.name = name.text;
  if (d.kind == DeclKind::Asset || d.kind == DeclKind::Participant) {
    cur.expect_keyword("identified");
    cur.expect_keyword("by");
    d.identified_by = cur.expect_identifier("identifying field name").text;
  }
  cur.expect(TokenKind::LBrace, "'{'");
  while (cur.peek().kind != TokenKind::RBrace) {
    if (cur.peek().kind != TokenKind::Arrow && !cur.peek_keyword("o")) cur.fail_expected({"'o'", "'-->'", "'}'"});
    d.fields.push_back(parse_field(cur));
  }
  cur.advance();
  return d;
}

void check_model(const ModelDefinition& m) {
  std::map<std::string, const TypeDecl*> names;
  auto each = [&](auto&& fn) {
    for (const auto* list : {&m.assets, &m.participants, &m.transactions, &m.events})
      for (const auto& d : *list) fn(d);
  };
  // Report problems in source order.
  std::vector<const TypeDecl*> ordered;
  each([&](const TypeDecl& d) { ordered.push_back(&d); });
  std::sort(ordered.begin(), ordered.end(), [](const TypeDecl* a, const TypeDecl* b) {
    return std::pair(a->pos.line, a->pos.column) < std::pair(b->pos.line, b->pos.column);
  });
  for (const auto* d : ordered) {
    if (!names.emplace(d->name, d).second) {
      throw ModelError(ModelError::Kind::DuplicateDeclaration, d->pos,
                       "type '" + d->name + "' is already declared at " + to_string(names[d->name]->pos));
    }
  }
  for (const auto* d : ordered) {
    std::set<std::string> fields;
    for (const auto& f : d->fields) {
      if (!fields.insert(f.name).second)
        throw ModelError(ModelError::Kind::DuplicateField, f.pos,
                         "field '" + f.name + "' declared twice in '" + d->name + "'");
      if (f.reference_type && !names.count(*f.reference_type))
        throw ModelError(ModelError::Kind::UnknownType, f.pos, "unknown type '" + *f.reference_type + "'");
    }
    if (d->kind == DeclKind::Asset || d->kind == DeclKind::Participant) {
      const FieldDef* id = d->field(d->identified_by);
      if (!id)
        throw ModelError(ModelError::Kind::MissingIdentifier, d->pos,
                         "identifying field '" + d->identified_by + "' is not declared in '" + d->name + "'");
      if (id->is_reference() || id->primitive != PrimitiveType::String || id->optional)
        throw ModelError(ModelError::Kind::MissingIdentifier, id->pos,
                         "identifying field '" + id->name + "' must be a required String");
    }
  }
}

void format_decl(std::string& out, const TypeDecl& d) {
  out += "\n";
  out += to_string(d.kind);
  out += " " + d.name;
  if (d.kind == DeclKind::Asset || d.kind == DeclKind::Participant) out += " identified by " + d.identified_by;
  if (d.fields.empty()) {
    out += " {\n}\n";
    return;
  }
  out += " {\n";
  for (const auto& f : d.fields) {
    if (f.reference_type) {
      out += "  --> " + *f.reference_type + " " + f.name + "\n";
    } else {
      out += std::string("  o ") + to_string(f.primitive) + " " + f.name;
      if (f.optional) out += " optional";
      out += "\n";
    }
  }
  out += "}\n";
}

}  // namespace

const char* to_string(PrimitiveType type) {
  switch (type) {
    case PrimitiveType::String: return "String";
    case PrimitiveType::Integer: return "Integer";
    case PrimitiveType::Boolean: return "Boolean";
    case PrimitiveType::DateTime: return "DateTime";
  }
  return "?";
}

std::optional<PrimitiveType> primitive_from_string(std::string_view text) {
  if (text == "String") return PrimitiveType::String;
  if (text == "Integer") return PrimitiveType::Integer;
  if (text == "Boolean") return PrimitiveType::Boolean;
  if (text == "DateTime") return PrimitiveType::DateTime;
  return std::nullopt;
}

const char* to_string(DeclKind kind) {
  switch (kind) {
    case DeclKind::Asset: return "asset";
    case DeclKind::Participant: return "participant";
    case DeclKind::Transaction: return "transaction";
    case DeclKind::Event: return "event";
  }
  return "?";
}

const FieldDef* TypeDecl::field(std::string_view field_name) const {
  for (const auto& f : fields)
    if (f.name == field_name) return &f;
  return nullptr;
}

const TypeDecl* ModelDefinition::find(std::string_view name) const {
  name = local_name(name);
  for (const auto* list : {&assets, &participants, &transactions, &events})
    for (const auto& d : *list)
      if (d.name == name) return &d;
  return nullptr;
}

const TypeDecl* ModelDefinition::find(std::string_view name, DeclKind kind) const {
  const auto* d = find(name);
  return d && d->kind == kind ? d : nullptr;
}

std::string_view ModelDefinition::local_name(std::string_view name) const {
  if (!ns.empty() && name.size() > ns.size() + 1 && name.substr(0, ns.size()) == ns && name[ns.size()] == '.')
    return name.substr(ns.size() + 1);
  return name;
}

bool operator==(const FieldDef& a, const FieldDef& b) {
  return a.name == b.name && a.reference_type == b.reference_type && a.optional == b.optional &&
         (a.reference_type || a.primitive == b.primitive);
}

bool operator==(const TypeDecl& a, const TypeDecl& b) {
  return a.kind == b.kind && a.name == b.name && a.identified_by == b.identified_by && a.fields == b.fields;
}

bool operator==(const ModelDefinition& a, const ModelDefinition& b) {
  return a.ns == b.ns && a.assets == b.assets && a.participants == b.participants &&
         a.transactions == b.transactions && a.events == b.events;
}

ModelDefinition parse_model(std::string_view source) {
  TokenCursor cur(tokenize(source));
  ModelDefinition m;
  cur.expect_keyword("namespace");
  m.ns = parse_dotted(cur);
  while (!cur.at_end()) {
    auto d = parse_decl(cur);
    switch (d.kind) {
      case DeclKind::Asset: m.assets.push_back(std::move(d)); break;
      case DeclKind::Participant: m.participants.push_back(std::move(d)); break;
      case DeclKind::Transaction: m.transactions.push_back(std::move(d)); break;
      case DeclKind::Event: m.events.push_back(std::move(d)); break;
    }
  }
  check_model(m);
  return m;
}

std::string format_model(const ModelDefinition& model) {
  std::string out = "namespace " + model.ns + "\n";
  for (const auto* list : {&model.participants, &model.assets, &model.transactions, &model.events})
    for (const auto& d : *list) format_decl(out, d);
  return out;
}

}  // namespace bcer::model
