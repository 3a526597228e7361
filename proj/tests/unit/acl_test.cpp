#include "bcer/model/acl.hpp"
#include "doctest.h"
#include "fixture_files.hpp"

using namespace bcer::model;
using bcer::testing::files_in;
using bcer::testing::fixture_dir;
using bcer::testing::read_file;

namespace {

const ModelDefinition& network_model() {
  static const ModelDefinition m = parse_model(read_file(fixture_dir() / ".." / ".." / "fixtures" / "network.model"));
  return m;
}

AclRuleSet network_acl() {
  return parse_acl(read_file(fixture_dir() / ".." / ".." / "fixtures" / "network.acl"), network_model());
}

ModelError acl_error(std::string_view source) {
  try {
    parse_acl(source, network_model());
  } catch (const ModelError& e) {
    return e;
  }
  FAIL("parse unexpectedly succeeded");
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("coordinator create rule") {
  auto set = parse_acl(R"(rule CoordinatorCreate {
  participant: "Coordinator"
  operation: CREATE
  resource: "EducationalRecord"
  action: ALLOW
})",
                       network_model());
  REQUIRE(set.rules.size() == 1);
  const auto& r = set.rules[0];
  CHECK(r.name == "CoordinatorCreate");
  CHECK(r.participant_type == "Coordinator");
  CHECK(r.operations == std::set<Operation>{Operation::Create});
  CHECK(r.resource_type == "EducationalRecord");
  CHECK(r.action == Action::Allow);
}

TEST_CASE("qualified names and ANY") {
  auto set = parse_acl(R"(rule R { participant: "org.unifacs.records.Student" operation: READ, UPDATE resource: ANY action: DENY })",
                       network_model());
  REQUIRE(set.rules.size() == 1);
  CHECK(set.rules[0].participant_type == "Student");
  CHECK_FALSE(set.rules[0].resource_type);
}

TEST_CASE("acl errors") {
  CHECK(acl_error(read_file(fixture_dir() / "acl" / "invalid" / "01_unknown_participant.acl")).kind() ==
        ModelError::Kind::UnknownType);
  CHECK(acl_error(read_file(fixture_dir() / "acl" / "invalid" / "02_duplicate_rule.acl")).kind() ==
        ModelError::Kind::DuplicateRule);
  CHECK(acl_error(read_file(fixture_dir() / "acl" / "invalid" / "03_empty_operations.acl")).kind() ==
        ModelError::Kind::EmptyOperations);
  for (const auto& path : files_in(fixture_dir() / "acl" / "invalid")) {
    CAPTURE(path.filename().string());
    CHECK(acl_error(read_file(path)).pos().line >= 1);
  }
  auto dean = acl_error(R"(rule R { participant: "Dean" operation: READ resource: ANY action: ALLOW })");
  CHECK(dean.message().find("Dean") != std::string::npos);
}

TEST_CASE("fixture ruleset decisions") {
  auto acl = network_acl();
  CHECK(authorize(acl, "Coordinator", Operation::Create, "EducationalRecord") == Action::Allow);
  CHECK(authorize(acl, "Coordinator", Operation::Read, "EducationalRecord") == Action::Allow);
  CHECK(authorize(acl, "Coordinator", Operation::Delete, "EducationalRecord") == Action::Deny);
  CHECK(authorize(acl, "Student", Operation::Create, "EducationalRecord") == Action::Deny);
  CHECK(authorize(acl, "Student", Operation::Read, "EducationalRecord") == Action::Allow);
  CHECK(authorize(acl, "User", Operation::Update, "EducationalRecord") == Action::Deny);
}

TEST_CASE("empty ruleset denies everything") {
  AclRuleSet empty;
  for (auto p : {"Coordinator", "Student", "User"})
    for (auto op : kAllOperations)
      for (auto r : {"EducationalRecord", "RegisterRecord"}) CHECK(authorize(empty, p, op, r) == Action::Deny);
}

TEST_CASE("first match wins") {
  auto acl = network_acl();
  AclRule deny_all{"DenyAll", std::nullopt, {kAllOperations[0], kAllOperations[1], kAllOperations[2], kAllOperations[3]},
                   std::nullopt, Action::Deny, {}};
  acl.rules.insert(acl.rules.begin(), deny_all);
  for (auto p : {"Coordinator", "Student", "User"})
    for (auto op : kAllOperations) CHECK(authorize(acl, p, op, "EducationalRecord") == Action::Deny);

  AclRuleSet shadowed = parse_acl(R"(
rule AllowRead { participant: ANY operation: READ resource: ANY action: ALLOW }
rule DenyStudentRead { participant: "Student" operation: READ resource: ANY action: DENY })",
                                  network_model());
  CHECK(authorize(shadowed, "Student", Operation::Read, "EducationalRecord") == Action::Allow);
}

TEST_CASE("acl formatting round-trips") {
  auto acl = network_acl();
  auto again = parse_acl(format_acl(acl), network_model());
  CHECK(again.rules == acl.rules);
}
