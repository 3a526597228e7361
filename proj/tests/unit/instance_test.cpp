#include "bcer/model/instance.hpp"
#include "doctest.h"
#include "fixture_files.hpp"

using namespace bcer::model;
using bcer::ledger::Map;
using bcer::ledger::Value;

namespace {

const ModelDefinition& network_model() {
  static const ModelDefinition m =
      parse_model(bcer::testing::read_file(bcer::testing::fixture_dir() / ".." / ".." / "fixtures" / "network.model"));
  return m;
}

Map good_record() {
  return Map{
      {"record_id", "0f1e2d3c4b5a69788796a5b4c3d2e1f0"},
      {"kind", "certificate"},
      {"title", "Certificate of Completion"},
      {"student_ref", "student-01"},
      {"institution", "UNIFACS"},
      {"course", "Computer Science"},
      {"issued_on", "2018-12-14"},
      {"issuer_card_id", "card-01"},
      {"document_hash", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"},
  };
}

}  // namespace

TEST_CASE("well-formed record validates") { CHECK(validate_instance(network_model(), "EducationalRecord", good_record()).empty()); }

TEST_CASE("missing identifying field") {
  auto model = parse_model("namespace n asset EducationalRecord identified by recordId { o String recordId o String title }");
  auto errors = validate_instance(model, "EducationalRecord", Map{{"title", "x"}});
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].code == InstanceError::Code::MissingField);
  CHECK(errors[0].message == "recordId required");

  auto empty = validate_instance(model, "EducationalRecord", Map{{"recordId", ""}, {"title", "x"}});
  REQUIRE(empty.size() == 1);
  CHECK(empty[0].code == InstanceError::Code::EmptyIdentifier);
  CHECK(empty[0].message == "recordId required");
}

TEST_CASE("type mismatches") {
  auto model = parse_model(
      "namespace n asset A identified by id { o String id o Integer n o Boolean b o DateTime t optional --> A link }");
  auto check_one = [&](Map m, const char* field) {
    auto errors = validate_instance(model, "A", m);
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].code == InstanceError::Code::TypeMismatch);
    CHECK(errors[0].field == field);
  };
  check_one(Map{{"id", "a"}, {"n", "12"}, {"b", 0}, {"link", "x"}}, "n");
  check_one(Map{{"id", "a"}, {"n", 1}, {"b", 2}, {"link", "x"}}, "b");
  check_one(Map{{"id", "a"}, {"n", 1}, {"b", 1}, {"t", "yesterday"}, {"link", "x"}}, "t");
  check_one(Map{{"id", "a"}, {"n", 1}, {"b", 1}, {"link", 5}}, "link");
  CHECK(validate_instance(model, "A", Map{{"id", "a"}, {"n", -3}, {"b", 1}, {"t", "2020-02-29T10:00:00.5Z"}, {"link", "a"}}).empty());
}

TEST_CASE("unknown fields and types") {
  auto m = good_record();
  m.emplace("grade", "A+");
  auto errors = validate_instance(network_model(), "EducationalRecord", m);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].code == InstanceError::Code::UnknownField);
  CHECK(validate_instance(network_model(), "Transcript", good_record())[0].code == InstanceError::Code::UnknownType);
  CHECK(validate_instance(network_model(), "EducationalRecord", Value(7))[0].code == InstanceError::Code::NotARecord);
}

TEST_CASE("iso8601 dates") {
  CHECK(is_iso8601("2018-12-14"));
  CHECK(is_iso8601("2016-02-29"));
  CHECK_FALSE(is_iso8601("2018-02-29"));
  CHECK_FALSE(is_iso8601("2018-13-01"));
  CHECK(is_iso8601("2018-12-14T08:30:00Z"));
  CHECK_FALSE(is_iso8601("2018-12-14T08:30:00"));
  CHECK_FALSE(is_iso8601("2018-12-14T24:00:00Z"));
  CHECK_FALSE(is_iso8601("18-12-14"));
}
