#include <random>

#include "bcer/model/model.hpp"
#include "doctest.h"
#include "fixture_files.hpp"

using namespace bcer::model;
using bcer::testing::files_in;
using bcer::testing::fixture_dir;
using bcer::testing::read_file;

namespace {

ModelError parse_error(std::string_view source) {
  try {
    parse_model(source);
  } catch (const ModelError& e) {
    return e;
  }
  FAIL("parse unexpectedly succeeded");
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("asset with identifying field") {
  auto m = parse_model(R"(namespace org.unifacs
asset EducationalRecord identified by recordId {
  o String recordId
})");
  CHECK(m.ns == "org.unifacs");
  REQUIRE(m.assets.size() == 1);
  CHECK(m.assets[0].name == "EducationalRecord");
  CHECK(m.assets[0].identified_by == "recordId");
  CHECK(m.assets[0].pos == SourcePos{2, 1});
  REQUIRE(m.assets[0].fields.size() == 1);
  CHECK(m.assets[0].fields[0].pos == SourcePos{3, 3});
}

TEST_CASE("empty input expects a namespace at 1:1") {
  auto e = parse_error("");
  CHECK(e.kind() == ModelError::Kind::Syntax);
  CHECK(e.pos() == SourcePos{1, 1});
  CHECK(e.message().find("expected namespace") != std::string::npos);
  CHECK(e.expected() == std::set<std::string>{"namespace"});
}

TEST_CASE("reference to an undeclared type names the type") {
  auto e = parse_error("namespace n\nasset A identified by id {\n  o String id\n  --> Student owner\n}\n");
  CHECK(e.kind() == ModelError::Kind::UnknownType);
  CHECK(e.message().find("Student") != std::string::npos);
  CHECK(e.pos() == SourcePos{4, 3});
}

TEST_CASE("syntax errors list the expected tokens") {
  auto e = parse_error("namespace n\nasset A identified by id {\n  o Float id\n}\n");
  CHECK(e.kind() == ModelError::Kind::Syntax);
  CHECK(e.pos() == SourcePos{3, 5});
  CHECK(e.expected() == std::set<std::string>{"Boolean", "DateTime", "Integer", "String"});
}

TEST_CASE("minimal model formats to a single line") {
  CHECK(format_model(parse_model("namespace org.example")) == "namespace org.example\n");
}

TEST_CASE("valid fixtures round-trip through the formatter") {
  auto files = files_in(fixture_dir() / "models" / "valid");
  REQUIRE(files.size() == 20);
  for (const auto& path : files) {
    CAPTURE(path.filename().string());
    auto first = parse_model(read_file(path));
    auto text = format_model(first);
    auto second = parse_model(text);
    CHECK(second == first);
    CHECK(format_model(second) == text);
  }
}

TEST_CASE("invalid fixtures yield positioned errors") {
  auto files = files_in(fixture_dir() / "models" / "invalid");
  REQUIRE(files.size() == 20);
  for (const auto& path : files) {
    CAPTURE(path.filename().string());
    auto source = read_file(path);
    try {
      parse_model(source);
      FAIL("expected a ModelError");
    } catch (const ModelError& e) {
      CHECK(e.pos().line >= 1);
      CHECK(e.pos().column >= 1);
      CHECK(std::string(e.what()).rfind(to_string(e.pos()) + ": ", 0) == 0);
    }
  }
}

TEST_CASE("semantic error kinds") {
  auto kind_of = [](const char* name) {
    return parse_error(read_file(fixture_dir() / "models" / "invalid" / name)).kind();
  };
  CHECK(kind_of("11_duplicate_declaration.model") == ModelError::Kind::DuplicateDeclaration);
  CHECK(kind_of("12_duplicate_field.model") == ModelError::Kind::DuplicateField);
  CHECK(kind_of("13_unknown_reference.model") == ModelError::Kind::UnknownType);
  CHECK(kind_of("14_identifier_not_declared.model") == ModelError::Kind::MissingIdentifier);
  CHECK(kind_of("15_identifier_wrong_type.model") == ModelError::Kind::MissingIdentifier);
  CHECK(kind_of("18_reserved_type_name.model") == ModelError::Kind::ReservedName);
}

TEST_CASE("structural equality ignores positions") {
  auto a = parse_model("namespace n asset A identified by id { o String id }");
  auto b = parse_model("namespace n\n\n\nasset A identified by id {\n\n  o String id\n}");
  CHECK(a == b);
  auto c = parse_model("namespace n asset A identified by id { o String id o Integer x optional }");
  CHECK_FALSE(a == c);
}

TEST_CASE("type lookup accepts namespace-qualified names") {
  auto m = parse_model(read_file(fixture_dir() / ".." / ".." / "fixtures" / "network.model"));
  CHECK(m.find("EducationalRecord") != nullptr);
  CHECK(m.find("org.unifacs.records.EducationalRecord") != nullptr);
  CHECK(m.find("EducationalRecord", DeclKind::Participant) == nullptr);
  CHECK(m.find("Coordinator", DeclKind::Participant) != nullptr);
}

TEST_CASE("parser is total on random input") {
  std::mt19937_64 rng(1337);
  const std::string alphabet = "namespace asset participant identified by o String Integer --> { } , : . \" / \n";
  const auto seeds = files_in(fixture_dir() / "models" / "valid");
  int parsed = 0;
  int rejected = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string input;
    switch (i % 3) {
      case 0: {  // raw bytes
        input.resize(rng() % 80);
        for (auto& c : input) c = static_cast<char>(rng() & 0xff);
        break;
      }
      case 1: {  // token soup
        int n = static_cast<int>(rng() % 40);
        for (int k = 0; k < n; ++k) input += alphabet.substr(rng() % alphabet.size(), 1 + rng() % 8);
        break;
      }
      default: {  // mutated fixture
        input = read_file(seeds[rng() % seeds.size()]);
        int edits = 1 + static_cast<int>(rng() % 4);
        for (int k = 0; k < edits && !input.empty(); ++k) {
          auto pos = rng() % input.size();
          switch (rng() % 3) {
            case 0: input[pos] = static_cast<char>(rng() & 0xff); break;
            case 1: input.erase(pos, 1 + rng() % 5); break;
            default: input.insert(pos, 1, "{}\"-o>"[rng() % 6]); break;
          }
        }
      }
    }
    try {
      auto m = parse_model(input);
      CHECK(parse_model(format_model(m)) == m);
      ++parsed;
    } catch (const ModelError& e) {
      REQUIRE(e.pos().line >= 1);
      ++rejected;
    }
  }
  CHECK(parsed + rejected == 10000);
}
