#include <doctest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bcer/node/node.hpp"
#include "bcer/node/poc.hpp"
#include "chain_fixtures.hpp"
#include "temp_dir.hpp"

using namespace bcer;
using namespace bcer::node;
using bcer::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

InitOptions small_network() {
  InitOptions o;
  o.validators = 4;
  o.key_label = "node-test";
  o.created_ms = 1'700'000'000'000;
  return o;
}

records::RegistrationRequest request(const identity::IdCard& card, int i) {
  records::RegistrationRequest req;
  req.record.title = "Certificate " + std::to_string(i);
  req.record.student_ref = "student-" + std::to_string(i);
  req.record.institution = "UNIFACS";
  req.record.course = "Computer Science";
  req.record.issued_on = "2019-12-01";
  req.document = to_bytes("doc " + std::to_string(i));
  req.card = card;
  return req;
}

/// Initialized data dir holding `n` committed records.
void populate(const std::filesystem::path& dir, int n) {
  init_data_dir(dir, small_network());
  auto node = Node::open(dir);
  auto card = node->issue_card(identity::Role::Coordinator, "coord");
  for (int i = 0; i < n; ++i) node->records().register_certificate(request(card, i));
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("chain store replays persisted blocks to the same tip") {
  TempDir dir;
  auto validators = bcer::testing::make_validators(11);
  auto chain = bcer::testing::build_chain(10, validators, 6);
  ChainStore store(dir / "chain.log");
  CHECK(store.load(LoadMode::Recover).blocks.empty());
  for (const auto& b : chain.blocks()) store.persist_block(b);

  ChainStore again(dir / "chain.log");
  auto stored = again.load(LoadMode::Recover);
  REQUIRE(stored.blocks.size() == 11);
  auto replayed = replay(stored.blocks, 6, bcer::testing::keys_of(validators));
  CHECK(replayed.tip_hash() == chain.tip_hash());
  CHECK(again.next_height() == 11);
}

TEST_CASE("chain store rejects out-of-order appends") {
  TempDir dir;
  auto validators = bcer::testing::make_validators(11);
  auto chain = bcer::testing::build_chain(8, validators, 6);
  ChainStore store(dir / "chain.log");
  store.load(LoadMode::Recover);
  for (std::size_t h = 0; h <= 5; ++h) store.persist_block(chain.at(h));
  try {
    store.persist_block(chain.at(7));
    FAIL("expected OutOfOrder");
  } catch (const StoreError& e) {
    CHECK(e.code() == StoreError::Code::OutOfOrder);
  }
  CHECK(store.next_height() == 6);
}

TEST_CASE("init writes a usable data directory and refuses to overwrite it") {
  TempDir dir;
  auto info = init_data_dir(dir.path(), small_network());
  CHECK(info.quorum == 3);
  CHECK(info.validator_ids.size() == 4);
  for (auto f : {"network.json", "roster.json", "authority.key", "network.model", "network.acl", "cards.log",
                 "chain.log"})
    CHECK(std::filesystem::exists(dir / f));
  auto perms = std::filesystem::status(dir / "authority.key").permissions();
  CHECK((perms & std::filesystem::perms::group_read) == std::filesystem::perms::none);
  CHECK_THROWS_AS(init_data_dir(dir.path(), small_network()), NodeError);

  auto node = Node::open(dir.path());
  CHECK(node->records().chain().size() == 1);
  CHECK(node->records().chain().hash_at(0) == info.genesis_hash);
}

TEST_CASE("keys derived from a label are reproducible") {
  TempDir a, b;
  auto ia = init_data_dir(a.path(), small_network());
  auto ib = init_data_dir(b.path(), small_network());
  CHECK(ia.genesis_hash == ib.genesis_hash);
  CHECK(ia.validator_keys == ib.validator_keys);
  CHECK(ia.authority_key == ib.authority_key);
}

TEST_CASE("opening a missing data directory explains itself") {
  TempDir dir;
  CHECK_THROWS_AS(Node::open(dir / "nothing-here"), NodeError);
}

TEST_CASE("data dir resolution prefers flag, then environment, then default") {
  ::unsetenv(kDataDirEnv);
  CHECK(resolve_data_dir(std::nullopt) == kDefaultDataDir);
  ::setenv(kDataDirEnv, "/tmp/from-env", 1);
  CHECK(resolve_data_dir(std::nullopt) == "/tmp/from-env");
  CHECK(resolve_data_dir(std::filesystem::path("/tmp/flag")) == "/tmp/flag");
  ::unsetenv(kDataDirEnv);
}

TEST_CASE("committed records and cards survive a restart") {
  TempDir dir;
  populate(dir.path(), 5);
  crypto::HashDigest tip;
  {
    auto node = Node::open(dir.path());
    CHECK(node->records().chain().size() == 6);
    tip = node->records().chain().tip_hash();
    CHECK(node->audit().valid);
    // card from the previous session is still enrolled
    CHECK(node->records().cards().size() == 1);
  }
  auto node = Node::open(dir.path());
  CHECK(node->records().chain().tip_hash() == tip);
  for (const auto& s : node->records().list_records({})) {
    auto v = node->records().verify_certificate(s.record.record_id);
    CHECK(v.status == records::VerifyStatus::Authentic);
    CHECK(v.endorsement_count >= 3);
  }
}

TEST_CASE("a flipped byte stops startup and names the height") {
  TempDir dir;
  populate(dir.path(), 4);
  const auto original = slurp(dir / "chain.log");
  auto lines = lines_of(original);
  REQUIRE(lines.size() == 5);

  for (std::size_t h = 0; h < lines.size(); ++h) {
    for (std::size_t pos : {std::size_t{0}, lines[h].size() / 2, lines[h].size() - 1}) {
      auto mutated = lines;
      mutated[h][pos] = mutated[h][pos] == '0' ? '1' : '0';
      std::string content;
      for (auto& l : mutated) content += l + "\n";
      spit(dir / "chain.log", content);
      CAPTURE(h);
      CAPTURE(pos);
      try {
        Node::open(dir.path());
        FAIL("startup accepted a damaged chain");
      } catch (const StoreError& e) {
        CHECK(e.code() == StoreError::Code::Corrupt);
        REQUIRE(e.height().has_value());
        CHECK(*e.height() == h);
        CHECK(std::string(e.what()).find("height " + std::to_string(h)) != std::string::npos);
      }
      // the damaged file is left as found
      CHECK(slurp(dir / "chain.log") == content);

      auto audited = Node::open(dir.path(), LoadMode::Audit);
      CHECK_FALSE(audited->audit().valid);
      CHECK(audited->records().verify_certificate("anything").status == records::VerifyStatus::IntegrityFailure);
    }
  }
  spit(dir / "chain.log", original);
  CHECK(Node::open(dir.path())->audit().valid);
}

TEST_CASE("a torn final line is dropped at every cut point") {
  TempDir dir;
  populate(dir.path(), 3);
  const auto original = slurp(dir / "chain.log");
  auto lines = lines_of(original);
  const auto keep = original.size() - lines.back().size() - 1;

  for (std::size_t cut = 0; cut <= lines.back().size(); ++cut) {
    spit(dir / "chain.log", original.substr(0, keep + cut));
    CAPTURE(cut);
    auto node = Node::open(dir.path());
    CHECK(node->records().chain().size() == 3);
    CHECK(node->dropped_torn_tail() == (cut > 0));
    CHECK(slurp(dir / "chain.log") == original.substr(0, keep));
  }
  // the node keeps going after recovery
  auto node = Node::open(dir.path());
  auto card = node->issue_card(identity::Role::Coordinator, "coord-2");
  node->records().register_certificate(request(card, 99));
  CHECK(Node::open(dir.path())->records().chain().size() == 4);
}

TEST_CASE("a garbage final line is corruption, not a torn tail") {
  TempDir dir;
  populate(dir.path(), 2);
  const auto original = slurp(dir / "chain.log");
  spit(dir / "chain.log", original + "zz-not-hex");
  CHECK_THROWS_AS(Node::open(dir.path()), StoreError);
  spit(dir / "chain.log", original + "05\n");
  CHECK_THROWS_AS(Node::open(dir.path()), StoreError);
}

TEST_CASE("a genesis swapped for another network's is refused") {
  TempDir a, b;
  init_data_dir(a.path(), small_network());
  auto other = small_network();
  other.network_id = "other-net";
  init_data_dir(b.path(), other);
  std::filesystem::copy_file(b / "chain.log", a / "chain.log", std::filesystem::copy_options::overwrite_existing);
  try {
    Node::open(a.path());
    FAIL("foreign genesis accepted");
  } catch (const StoreError& e) {
    CHECK(e.height() == std::optional<std::uint64_t>(0));
  }
  CHECK_FALSE(Node::open(a.path(), LoadMode::Audit)->audit().valid);
}

TEST_CASE("killing a writer mid-run leaves a recoverable chain") {
  TempDir dir;
  init_data_dir(dir.path(), small_network());
  for (int attempt = 0; attempt < 3; ++attempt) {
    pid_t pid = ::fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
      try {
        auto node = Node::open(dir.path());
        auto card = node->issue_card(identity::Role::Coordinator, "coord-" + std::to_string(attempt));
        for (int i = 0;; ++i) node->records().register_certificate(request(card, attempt * 1000 + i));
      } catch (...) {
      }
      ::_exit(1);
    }
    ::usleep(150'000 + attempt * 70'000);
    ::kill(pid, SIGKILL);
    int status = 0;
    ::waitpid(pid, &status, 0);
    CHECK(WIFSIGNALED(status));

    auto node = Node::open(dir.path());
    CHECK(node->audit().valid);
    CHECK(node->records().chain().size() >= 1);
  }
}

TEST_CASE("proof of concept run passes end to end") {
  PocOptions options;
  options.records = 10;
  options.validators = 11;
  auto report = run_poc(options);
  CHECK(report.passed());
  CHECK(report.summary() == "10/10 committed, chain valid, 10/10 verified, unauthorized attempt rejected");
  CHECK(report.chain_length == 11);
  CHECK(report.quorum == 6);
  CHECK(report.min_endorsements >= 6);
  CHECK(report.problems.empty());
  CHECK_FALSE(std::filesystem::exists(report.data_dir));
}

TEST_CASE("a block claiming a far-off height reads as integrity failure") {
  TempDir dir;
  populate(dir.path(), 3);
  auto lines = lines_of(slurp(dir / "chain.log"));
  auto block = ledger::Block::decode(from_hex(lines[2]));
  const auto id = block.reg->register_id;
  block.header.height = 1'048'586;
  lines[2] = to_hex(block.encode());
  std::string content;
  for (auto& l : lines) content += l + "\n";
  spit(dir / "chain.log", content);

  CHECK_THROWS_AS(Node::open(dir.path()), StoreError);
  auto audited = Node::open(dir.path(), LoadMode::Audit);
  auto v = audited->records().verify_certificate(id);
  CHECK(v.status == records::VerifyStatus::IntegrityFailure);
  CHECK(v.height == std::optional<std::uint64_t>(2));
  for (const auto& s : audited->records().list_records({})) CHECK(s.height <= 3);
}
