// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <httplib.h>

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bcer/consensus/simulation.hpp"
#include "bcer/model/acl.hpp"
#include "bcer/node/http_service.hpp"
#include "bcer/node/node.hpp"
#include "bcer/node/poc.hpp"
#include "fixture_files.hpp"
#include "network_fixture.hpp"
#include "temp_dir.hpp"

using namespace bcer;
using nlohmann::json;
using bcer::testing::TempDir;

namespace {

/// Outcome of one criterion: pass flag plus a one-line account.
struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  /// Records a failed expectation; keeps the first few messages.
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (pass || failures < 5) detail << (pass ? "" : "; ") << what;
    pass = false;
    ++failures;
  }
  int failures = 0;
};

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::string slurp(const std::filesystem::path& p) { return bcer::testing::read_file(p); }

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

// ---- 1: PoC replication ----------------------------------------------------

void poc_replication(Verdict& v) {
  node::PocOptions options;
  options.records = 10;
  options.validators = 11;
  auto report = node::run_poc(options);
  v.expect(report.committed == 10, "committed " + std::to_string(report.committed) + "/10");
  v.expect(report.chain_length == 11, "chain length " + std::to_string(report.chain_length));
  v.expect(report.chain_valid, "validate_chain failed");
  v.expect(report.verified == 10, "verified " + std::to_string(report.verified) + "/10");
  v.expect(report.quorum == 6, "quorum " + std::to_string(report.quorum));
  v.expect(report.min_endorsements >= 6, "min endorsements " + std::to_string(report.min_endorsements));
  v.expect(report.unauthorized_rejected, "unauthorized attempt accepted");
  v.expect(report.elapsed_ms < 5000, "took " + std::to_string(report.elapsed_ms) + " ms");
  if (v.pass)
    v.detail << report.summary() << "; min endorsements " << report.min_endorsements << ", "
             << static_cast<long long>(report.elapsed_ms) << " ms";
}

// ---- 2: credential rejection over HTTP -------------------------------------

void credential_rejection(Verdict& v) {
  TempDir dir;
  node::InitOptions init;
  init.key_label = "acceptance-credentials";
  node::init_data_dir(dir.path(), init);
  auto n = node::Node::open(dir.path());
  auto coordinator = n->issue_card(identity::Role::Coordinator, "coord-1");
  auto user = n->issue_card(identity::Role::User, "user-1");

  node::HttpService service(*n);
  const int port = service.bind("127.0.0.1", 0);
  std::thread server([&] { service.run(); });
  service.wait_until_ready();
  httplib::Client c("127.0.0.1", port);
  c.set_read_timeout(30);

  auto form = [](const std::optional<identity::IdCard>& card) {
    httplib::MultipartFormDataItems items = {{"title", "Certificate", "", ""},
                                             {"student_ref", "student-1", "", ""},
                                             {"institution", "UNIFACS", "", ""},
                                             {"course", "Computer Science", "", ""},
                                             {"issued_on", "2019-12-01", "", ""}};
    if (card) items.push_back({"card", identity::encode_card(*card), "card.bcid", ""});
    return items;
  };
  auto head = [&] {
    auto r = c.Get("/chain/head");
    return r ? json::parse(r->body).value("hash", "") : std::string("unreachable");
  };

  auto ok = c.Post("/records", form(coordinator));
  v.expect(ok && ok->status == 201, "coordinator registration did not return 201");
  const auto tip = head();
  const auto local_tip = n->records().chain().tip_hash().hex();

  auto as_user = c.Post("/records", form(user));
  v.expect(as_user && as_user->status == 403, "user card: status " + std::to_string(as_user ? as_user->status : -1));
  auto anonymous = c.Post("/records", form(std::nullopt));
  v.expect(anonymous && anonymous->status == 401,
           "no card: status " + std::to_string(anonymous ? anonymous->status : -1));
  v.expect(head() == tip, "tip hash changed after rejected registrations");
  v.expect(n->records().chain().tip_hash().hex() == local_tip, "in-memory tip moved");
  service.stop();
  server.join();

  // and on disk
  v.expect(node::Node::open(dir.path())->records().chain().tip_hash().hex() == tip, "persisted tip moved");
  if (v.pass) v.detail << "user card 403, no card 401, tip " << tip.substr(0, 16) << " unchanged";
}

// ---- 3: tamper evidence ------------------------------------------------------

void tamper_evidence(Verdict& v) {
  constexpr int kChains = 3;
  constexpr int kMutations = 1200;
  std::vector<std::unique_ptr<TempDir>> dirs;
  std::vector<std::string> originals;
  std::vector<std::vector<std::string>> ids;
  for (int i = 0; i < kChains; ++i) {
    dirs.push_back(std::make_unique<TempDir>("bcer2-tamper"));
    node::PocOptions options;
    options.data_dir = dirs.back()->path() / "net";
    options.key_label = "acceptance-tamper-" + std::to_string(i);
    auto report = node::run_poc(options);
    v.expect(report.passed(), "PoC chain " + std::to_string(i) + " did not build");
    originals.push_back(slurp(*options.data_dir / "chain.log"));
    ids.push_back(report.record_ids);
  }
  if (!v.pass) return;

  std::mt19937_64 rng(20191201);
  int invalid_audits = 0, refused_startups = 0, integrity_reads = 0, reads = 0;
  for (int m = 0; m < kMutations; ++m) {
    const int which = m % kChains;
    const auto dir = dirs[which]->path() / "net";
    auto mutated = originals[which];
    const auto pos = rng() % mutated.size();
    const auto old = static_cast<unsigned char>(mutated[pos]);
    mutated[pos] = static_cast<char>((old + 1 + rng() % 255) & 0xff);  // never the same byte
    spit(dir / "chain.log", mutated);

    const std::string where = "mutation " + std::to_string(m) + " (chain " + std::to_string(which) + ", byte " +
                              std::to_string(pos) + ")";
    try {
      auto audited = node::Node::open(dir, node::LoadMode::Audit);
      const bool invalid = !audited->audit().valid;
      invalid_audits += invalid;
      v.expect(invalid, where + ": validate_chain passed");
      // the line holding the byte is the affected record's block
      const auto line = static_cast<std::size_t>(std::count(mutated.begin(), mutated.begin() + pos, '\n'));
      std::vector<std::string> affected = ids[which];
      if (line >= 1 && line <= ids[which].size()) affected = {ids[which][line - 1]};
      for (const auto& id : affected) {
        ++reads;
        const bool flagged =
            audited->records().verify_certificate(id).status == records::VerifyStatus::IntegrityFailure;
        integrity_reads += flagged;
        v.expect(flagged, where + ": record " + id + " not integrity-failure");
      }
    } catch (const std::exception& e) {
      v.expect(false, where + ": threw " + e.what());
    }
    try {
      node::Node::open(dir);
      v.expect(false, where + ": node started on a tampered chain");
    } catch (const node::StoreError&) {
      ++refused_startups;
    } catch (const std::exception& e) {
      v.expect(false, where + ": startup threw " + e.what());
    }
  }
  for (int i = 0; i < kChains; ++i) spit(dirs[i]->path() / "net" / "chain.log", originals[i]);
  v.detail << invalid_audits << "/" << kMutations << " mutations invalid, " << integrity_reads << "/" << reads
           << " affected reads integrity-failure, " << refused_startups << "/" << kMutations << " startups refused";
}

// ---- 4: replica finality -----------------------------------------------------

void replica_finality(Verdict& v) {
  TempDir dir;
  node::PocOptions options;
  options.data_dir = dir / "net";
  auto report = node::run_poc(options);
  v.expect(report.passed(), "PoC run failed");

  // fresh node replays the committed stream from disk
  node::ChainStore store(dir / "net" / "chain.log");
  auto stored = store.load(node::LoadMode::Audit);
  auto fresh = node::Node::open(dir / "net");
  const auto keys = consensus::roster_keys(fresh->records().setup().validator_ids,
                                           fresh->records().setup().validator_keys);
  auto replayed = node::replay(stored.blocks, fresh->info().quorum, keys);
  v.expect(replayed.tip_hash().hex() == report.tip_hash, "replayed tip differs");
  v.expect(fresh->records().chain().tip_hash().hex() == report.tip_hash, "reopened node tip differs");
  v.expect(replayed.size() == 11, "replayed length " + std::to_string(replayed.size()));

  // 100 seeded fault-free simulations
  bcer::testing::TestNetwork net;
  const auto workload = net.workload(4, "finality-");
  int converged = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    consensus::SimConfig config;
    config.validator_count = 11;
    config.rng_seed = seed;
    config.record_events = false;
    auto result = consensus::run_simulation(config, workload, net.ctx());
    std::set<std::string> tips;
    for (const auto& [id, chain] : result.chains) tips.insert(chain.tip_hash().hex());
    const bool ok = result.chains.size() == 11 && tips.size() == 1 && result.committed.size() == workload.size() &&
                    result.best_chain().size() == workload.size() + 1;
    converged += ok;
    v.expect(ok, "seed " + std::to_string(seed) + ": " + std::to_string(tips.size()) + " distinct tips, " +
                     std::to_string(result.committed.size()) + " commits");
  }
  v.detail << "replay tip bit-identical; " << converged << "/100 fault-free runs converged on one tip";
}

// ---- 5: consensus safety -----------------------------------------------------

/// Independent check over the raw commit log: one hash per height.
bool commits_agree(const consensus::SimResult& result) {
  std::map<std::uint64_t, std::set<std::string>> by_height;
  for (const auto& c : result.trace.commits) by_height[c.height].insert(c.block_hash);
  for (const auto& [id, chain] : result.chains)
    for (std::uint64_t h = 0; h < chain.size(); ++h) by_height[h].insert(chain.hash_at(h).hex());
  for (const auto& [h, hashes] : by_height)
    if (hashes.size() > 1) return false;
  return true;
}

void consensus_safety(Verdict& v) {
  bcer::testing::TestNetwork net;
  const auto workload = net.workload(3, "safety-");
  std::mt19937_64 rng(5150);
  constexpr int kRuns = 1000;
  int safe = 0, with_commits = 0;
  double worst_drop = 0;
  std::size_t most_silent = 0;
  for (int run = 0; run < kRuns; ++run) {
    consensus::SimConfig config;
    config.validator_count = 11;
    config.quorum = 6;
    config.rng_seed = rng();
    config.drop_num = rng() % 51;
    config.drop_den = 100;
    config.max_delay_ticks = rng() % 6;
    config.record_events = false;
    const auto silent_count = rng() % 6;
    auto ids = consensus::validator_ids(11);
    std::shuffle(ids.begin(), ids.end(), rng);
    config.silent.insert(ids.begin(), ids.begin() + silent_count);
    worst_drop = std::max(worst_drop, config.drop_num / 100.0);
    most_silent = std::max(most_silent, silent_count);

    auto result = consensus::run_simulation(config, workload, net.ctx());
    const bool ok = commits_agree(result) && result.safe();
    safe += ok;
    with_commits += !result.committed.empty();
    v.expect(ok, "seed " + std::to_string(config.rng_seed) + " committed two hashes at one height");
  }

  int six_silent_commits = 0;
  for (int run = 0; run < 50; ++run) {
    consensus::SimConfig config;
    config.validator_count = 11;
    config.quorum = 6;
    config.rng_seed = rng();
    config.drop_num = rng() % 51;
    config.drop_den = 100;
    config.record_events = false;
    auto ids = consensus::validator_ids(11);
    std::shuffle(ids.begin(), ids.end(), rng);
    config.silent.insert(ids.begin(), ids.begin() + 6);
    auto result = consensus::run_simulation(config, workload, net.ctx());
    six_silent_commits += static_cast<int>(result.committed.size());
    v.expect(result.best_chain().size() == 1, "6 silent validators still committed");
  }
  v.expect(six_silent_commits == 0, std::to_string(six_silent_commits) + " commits with 6 silent");
  v.detail << safe << "/" << kRuns << " runs safe (drop up to " << worst_drop << ", up to " << most_silent
           << " silent, " << with_commits << " with commits); 6 silent: " << six_silent_commits
           << " commits over 50 runs";
}

// ---- 6: ACL matrix -----------------------------------------------------------

/// Observed: does the network refuse `op` for `card` with Unauthorized?
bool observed_denied(records::RecordsNetwork& network, const identity::IdCard& card, model::Operation op,
                     const std::string& target, int& counter) {
  try {
    switch (op) {
      case model::Operation::Create: {
        records::RegistrationRequest req;
        req.record.record_id = "acl-probe-" + std::to_string(counter++);
        req.record.title = "Probe";
        req.record.student_ref = "student-1";
        req.record.institution = "UNIFACS";
        req.record.course = "Computer Science";
        req.record.issued_on = "2019-12-01";
        req.card = card;
        network.register_certificate(req);
        break;
      }
      case model::Operation::Read: network.read_record(target, card); break;
      case model::Operation::Update: {
        records::UpdateRequest u;
        u.record_id = target;
        u.title = "Renamed " + std::to_string(counter++);
        u.card = card;
        network.update_record(u);
        break;
      }
      case model::Operation::Delete: network.delete_record(target, card); break;
    }
  } catch (const records::RecordsError& e) {
    return e.code() == records::RecordsError::Code::Unauthorized;
  }
  return false;
}

void acl_matrix(Verdict& v) {
  bcer::testing::TestNetwork net;
  auto setup = [&](model::AclRuleSet acl) {
    records::NetworkSetup s;
    s.model = net.model;
    s.acl = std::move(acl);
    s.authority_key = net.authority.public_key;
    s.validator_ids = consensus::validator_ids(11);
    s.validator_keys = consensus::validator_keypairs(11);
    return s;
  };
  records::RecordsNetwork network(setup(net.acl), ledger::Chain(ledger::make_genesis("unifacs-net", 1'700'000'000'000)));
  records::RegistrationRequest seed;
  seed.record.record_id = "acl-target";
  seed.record.title = "Target";
  seed.record.student_ref = "student-1";
  seed.record.institution = "UNIFACS";
  seed.record.course = "Computer Science";
  seed.record.issued_on = "2019-12-01";
  seed.card = net.coordinator;
  network.register_certificate(seed);

  int counter = 0, cells = 0, agree = 0;
  std::ostringstream matrix;
  for (const auto* card : {&net.coordinator, &net.user}) {
    for (auto op : model::kAllOperations) {
      const bool denied = observed_denied(network, *card, op, "acl-target", counter);
      const bool expect_deny =
          model::authorize(net.acl, card->participant_type, op, "EducationalRecord") == model::Action::Deny;
      ++cells;
      agree += denied == expect_deny;
      v.expect(denied == expect_deny, card->participant_type + " " + model::to_string(op) + " observed " +
                                          (denied ? "deny" : "allow"));
      matrix << " " << card->participant_type[0] << ":" << model::to_string(op)[0] << "=" << (denied ? "D" : "A");
    }
  }

  // empty ruleset over the same chain: everything denied, observed and computed
  records::RecordsNetwork locked(setup(model::AclRuleSet{}), network.chain(), net.cards);
  int empty_denied = 0;
  for (const auto* card : {&net.coordinator, &net.user}) {
    for (auto op : model::kAllOperations) {
      const bool denied = observed_denied(locked, *card, op, "acl-target", counter);
      const bool computed =
          model::authorize(model::AclRuleSet{}, card->participant_type, op, "EducationalRecord") == model::Action::Deny;
      empty_denied += denied && computed;
      v.expect(denied && computed, "empty ruleset allowed " + card->participant_type + " " + model::to_string(op));
    }
  }
  v.detail << agree << "/" << cells << " cells match authorize (" << matrix.str().substr(1) << "); empty ruleset denied "
           << empty_denied << "/8";
}

// ---- 7: parser suite ---------------------------------------------------------

void parser_suite(Verdict& v) {
  using bcer::testing::files_in;
  using bcer::testing::fixture_dir;
  auto valid = files_in(fixture_dir() / "models" / "valid");
  auto invalid = files_in(fixture_dir() / "models" / "invalid");
  v.expect(valid.size() == 20, std::to_string(valid.size()) + " valid fixtures");
  v.expect(invalid.size() == 20, std::to_string(invalid.size()) + " invalid fixtures");

  int round_trips = 0;
  for (const auto& path : valid) {
    try {
      auto first = model::parse_model(slurp(path));
      auto second = model::parse_model(model::format_model(first));
      round_trips += second == first;
      v.expect(second == first, path.filename().string() + " does not round-trip");
    } catch (const model::ModelError& e) {
      v.expect(false, path.filename().string() + ": " + e.what());
    }
  }

  int positioned = 0;
  for (const auto& path : invalid) {
    try {
      model::parse_model(slurp(path));
      v.expect(false, path.filename().string() + " parsed");
    } catch (const model::ModelError& e) {
      const bool ok = e.pos().line >= 1 && e.pos().column >= 1;
      positioned += ok;
      v.expect(ok, path.filename().string() + " error has no position");
    }
  }

  std::mt19937_64 rng(77);
  int parsed = 0, rejected = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string input = slurp(valid[rng() % valid.size()]);
    if (i % 2) {
      for (int k = 0, n = 1 + static_cast<int>(rng() % 6); k < n && !input.empty(); ++k) {
        const auto pos = rng() % input.size();
        switch (rng() % 3) {
          case 0: input[pos] = static_cast<char>(rng() & 0xff); break;
          case 1: input.erase(pos, 1 + rng() % 8); break;
          default: input.insert(pos, 1, "{}\"-o>.,:\n"[rng() % 10]); break;
        }
      }
    } else {
      input.resize(rng() % 120);
      for (auto& c : input) c = static_cast<char>(rng() & 0xff);
    }
    try {
      auto m = model::parse_model(input);
      v.expect(model::parse_model(model::format_model(m)) == m, "fuzz case " + std::to_string(i) + " round-trip");
      ++parsed;
    } catch (const model::ModelError& e) {
      v.expect(e.pos().line >= 1, "fuzz case " + std::to_string(i) + " unpositioned error");
      ++rejected;
    } catch (const std::exception& e) {
      v.expect(false, "fuzz case " + std::to_string(i) + " threw " + e.what());
    }
  }
  v.detail << round_trips << "/20 round-trip, " << positioned << "/20 positioned errors, 10000 fuzz inputs ("
           << parsed << " parsed, " << rejected << " rejected) without a crash";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"1 PoC replication", poc_replication},
      {"2 credential rejection", credential_rejection},
      {"3 tamper evidence", tamper_evidence},
      {"4 replica finality", replica_finality},
      {"5 consensus safety", consensus_safety},
      {"6 ACL matrix", acl_matrix},
      {"7 parser suite", parser_suite},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      run(v);
    } catch (const std::exception& e) {
      v.expect(false, std::string("threw: ") + e.what());
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << v.detail.str() << " ["
              << static_cast<long long>(ms_since(start)) << " ms]" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : std::string("all criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
