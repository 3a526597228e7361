// bcer2: operator command line for a BcER² node.

#include <signal.h>
#include <sys/stat.h>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "bcer/node/http_service.hpp"
#include "bcer/node/node.hpp"
#include "bcer/node/poc.hpp"

using namespace bcer;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kUnauthorized = 2, kNotFound = 3, kIntegrity = 4, kOther = 5 };

/// A failure on its way to an exit code.
struct CliError {
  int exit_code;
  std::string code;
  std::string message;
};

int exit_for(records::RecordsError::Code code) {
  using C = records::RecordsError::Code;
  switch (code) {
    case C::InvalidCard:
    case C::Unauthorized: return kUnauthorized;
    case C::NotFound: return kNotFound;
    case C::IntegrityFailure: return kIntegrity;
    default: return kOther;
  }
}

int exit_for_http(int status, const std::string& code) {
  if (status == 401 || status == 403) return kUnauthorized;
  if (status == 404) return kNotFound;
  if (code == "integrity-failure") return kIntegrity;
  return kOther;
}

struct Globals {
  std::string data_dir;
  std::string node_url;
  bool json_mode = false;

  fs::path dir() const {
    return node::resolve_data_dir(data_dir.empty() ? std::nullopt : std::optional<fs::path>(data_dir));
  }
  /// Human-readable output: stdout normally, stderr in --json mode.
  std::ostream& human() const { return json_mode ? std::cerr : std::cout; }
  void emit(const json& j) const {
    if (json_mode) std::cout << j.dump() << std::endl;
  }
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kOther, "io", "cannot read " + path.string()};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

httplib::Client client_for(const std::string& url) {
  httplib::Client c(url);
  if (!c.is_valid()) throw CliError{kUsage, "usage", "unsupported node url " + url};
  c.set_connection_timeout(5);
  c.set_read_timeout(60);
  return c;
}

json response_json(const httplib::Result& r, const std::string& url) {
  if (!r) throw CliError{kOther, "unreachable", "cannot reach node at " + url + ": " + httplib::to_string(r.error())};
  json body = json::parse(r->body, nullptr, false);
  if (body.is_discarded()) throw CliError{kOther, "bad-response", "node returned non-JSON (" + std::to_string(r->status) + ")"};
  return body;
}

[[noreturn]] void throw_http(int status, const json& body) {
  const auto code = body.value("code", body.value("status", "error"));
  throw CliError{exit_for_http(status, code), code, body.value("message", code)};
}

// ---- init ----------------------------------------------------------------

struct InitArgs {
  node::InitOptions options;
  std::string key_label;
};

void cmd_init(const Globals& g, InitArgs& a) {
  if (!a.key_label.empty()) a.options.key_label = a.key_label;
  const auto dir = g.dir();
  node::NetworkInfo info;
  try {
    info = node::init_data_dir(dir, a.options);
  } catch (const node::NodeError& e) {
    throw CliError{kOther, "init-failed", e.what()};
  }
  g.human() << "initialized " << info.network_id << " in " << dir.string() << "\n"
            << "  validators: " << info.validator_ids.size() << ", quorum " << info.quorum << "\n"
            << "  genesis:    " << info.genesis_hash.hex() << "\n";
  g.emit({{"network_id", info.network_id},
          {"data_dir", dir.string()},
          {"validators", info.validator_ids.size()},
          {"quorum", info.quorum},
          {"genesis_hash", info.genesis_hash.hex()}});
}

// ---- card issue ----------------------------------------------------------

struct CardArgs {
  std::string role;
  std::string ref;
  std::string out;
};

void cmd_card_issue(const Globals& g, const CardArgs& a) {
  const auto role = identity::role_from_string(a.role);
  auto node = node::Node::open(g.dir());
  auto card = node->issue_card(role, a.ref.empty() ? a.role : a.ref);
  const fs::path out = a.out.empty() ? fs::path(a.role + "-" + card.card_id.substr(0, 8) + ".bcid") : fs::path(a.out);
  {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw CliError{kOther, "io", "cannot write " + out.string()};
    f << identity::encode_card(card) << "\n";
  }
  ::chmod(out.c_str(), S_IRUSR | S_IWUSR);  // holds the secret key
  g.human() << "issued " << identity::to_string(card.role) << " card " << card.card_id << " -> " << out.string()
            << "\n";
  g.emit({{"card_id", card.card_id},
          {"role", identity::to_string(card.role)},
          {"participant_ref", card.participant_ref},
          {"file", out.string()}});
}

// ---- serve ---------------------------------------------------------------

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
};

void cmd_serve(const Globals& g, const ServeArgs& a) {
  // block termination signals before any thread starts; one thread waits for them
  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  auto node = node::Node::open(g.dir());
  if (node->dropped_torn_tail()) g.human() << "recovered: dropped an incomplete final block write\n";
  node::HttpService service(*node);
  int port = 0;
  try {
    port = service.bind(a.host, a.port);
  } catch (const node::NodeError& e) {
    throw CliError{kOther, "port-in-use", e.what()};
  }
  const auto url = "http://" + a.host + ":" + std::to_string(port);
  g.human() << "serving " << node->info().network_id << " at height " << node->records().chain().tip_height()
            << " on " << url << "\n"
            << std::flush;
  g.emit({{"listening", url},
          {"network_id", node->info().network_id},
          {"height", node->records().chain().tip_height()}});

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&sigs, &sig);
    service.stop();
  });
  service.run();
  // run() can also end on its own; wake the waiter
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  g.human() << "stopped\n";
}

// ---- record --------------------------------------------------------------

struct RegisterArgs {
  std::string card;
  std::string record_id;
  std::string kind = "certificate";
  std::string title;
  std::string student;
  std::string institution;
  std::string course;
  std::string issued_on;
  std::string document;
};

void cmd_register(const Globals& g, const RegisterArgs& a) {
  identity::IdCard card;
  try {
    card = identity::decode_card_unverified(read_file(a.card));
  } catch (const identity::CardError& e) {
    throw CliError{kUnauthorized, "invalid-card", std::string("cannot read card: ") + e.what()};
  }
  records::EducationalRecord rec;
  rec.record_id = a.record_id.empty() ? records::new_record_id() : a.record_id;
  auto kind = records::record_kind_from_string(a.kind);
  if (!kind) throw CliError{kUsage, "usage", "--kind must be certificate or diploma"};
  rec.kind = *kind;
  rec.title = a.title;
  rec.student_ref = a.student;
  rec.institution = a.institution;
  rec.course = a.course;
  rec.issued_on = a.issued_on;
  std::optional<Bytes> document;
  if (!a.document.empty()) document = to_bytes(read_file(a.document));

  records::RegistrationOutcome outcome;
  if (!g.node_url.empty()) {
    // only the public card and a detached signature leave this machine
    if (!card.has_secret()) throw CliError{kUnauthorized, "invalid-card", "card file holds no secret key"};
    auto completed = records::RecordsNetwork::complete_record(rec, card.public_copy(), document);
    auto sig = identity::sign(card, records::RecordsNetwork::registration_signing_bytes(completed));
    httplib::MultipartFormDataItems form = {{"record_id", rec.record_id, "", ""},
                                            {"kind", records::to_string(rec.kind), "", ""},
                                            {"title", rec.title, "", ""},
                                            {"student_ref", rec.student_ref, "", ""},
                                            {"institution", rec.institution, "", ""},
                                            {"course", rec.course, "", ""},
                                            {"issued_on", rec.issued_on, "", ""},
                                            {"card", identity::encode_card(card.public_copy()), "card.bcid", ""},
                                            {"signature", sig.hex(), "", ""}};
    if (document) form.push_back({"document", std::string(document->begin(), document->end()), "document", ""});
    auto c = client_for(g.node_url);
    auto r = c.Post("/records", form);
    auto body = response_json(r, g.node_url);
    if (r->status != 201) throw_http(r->status, body);
    outcome = {body.at("record_id"), body.at("height"), body.at("block_hash")};
  } else {
    auto node = node::Node::open(g.dir());
    records::RegistrationRequest req;
    req.record = rec;
    req.card = card;
    req.document = document;
    outcome = node->records().register_certificate(req);
  }
  g.human() << "registered " << outcome.record_id << " at height " << outcome.height << "\n"
            << "  block: " << outcome.block_hash << "\n";
  g.emit({{"record_id", outcome.record_id}, {"height", outcome.height}, {"block_hash", outcome.block_hash}});
}

void print_verification(std::ostream& out, const json& v) {
  out << v.value("status", "?") << "\n";
  if (v.contains("record")) {
    const auto& r = v["record"];
    out << "  " << r.value("kind", "") << ": " << r.value("title", "") << "\n"
        << "  student " << r.value("student_ref", "") << ", " << r.value("institution", "") << ", "
        << r.value("course", "") << "\n";
  }
  if (!v.value("issued_on", "").empty()) out << "  issued on " << v["issued_on"].get<std::string>() << " by card "
                                             << v.value("issuer_card_id", "") << "\n";
  if (v.contains("height") && !v["height"].is_null())
    out << "  block " << v["height"] << " " << v.value("block_hash", "") << ", " << v.value("endorsement_count", 0)
        << " endorsements\n";
  if (v.contains("history")) {
    out << "  provenance:\n";
    for (const auto& h : v["history"])
      out << "    height " << h["height"] << "  " << h.value("kind", "") << "  card " << h.value("submitter_card_id", "")
          << "  at " << h["timestamp_ms"] << "\n";
  }
  if (v.contains("detail")) out << "  " << v["detail"].get<std::string>() << "\n";
  if (v.contains("matches")) out << (v["matches"].get<bool>() ? "  document matches ledger hash\n"
                                                              : "  document does NOT match ledger hash\n");
}

void cmd_verify(const Globals& g, const std::string& id, const std::string& document_file) {
  json v;
  if (!g.node_url.empty()) {
    auto c = client_for(g.node_url);
    auto r = document_file.empty() ? c.Get("/verify/" + id)
                                   : c.Post("/verify/" + id + "/document", read_file(document_file),
                                            "application/octet-stream");
    v = response_json(r, g.node_url);
    if (r->status != 200 && r->status != 404) throw_http(r->status, v);
  } else {
    // audit mode: a damaged chain still answers, with integrity-failure
    auto node = node::Node::open(g.dir(), node::LoadMode::Audit);
    auto result = node->records().verify_certificate(id);
    v = records::to_json(result);
    if (!document_file.empty() && result.status == records::VerifyStatus::Authentic)
      v["matches"] = node->records().verify_document(id, to_bytes(read_file(document_file))).matches;
  }
  print_verification(g.human(), v);
  g.emit(v);
  const auto status = v.value("status", "");
  if (status == "not-found") throw CliError{kNotFound, "", ""};
  if (status == "integrity-failure") throw CliError{kIntegrity, "", ""};
  if (v.contains("matches") && !v["matches"].get<bool>()) throw CliError{kIntegrity, "", ""};
}

struct ListArgs {
  std::string student;
  std::string institution;
  std::string kind;
};

void cmd_list(const Globals& g, const ListArgs& a) {
  json list;
  if (!g.node_url.empty()) {
    httplib::Params params;
    if (!a.student.empty()) params.emplace("student", a.student);
    if (!a.institution.empty()) params.emplace("institution", a.institution);
    if (!a.kind.empty()) params.emplace("kind", a.kind);
    auto c = client_for(g.node_url);
    auto r = c.Get("/records", params, httplib::Headers{});
    list = response_json(r, g.node_url);
    if (r->status != 200) throw_http(r->status, list);
  } else {
    records::RecordFilter filter;
    if (!a.student.empty()) filter.student_ref = a.student;
    if (!a.institution.empty()) filter.institution = a.institution;
    if (!a.kind.empty()) {
      filter.kind = records::record_kind_from_string(a.kind);
      if (!filter.kind) throw CliError{kUsage, "usage", "--kind must be certificate or diploma"};
    }
    auto node = node::Node::open(g.dir(), node::LoadMode::Audit);
    list = json::array();
    for (const auto& s : node->records().list_records(filter)) list.push_back(records::to_json(s));
  }
  for (const auto& r : list)
    g.human() << r.value("record_id", "") << "  " << r.value("kind", "") << "  " << r.value("title", "") << "  "
              << r.value("student_ref", "") << "  height " << r["height"] << "\n";
  g.human() << list.size() << " record(s)\n";
  g.emit({{"records", list}});
}

// ---- chain validate ------------------------------------------------------

void cmd_validate(const Globals& g) {
  auto node = node::Node::open(g.dir(), node::LoadMode::Audit);
  auto report = node->audit();
  json out = {{"valid", report.valid}, {"blocks", report.heights.size()}, {"first_failure", nullptr}};
  if (report.valid) {
    const auto chain = node->records().chain();
    out["tip_hash"] = chain.tip_hash().hex();
    g.human() << "chain valid: " << chain.size() << " blocks, tip " << chain.tip_hash().hex() << "\n";
  } else {
    const auto* bad = report.first_failure();
    out["first_failure"] = {{"height", bad->height}, {"check", ledger::to_string(bad->check)}, {"detail", bad->detail}};
    g.human() << "chain INVALID at " << node::describe_failure(report) << "\n";
  }
  g.emit(out);
  if (!report.valid) throw CliError{kIntegrity, "", ""};
}

// ---- poc run -------------------------------------------------------------

struct PocArgs {
  std::size_t records = 10;
  std::size_t validators = 11;
  std::string keep_dir;
  std::string key_label;
};

void cmd_poc(const Globals& g, const PocArgs& a) {
  node::PocOptions options;
  options.records = a.records;
  options.validators = a.validators;
  if (!a.keep_dir.empty()) options.data_dir = a.keep_dir;
  if (!a.key_label.empty()) options.key_label = a.key_label;
  auto report = node::run_poc(options);

  auto& out = g.human();
  out << report.summary() << "\n";
  out << "  validators " << a.validators << ", quorum " << report.quorum << ", min endorsements "
      << report.min_endorsements << "\n"
      << "  chain length " << report.chain_length << ", tip " << report.tip_hash << "\n"
      << "  elapsed " << static_cast<long long>(report.elapsed_ms) << " ms\n";
  for (const auto& p : report.problems) out << "  problem: " << p << "\n";
  out << (report.passed() ? "PASS" : "FAIL") << "\n";
  g.emit({{"summary", report.summary()},
          {"passed", report.passed()},
          {"requested", report.requested},
          {"committed", report.committed},
          {"verified", report.verified},
          {"chain_valid", report.chain_valid},
          {"unauthorized_rejected", report.unauthorized_rejected},
          {"chain_length", report.chain_length},
          {"quorum", report.quorum},
          {"min_endorsements", report.min_endorsements},
          {"tip_hash", report.tip_hash},
          {"record_ids", report.record_ids},
          {"elapsed_ms", report.elapsed_ms},
          {"problems", report.problems}});
  if (!report.passed()) throw CliError{report.chain_valid ? kOther : kIntegrity, "", ""};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BcER2 educational records node"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--data-dir", g.data_dir, "Data directory (default $BCER2_DATA_DIR, then ./bcer2-data)");
  app.add_option("--node-url", g.node_url, "Talk to a running node instead of the local data directory");
  app.add_flag("--json", g.json_mode, "Print one JSON object on stdout; human text goes to stderr");

  InitArgs init;
  auto* init_cmd = app.add_subcommand("init", "Create a network: genesis, validator roster, model and ACL");
  init_cmd->add_option("--network-id", init.options.network_id, "Network identifier")->capture_default_str();
  init_cmd->add_option("--validators", init.options.validators, "Validator count")
      ->capture_default_str()
      ->check(CLI::Range(1, 1000));
  init_cmd->add_option("--quorum", init.options.quorum, "Endorsements per block (0 = majority)")->capture_default_str();
  init_cmd->add_option("--endpoint", init.options.endpoint, "Node URL written into issued cards")->capture_default_str();
  init_cmd->add_option("--key-label", init.key_label, "Derive all keys from this label (reproducible, insecure)");

  CardArgs card;
  auto* card_cmd = app.add_subcommand("card", "Identity cards");
  card_cmd->require_subcommand(1);
  auto* issue_cmd = card_cmd->add_subcommand("issue", "Issue a card signed by the network authority");
  issue_cmd->add_option("--role", card.role, "coordinator or user")
      ->required()
      ->check(CLI::IsMember({"coordinator", "user"}));
  issue_cmd->add_option("--ref", card.ref, "Participant reference, e.g. staff number");
  issue_cmd->add_option("--out", card.out, "Output .bcid file");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--host", serve.host, "Listen address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "Listen port (0 = any free port)")
      ->capture_default_str()
      ->check(CLI::Range(0, 65535));

  auto* record_cmd = app.add_subcommand("record", "Educational records");
  record_cmd->require_subcommand(1);
  RegisterArgs reg;
  auto* reg_cmd = record_cmd->add_subcommand("register", "Register a certificate or diploma");
  reg_cmd->add_option("--card", reg.card, "Issuer .bcid card file")->required()->check(CLI::ExistingFile);
  reg_cmd->add_option("--title", reg.title, "Record title")->required();
  reg_cmd->add_option("--student", reg.student, "Student reference")->required();
  reg_cmd->add_option("--institution", reg.institution, "Issuing institution")->required();
  reg_cmd->add_option("--course", reg.course, "Course")->required();
  reg_cmd->add_option("--issued-on", reg.issued_on, "Issue date, YYYY-MM-DD")->required();
  reg_cmd->add_option("--kind", reg.kind, "certificate or diploma")->capture_default_str();
  reg_cmd->add_option("--record-id", reg.record_id, "Record id (default: random 128-bit hex)");
  reg_cmd->add_option("--document", reg.document, "Document file whose hash is anchored")->check(CLI::ExistingFile);

  std::string verify_id, verify_doc;
  auto* verify_cmd = record_cmd->add_subcommand("verify", "Verify a record by id");
  verify_cmd->add_option("record_id", verify_id, "Record id")->required();
  verify_cmd->add_option("--document", verify_doc, "Also compare this document's hash")->check(CLI::ExistingFile);

  ListArgs list;
  auto* list_cmd = record_cmd->add_subcommand("list", "List records, newest first");
  list_cmd->add_option("--student", list.student, "Filter by student reference");
  list_cmd->add_option("--institution", list.institution, "Filter by institution");
  list_cmd->add_option("--kind", list.kind, "Filter by kind");

  auto* chain_cmd = app.add_subcommand("chain", "Ledger inspection");
  chain_cmd->require_subcommand(1);
  auto* validate_cmd = chain_cmd->add_subcommand("validate", "Validate the local chain file");

  PocArgs poc;
  auto* poc_cmd = app.add_subcommand("poc", "Proof-of-concept scenario");
  poc_cmd->require_subcommand(1);
  auto* run_cmd = poc_cmd->add_subcommand("run", "Register, attack and verify on a fresh network");
  run_cmd->add_option("--records", poc.records, "Records to register")->capture_default_str()->check(CLI::Range(1, 100000));
  run_cmd->add_option("--validators", poc.validators, "Validator count")
      ->capture_default_str()
      ->check(CLI::Range(1, 1000));
  run_cmd->add_option("--keep-dir", poc.keep_dir, "Keep the network in this (new) directory");
  run_cmd->add_option("--key-label", poc.key_label, "Derive keys from this label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  auto fail = [&](int exit_code, const std::string& code, const std::string& message) {
    if (!message.empty()) std::cerr << "error: " << message << "\n";
    if (g.json_mode && !code.empty()) std::cout << json{{"error", {{"code", code}, {"message", message}}}}.dump() << std::endl;
    return exit_code;
  };

  try {
    if (*init_cmd) cmd_init(g, init);
    else if (*issue_cmd) cmd_card_issue(g, card);
    else if (*serve_cmd) cmd_serve(g, serve);
    else if (*reg_cmd) cmd_register(g, reg);
    else if (*verify_cmd) cmd_verify(g, verify_id, verify_doc);
    else if (*list_cmd) cmd_list(g, list);
    else if (*validate_cmd) cmd_validate(g);
    else if (*run_cmd) cmd_poc(g, poc);
    return kOk;
  } catch (const CliError& e) {
    return fail(e.exit_code, e.code, e.message);
  } catch (const records::RecordsError& e) {
    return fail(exit_for(e.code()), records::to_string(e.code()), e.what());
  } catch (const node::StoreError& e) {
    return fail(e.code() == node::StoreError::Code::Corrupt ? kIntegrity : kOther, "storage", e.what());
  } catch (const node::NodeError& e) {
    return fail(kOther, "node", e.what());
  } catch (const std::exception& e) {
    return fail(kOther, "internal", e.what());
  }
}
