#include "bcer/node/poc.hpp"

#include <chrono>

#include "bcer/node/node.hpp"

namespace bcer::node {

namespace fs = std::filesystem;

namespace {

records::RegistrationRequest poc_request(std::size_t i, const identity::IdCard& card) {
  records::RegistrationRequest req;
  auto& r = req.record;
  r.kind = i % 3 == 2 ? records::RecordKind::Diploma : records::RecordKind::Certificate;
  r.title = (r.kind == records::RecordKind::Diploma ? "Diploma " : "Certificate ") + std::to_string(i + 1);
  r.student_ref = "student-" + std::to_string(i % 4 + 1);
  r.institution = "UNIFACS";
  r.course = i % 2 ? "Computer Engineering" : "Computer Science";
  r.issued_on = "2019-12-" + std::string(i % 28 < 9 ? "0" : "") + std::to_string(i % 28 + 1);
  req.document = to_bytes("educational record document #" + std::to_string(i + 1));
  req.card = card;
  return req;
}

}  // namespace

bool PocReport::passed() const {
  return committed == requested && verified == requested && chain_valid && unauthorized_rejected &&
         chain_length == requested + 1 && min_endorsements >= quorum;
}

std::string PocReport::summary() const {
  const auto n = std::to_string(requested);
  return std::to_string(committed) + "/" + n + " committed, chain " + (chain_valid ? "valid" : "INVALID") + ", " +
         std::to_string(verified) + "/" + n + " verified, unauthorized attempt " +
         (unauthorized_rejected ? "rejected" : "ACCEPTED");
}

PocReport run_poc(const PocOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  PocReport report;
  report.requested = options.records;

  const bool temporary = !options.data_dir;
  report.data_dir = temporary ? fs::temp_directory_path() / ("bcer2-poc-" + crypto::random_id().substr(0, 12))
                              : *options.data_dir;
  struct Cleanup {
    bool active;
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      if (active) fs::remove_all(dir, ec);
    }
  } cleanup{temporary, report.data_dir};

  InitOptions init;
  init.validators = options.validators;
  init.key_label = options.key_label;
  init_data_dir(report.data_dir, init);

  {
    auto node = Node::open(report.data_dir);
    auto& network = node->records();
    const auto coordinator = node->issue_card(identity::Role::Coordinator, "coordinator-1");
    const auto user = node->issue_card(identity::Role::User, "user-1");

    for (std::size_t i = 0; i < options.records; ++i) {
      try {
        auto out = network.register_certificate(poc_request(i, coordinator));
        report.record_ids.push_back(out.record_id);
        ++report.committed;
      } catch (const records::RecordsError& e) {
        report.problems.push_back("record " + std::to_string(i + 1) + ": " + e.what());
      }
    }

    const auto tip = network.chain().tip_hash();
    auto rejected_with = [&](std::optional<identity::IdCard> card, records::RecordsError::Code expected) {
      auto req = poc_request(options.records, user);
      req.card = std::move(card);
      try {
        network.register_certificate(req);
      } catch (const records::RecordsError& e) {
        return e.code() == expected;
      }
      report.problems.push_back("registration without adequate credential was accepted");
      return false;
    };
    const bool user_refused = rejected_with(user, records::RecordsError::Code::Unauthorized);
    const bool anonymous_refused = rejected_with(std::nullopt, records::RecordsError::Code::InvalidCard);
    report.unauthorized_rejected = user_refused && anonymous_refused && network.chain().tip_hash() == tip;
  }

  // A fresh node replays chain.log from disk and does the verification.
  auto replayed = Node::open(report.data_dir);
  auto audit = replayed->audit();
  const auto chain = replayed->records().chain();
  report.chain_valid = audit.valid && replayed->records().integrity_problem().empty();
  if (!audit.valid) report.problems.push_back("chain: " + describe_failure(audit));
  report.chain_length = chain.size();
  report.tip_hash = chain.tip_hash().hex();
  report.quorum = replayed->records().quorum();
  report.min_endorsements = report.record_ids.empty() ? 0 : SIZE_MAX;
  for (const auto& id : report.record_ids) {
    auto v = replayed->records().verify_certificate(id);
    report.min_endorsements = std::min(report.min_endorsements, v.endorsement_count);
    if (v.status == records::VerifyStatus::Authentic && v.endorsement_count >= report.quorum) {
      ++report.verified;
    } else {
      report.problems.push_back("record " + id + " verified as " + records::to_string(v.status));
    }
  }

  report.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace bcer::node
