#include "bcer/node/http_service.hpp"

#include <httplib.h>

#include <cctype>

#include "bcer/node/api_error.hpp"

namespace bcer::node {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send(httplib::Response& res, const ApiError& error) { send(res, error.status, error.to_json()); }

/// Field value from a multipart part or, failing that, a JSON body.
struct RequestFields {
  const httplib::Request& req;
  json body;

  std::optional<std::string> get(const std::string& name) const {
    if (req.is_multipart_form_data()) {
      if (!req.has_file(name)) return std::nullopt;
      return req.get_file_value(name).content;
    }
    if (!body.is_object() || !body.contains(name)) return std::nullopt;
    if (!body[name].is_string()) throw records::RecordsError(records::RecordsError::Code::SchemaViolation,
                                                             "field " + name + " must be a string");
    return body[name].get<std::string>();
  }
};

Bytes decode_hex_field(const std::string& name, const std::string& text) {
  try {
    return from_hex(text);
  } catch (const HexError&) {
    throw std::invalid_argument(name + " must be lowercase hex");
  }
}

records::RegistrationRequest parse_registration(const httplib::Request& req, const Node& node) {
  RequestFields fields{req, json()};
  if (!req.is_multipart_form_data()) {
    fields.body = json::parse(req.body, nullptr, false);
    if (!fields.body.is_object()) throw std::invalid_argument("body must be multipart form data or a JSON object");
  }
  records::RegistrationRequest out;
  auto& r = out.record;
  r.record_id = fields.get("record_id").value_or("");
  r.title = fields.get("title").value_or("");
  r.student_ref = fields.get("student_ref").value_or("");
  r.institution = fields.get("institution").value_or("");
  r.course = fields.get("course").value_or("");
  r.issued_on = fields.get("issued_on").value_or("");
  if (auto kind = fields.get("kind")) {
    auto parsed = records::record_kind_from_string(*kind);
    if (!parsed)
      throw records::RecordsError(records::RecordsError::Code::SchemaViolation, "unknown record kind " + *kind);
    r.kind = *parsed;
  }

  if (auto doc = fields.get("document")) {
    // multipart parts carry raw bytes; JSON carries hex
    out.document = req.is_multipart_form_data() ? to_bytes(*doc) : decode_hex_field("document", *doc);
  }

  auto signature = fields.get("signature");
  if (!signature && req.has_header("X-Signature")) signature = req.get_header_value("X-Signature");
  if (signature) out.signature = decode_hex_field("signature", *signature);

  if (auto card_text = fields.get("card")) {
    try {
      auto text = std::string_view(*card_text);
      while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
      out.card = identity::decode_card(text, node.info().authority_key);
    } catch (const identity::CardError& e) {
      throw records::RecordsError(records::RecordsError::Code::InvalidCard, std::string("card rejected: ") + e.what());
    }
  } else if (req.has_header("X-Card-Id")) {
    const auto id = req.get_header_value("X-Card-Id");
    const auto cards = node.records().cards();
    const auto* known = cards.find(id);
    if (!known) throw records::RecordsError(records::RecordsError::Code::InvalidCard, "unknown card id " + id);
    out.card = *known;
  }
  return out;
}

records::RecordFilter parse_filter(const httplib::Request& req) {
  records::RecordFilter filter;
  if (req.has_param("student")) filter.student_ref = req.get_param_value("student");
  if (req.has_param("institution")) filter.institution = req.get_param_value("institution");
  if (req.has_param("kind")) {
    filter.kind = records::record_kind_from_string(req.get_param_value("kind"));
    if (!filter.kind) throw std::invalid_argument("unknown kind " + req.get_param_value("kind"));
  }
  return filter;
}

json head_json(const ledger::Chain& chain) {
  return {{"height", chain.tip_height()},
          {"hash", chain.tip_hash().hex()},
          {"timestamp_ms", chain.tip().header.timestamp_ms}};
}

}  // namespace

json block_to_json(const ledger::Block& block) {
  json out = {{"height", block.header.height},
              {"hash", block.hash().hex()},
              {"previous_hash", block.header.previous_hash.hex()},
              {"payload_hash", block.header.payload_hash.hex()},
              {"timestamp_ms", block.header.timestamp_ms},
              {"proposer_id", block.header.proposer_id},
              {"register", nullptr},
              {"endorsements", json::array()}};
  if (block.reg) {
    const auto& reg = *block.reg;
    json payload;
    try {
      payload = records::to_json(ledger::canonical_decode(reg.payload));
    } catch (const std::exception&) {
      payload = to_hex(reg.payload);
    }
    out["register"] = {{"register_id", reg.register_id},
                       {"kind", ledger::to_string(reg.kind)},
                       {"resource_type", reg.resource_type},
                       {"payload", payload},
                       {"submitter_card_id", reg.submitter_card_id},
                       {"submitter_signature", to_hex(reg.submitter_signature)}};
  }
  for (const auto& e : block.endorsements)
    out["endorsements"].push_back({{"validator_id", e.validator_id}, {"signature", to_hex(e.signature)}});
  return out;
}

struct HttpService::Impl {
  Node& node;
  httplib::Server server;

  explicit Impl(Node& n) : node(n) {
    // httplib's default adds SO_REUSEPORT, which would let two nodes share a port
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    routes();
  }

  /// Runs a handler, mapping every failure to one error response.
  template <typename F>
  auto guarded(F handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const records::RecordsError& e) {
        send(res, api_error_for(e));
      } catch (const std::invalid_argument& e) {
        send(res, bad_request(e.what()));
      } catch (const StoreError& e) {
        send(res, ApiError{500, "storage-failure", e.what()});
      } catch (const std::exception& e) {
        send(res, ApiError{500, "internal-error", e.what()});
      }
    };
  }

  void routes() {
    auto& net = node.records();

    server.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
                 auto chain = node.records().chain();
                 send(res, 200,
                      {{"status", "ok"},
                       {"network_id", node.info().network_id},
                       {"height", chain.tip_height()},
                       {"validators", node.info().validator_ids.size()},
                       {"quorum", node.info().quorum},
                       {"read_only", node.read_only()}});
               }));

    server.Get("/chain/head", guarded([&net](const httplib::Request&, httplib::Response& res) {
                 send(res, 200, head_json(net.chain()));
               }));

    server.Get(R"(/chain/blocks/(\d+))", guarded([&net](const httplib::Request& req, httplib::Response& res) {
                 std::uint64_t h = 0;
                 try {
                   h = std::stoull(req.matches[1]);
                 } catch (const std::exception&) {
                   throw std::invalid_argument("height out of range");
                 }
                 auto chain = net.chain();
                 if (h >= chain.size())
                   throw records::RecordsError(records::RecordsError::Code::NotFound,
                                               "no block at height " + std::to_string(h));
                 send(res, 200, block_to_json(chain.at(h)));
               }));

    server.Get("/records", guarded([&net](const httplib::Request& req, httplib::Response& res) {
                 json out = json::array();
                 for (const auto& s : net.list_records(parse_filter(req))) out.push_back(records::to_json(s));
                 send(res, 200, out);
               }));

    server.Post("/records", guarded([this, &net](const httplib::Request& req, httplib::Response& res) {
                  auto outcome = net.register_certificate(parse_registration(req, node));
                  send(res, 201,
                       {{"record_id", outcome.record_id},
                        {"height", outcome.height},
                        {"block_hash", outcome.block_hash}});
                }));

    server.Get(R"(/verify/([^/]+))", guarded([&net](const httplib::Request& req, httplib::Response& res) {
                 auto result = net.verify_certificate(req.matches[1]);
                 send(res, result.status == records::VerifyStatus::NotFound ? 404 : 200, records::to_json(result));
               }));

    server.Post(R"(/verify/([^/]+)/document)", guarded([&net](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  auto result = net.verify_certificate(id);
                  if (result.status == records::VerifyStatus::NotFound) {
                    auto body = records::to_json(result);
                    body["matches"] = false;
                    send(res, 404, body);
                    return;
                  }
                  auto check = net.verify_document(id, to_bytes(req.body));
                  auto body = records::to_json(check.verification);
                  body["matches"] = check.matches;
                  body["document_hash"] = crypto::sha256(to_bytes(req.body)).hex();
                  send(res, 200, body);
                }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 404) send(res, ApiError{404, "not-found", "no such endpoint"});
      else if (res.status == 405) send(res, ApiError{405, "unsupported", "method not allowed"});
    });
  }
};

HttpService::HttpService(Node& node) : impl_(std::make_unique<Impl>(node)) {}
HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw NodeError("cannot listen on " + host + ":" + std::to_string(port) + " (port in use?)");
  return bound;
}

void HttpService::run() { impl_->server.listen_after_bind(); }
void HttpService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}
void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace bcer::node
