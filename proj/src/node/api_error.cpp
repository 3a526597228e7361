#include "bcer/node/api_error.hpp"

namespace bcer::node {

ApiError api_error_for(const records::RecordsError& error) {
  using C = records::RecordsError::Code;
  int status = 500;
  switch (error.code()) {
    case C::InvalidCard: status = 401; break;
    case C::Unauthorized: status = 403; break;
    case C::NotFound: status = 404; break;
    case C::Unsupported: status = 405; break;
    case C::DuplicateRecordId: status = 409; break;
    case C::SchemaViolation: status = 422; break;
    case C::ConsensusTimeout: status = 503; break;
    // a damaged chain or a missing handler is the node's fault, not the client's
    case C::IntegrityFailure:
    case C::NoHandler: status = 500; break;
  }
  return {status, records::to_string(error.code()), error.what()};
}

ApiError bad_request(const std::string& message) { return {400, "bad-request", message}; }

}  // namespace bcer::node
