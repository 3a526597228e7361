#pragma once

#include <string>

#include <json.hpp>

#include "bcer/records/record.hpp"

namespace bcer::node {

/// An HTTP error response: status, machine code, human message.
struct ApiError {
  int status = 500;
  std::string code;
  std::string message;

  nlohmann::json to_json() const { return {{"code", code}, {"message", message}}; }
};

/// One (status, code) per records error.
ApiError api_error_for(const records::RecordsError& error);
ApiError bad_request(const std::string& message);

}  // namespace bcer::node
