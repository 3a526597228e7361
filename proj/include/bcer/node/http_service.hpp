#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "bcer/node/node.hpp"

namespace bcer::node {

/// JSON view of a block as served by GET /chain/blocks/{height}.
nlohmann::json block_to_json(const ledger::Block& block);

/// The node's HTTP API. Handlers are thin adapters over RecordsNetwork, which
/// already serializes writes and serves reads from chain snapshots.
class HttpService {
 public:
  explicit HttpService(Node& node);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Port 0 picks a free one. Returns the bound port; throws NodeError when
  /// the address is taken.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call bind() first.
  void run();
  void stop();
  /// Blocks until run() is accepting connections.
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bcer::node
