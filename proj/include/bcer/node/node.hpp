#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcer/consensus/simulation.hpp"
#include "bcer/identity/card.hpp"
#include "bcer/node/store.hpp"
#include "bcer/records/network.hpp"

namespace bcer::node {

/// Bad or missing data directory contents.
class NodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kDataDirEnv = "BCER2_DATA_DIR";
inline constexpr const char* kDefaultDataDir = "bcer2-data";

/// --data-dir if given, else $BCER2_DATA_DIR, else ./bcer2-data.
std::filesystem::path resolve_data_dir(const std::optional<std::filesystem::path>& flag);

struct InitOptions {
  std::string network_id = "unifacs-net";
  std::size_t validators = 11;
  /// 0 means majority.
  std::size_t quorum = 0;
  std::string endpoint = "http://127.0.0.1:8080";
  std::optional<std::int64_t> created_ms;
  /// Derive every key from this label instead of the system RNG.
  std::optional<std::string> key_label;
};

struct NetworkInfo {
  std::string network_id;
  std::size_t quorum = 0;
  std::vector<std::string> validator_ids;
  std::vector<crypto::PublicKey> validator_keys;
  crypto::HashDigest genesis_hash;
  std::int64_t created_ms = 0;
  crypto::PublicKey authority_key;
  std::string endpoint;
};

/// Writes genesis, roster, authority key and the default model and ACL.
/// Throws NodeError if the directory already holds a chain.
NetworkInfo init_data_dir(const std::filesystem::path& dir, const InitOptions& options = {});

/// A data-directory-backed node: replays chain.log at open and persists each
/// committed block before it becomes visible.
class Node {
 public:
  /// Recover mode refuses a damaged chain with StoreError(Corrupt) naming the
  /// first bad height. Audit mode opens anyway, read-only; the records
  /// network then reports integrity failures.
  static std::unique_ptr<Node> open(const std::filesystem::path& dir, LoadMode mode = LoadMode::Recover,
                                    const consensus::SimConfig& sim = {});

  records::RecordsNetwork& records() { return *records_; }
  const records::RecordsNetwork& records() const { return *records_; }
  const NetworkInfo& info() const { return info_; }
  const std::filesystem::path& data_dir() const { return dir_; }
  bool read_only() const { return mode_ == LoadMode::Audit; }
  bool dropped_torn_tail() const { return dropped_torn_tail_; }

  /// Fresh audit of chain.log as it is on disk now.
  ledger::ValidationReport audit() const;

  /// Issues a card with the authority key kept in the data directory and
  /// enrolls its public copy.
  identity::IdCard issue_card(identity::Role role, const std::string& participant_ref);

 private:
  Node() = default;

  std::filesystem::path dir_;
  LoadMode mode_ = LoadMode::Recover;
  NetworkInfo info_;
  std::unique_ptr<ChainStore> store_;
  std::unique_ptr<records::RecordsNetwork> records_;
  bool dropped_torn_tail_ = false;
};

/// First failing height of a report, formatted for humans.
std::string describe_failure(const ledger::ValidationReport& report);

}  // namespace bcer::node
