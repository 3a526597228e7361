#pragma once

// The proof-of-concept scenario: a coordinator registers N records on an
// N-validator network, a user-role card tries the same and is refused, and
// a fresh replay of the stored chain verifies every record.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bcer::node {

struct PocOptions {
  std::size_t records = 10;
  std::size_t validators = 11;
  /// Kept after the run when given; otherwise a temporary directory is used
  /// and removed.
  std::optional<std::filesystem::path> data_dir;
  /// Reproducible keys and timestamps when set.
  std::optional<std::string> key_label;
};

struct PocReport {
  std::size_t requested = 0;
  std::size_t committed = 0;
  std::size_t verified = 0;
  bool chain_valid = false;
  bool unauthorized_rejected = false;
  std::size_t chain_length = 0;
  std::size_t quorum = 0;
  std::size_t min_endorsements = 0;
  std::string tip_hash;
  std::vector<std::string> record_ids;
  std::filesystem::path data_dir;
  double elapsed_ms = 0;
  std::vector<std::string> problems;

  bool passed() const;
  /// e.g. "10/10 committed, chain valid, 10/10 verified, unauthorized attempt rejected"
  std::string summary() const;
};

PocReport run_poc(const PocOptions& options = {});

}  // namespace bcer::node
