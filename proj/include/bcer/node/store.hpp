#pragma once

// chain.log: one lowercase-hex canonical block per line, append-only.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcer/ledger/chain.hpp"

namespace bcer::node {

class StoreError : public std::runtime_error {
 public:
  enum class Code { OutOfOrder, Io, Corrupt };
  StoreError(Code code, const std::string& what, std::optional<std::uint64_t> height = std::nullopt)
      : std::runtime_error(what), code_(code), height_(height) {}
  Code code() const { return code_; }
  /// First bad height for Corrupt.
  std::optional<std::uint64_t> height() const { return height_; }

 private:
  Code code_;
  std::optional<std::uint64_t> height_;
};

enum class LoadMode {
  /// Drops a torn final line (a crash mid-append) and refuses anything else.
  Recover,
  /// Reads what it can and reports every problem; never modifies the file.
  Audit,
};

struct LoadFault {
  /// Line index, which is also the height the line should hold.
  std::uint64_t height = 0;
  std::string message;
};

struct StoredChain {
  /// Blocks that decoded, up to the first fault.
  std::vector<ledger::Block> blocks;
  std::vector<LoadFault> faults;
  /// Lines read, excluding a dropped torn tail.
  std::uint64_t line_count = 0;
  bool dropped_torn_tail = false;
};

class ChainStore {
 public:
  explicit ChainStore(std::filesystem::path file) : file_(std::move(file)) {}

  const std::filesystem::path& file() const { return file_; }

  /// Recover mode throws StoreError(Corrupt) on any fault other than a torn
  /// tail, which it truncates away.
  StoredChain load(LoadMode mode);

  /// Appends and fsyncs one block. Heights must arrive in order; the first
  /// append after load() must be the next height.
  void persist_block(const ledger::Block& block);

  /// Height the next persist_block must carry.
  std::uint64_t next_height() const { return next_height_; }

 private:
  std::filesystem::path file_;
  std::uint64_t next_height_ = 0;
};

/// Rebuilds a chain after full validation. Throws StoreError(Corrupt) naming
/// the first height that fails.
ledger::Chain replay(const std::vector<ledger::Block>& blocks, std::size_t quorum,
                     const ledger::ValidatorKeys& validator_keys);

/// validate_chain plus load faults: an unreadable line fails its height and
/// breaks every height after it.
ledger::ValidationReport audit(const StoredChain& stored, std::size_t quorum,
                               const ledger::ValidatorKeys& validator_keys,
                               const std::optional<crypto::HashDigest>& expected_genesis = std::nullopt);

}  // namespace bcer::node
