#include "bcer/node/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <algorithm>
#include <cstring>
#include <fstream>

namespace bcer::node {

namespace {

[[noreturn]] void io_error(const std::string& what, const std::filesystem::path& file) {
  throw StoreError(StoreError::Code::Io, what + " " + file.string() + ": " + std::strerror(errno));
}

bool is_lower_hex(std::string_view s) { return s.find_first_not_of("0123456789abcdef") == std::string_view::npos; }

/// A crash mid-append leaves a prefix of a valid line with no newline. Such
/// a prefix is pure hex whose even-length part decodes as truncated, or is
/// the whole block missing only its newline (never acknowledged either way).
bool is_torn_tail(const std::string& line) {
  if (!is_lower_hex(line)) return false;
  auto even = std::string_view(line).substr(0, line.size() & ~std::size_t{1});
  if (even.empty()) return true;
  try {
    ledger::canonical_decode(from_hex(even));
  } catch (const ledger::DecodeError& e) {
    return e.reason() == ledger::DecodeError::Reason::Truncated;
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

StoredChain ChainStore::load(LoadMode mode) {
  StoredChain out;
  std::ifstream in(file_, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(file_)) {
      next_height_ = 0;
      return out;
    }
    io_error("cannot read", file_);
  }
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  std::uint64_t index = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    std::string line = content.substr(pos, terminated ? nl - pos : std::string::npos);
    const auto line_start = pos;
    pos = terminated ? nl + 1 : content.size();

    if (!terminated && mode == LoadMode::Recover && is_torn_tail(line)) {
      std::filesystem::resize_file(file_, line_start);
      out.dropped_torn_tail = true;
      break;
    }
    std::string problem;
    if (!terminated) {
      problem = "missing line terminator";
    } else {
      try {
        auto block = ledger::Block::decode(from_hex(line));
        if (out.faults.empty()) out.blocks.push_back(std::move(block));
      } catch (const std::exception& e) {
        problem = e.what();
      }
    }
    if (!problem.empty()) {
      out.faults.push_back({index, "line " + std::to_string(index + 1) + ": " + problem});
      if (mode == LoadMode::Recover)
        throw StoreError(StoreError::Code::Corrupt, "chain file corrupt at height " + std::to_string(index) + ": " +
                                                        problem,
                         index);
    }
    ++index;
  }
  out.line_count = index;
  next_height_ = out.blocks.size();
  return out;
}

void ChainStore::persist_block(const ledger::Block& block) {
  if (block.header.height != next_height_) {
    throw StoreError(StoreError::Code::OutOfOrder, "persist out of order: expected height " +
                                                       std::to_string(next_height_) + ", got " +
                                                       std::to_string(block.header.height));
  }
  const auto line = to_hex(block.encode()) + "\n";
  int fd = ::open(file_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) io_error("cannot open", file_);
  std::size_t written = 0;
  while (written < line.size()) {
    auto n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      io_error("cannot write", file_);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    io_error("cannot sync", file_);
  }
  ::close(fd);
  ++next_height_;
}

ledger::Chain replay(const std::vector<ledger::Block>& blocks, std::size_t quorum,
                     const ledger::ValidatorKeys& validator_keys) {
  auto report = ledger::validate_chain(ledger::Chain::from_blocks(blocks), quorum, validator_keys);
  if (!report.valid) {
    const auto* bad = report.first_failure();
    throw StoreError(StoreError::Code::Corrupt,
                     "chain invalid at height " + std::to_string(bad->height) + ": " + ledger::to_string(bad->check) +
                         (bad->detail.empty() ? "" : " (" + bad->detail + ")"),
                     bad->height);
  }
  return ledger::Chain::from_blocks(blocks);
}

ledger::ValidationReport audit(const StoredChain& stored, std::size_t quorum,
                               const ledger::ValidatorKeys& validator_keys,
                               const std::optional<crypto::HashDigest>& expected_genesis) {
  auto chain = ledger::Chain::from_blocks(stored.blocks);
  auto report = ledger::validate_chain(chain, quorum, validator_keys);
  if (expected_genesis && !chain.empty() && chain.hash_at(0) != *expected_genesis) {
    report.heights.at(0) = {0, ledger::ChainCheck::BadGenesis, "genesis differs from the network's genesis"};
    for (std::size_t i = 1; i < report.heights.size(); ++i)
      if (report.heights[i].ok()) report.heights[i] = {i, ledger::ChainCheck::BrokenAncestor, "an earlier block failed validation"};
    report.valid = false;
  }
  // Lines past the last decoded block: unreadable ones fail on their own,
  // readable ones inherit the break.
  for (auto h = stored.blocks.size(); h < stored.line_count; ++h) {
    auto fault = std::find_if(stored.faults.begin(), stored.faults.end(), [&](const auto& f) { return f.height == h; });
    if (fault != stored.faults.end()) {
      report.heights.push_back({h, ledger::ChainCheck::Unreadable, fault->message});
    } else {
      report.heights.push_back({h, ledger::ChainCheck::BrokenAncestor, "an earlier block failed validation"});
    }
    report.valid = false;
  }
  return report;
}

}  // namespace bcer::node
