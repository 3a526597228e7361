#pragma once

// Deterministic discrete-event simulation of the validator network. Every
// source of nondeterminism (drops, delays) comes from one seeded generator,
// so a config plus workload always yields the same trace.

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bcer/consensus/validator.hpp"

namespace bcer::consensus {

struct SimConfig {
  std::string network_id = "bcer2-sim";
  std::size_t validator_count = 11;
  /// 0 means majority.
  std::size_t quorum = 0;
  std::uint64_t rng_seed = 1;
  /// Each message is dropped with probability drop_num / drop_den.
  std::uint32_t drop_num = 0;
  std::uint32_t drop_den = 1;
  /// Delivery delay is uniform over [0, max_delay_ticks].
  std::uint32_t max_delay_ticks = 3;
  /// Validators that never send or receive anything.
  std::set<std::string> silent;
  /// Rounds a validator spends on one register before giving up on it.
  std::uint32_t max_retries = 10;
  std::int64_t start_ms = 1'700'000'000'000;
  std::int64_t tick_ms = 10;
  std::uint64_t max_ticks = 2'000'000;
  /// Off for bulk property runs; commits are always recorded.
  bool record_events = true;

  std::size_t effective_quorum() const { return quorum ? quorum : ledger::majority_quorum(validator_count); }
  /// Resend interval; a round lasts round_ticks().
  std::uint64_t retry_ticks() const { return 2 * std::max<std::uint64_t>(1, max_delay_ticks); }
  std::uint64_t round_ticks() const { return 4 * retry_ticks(); }
};

struct SimEvent {
  std::uint64_t tick = 0;
  std::string node;
  std::string kind;
  std::string outcome;

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

struct SimCommit {
  std::uint64_t tick = 0;
  std::string node;
  std::uint64_t height = 0;
  std::string block_hash;
  std::string register_id;

  friend bool operator==(const SimCommit&, const SimCommit&) = default;
};

struct SimTrace {
  std::map<std::string, std::string> header;
  std::vector<SimEvent> events;
  std::vector<SimCommit> commits;

  friend bool operator==(const SimTrace&, const SimTrace&) = default;
};

struct SimResult {
  SimTrace trace;
  /// Final chain of every live validator.
  std::map<std::string, ledger::Chain> chains;
  std::vector<std::string> committed;
  /// Workload registers that never reached any chain.
  std::vector<std::string> timed_out;
  std::uint64_t end_tick = 0;
  bool hit_tick_limit = false;

  /// Longest chain among live validators.
  const ledger::Chain& best_chain() const;
  /// True when every live validator holds the same chain.
  bool converged() const;
  /// No height was committed with two different block hashes.
  bool safe() const;
};

/// Deterministic validator identities v0..v(n-1).
std::vector<std::string> validator_ids(std::size_t n);
std::vector<identity::KeyPair> validator_keypairs(std::size_t n, const std::string& label = "bcer2-validator");
ledger::ValidatorKeys roster_keys(const std::vector<std::string>& ids, const std::vector<identity::KeyPair>& keys);

class Simulation {
 public:
  /// Starts every validator from `initial`; `keys` line up with `ids`.
  Simulation(SimConfig config, ledger::Chain initial, std::vector<std::string> ids,
             std::vector<identity::KeyPair> keys, ValidationContext ctx);

  void submit(ledger::Register reg) { workload_.push_back(std::move(reg)); }
  SimResult run(crypto::VerifyCache* cache = nullptr);

 private:
  SimConfig config_;
  ledger::Chain initial_;
  std::vector<std::string> ids_;
  std::vector<identity::KeyPair> keys_;
  ValidationContext ctx_;
  std::vector<ledger::Register> workload_;
};

/// Convenience: fresh genesis, validator_keypairs(), one shared VerifyCache.
SimResult run_simulation(const SimConfig& config, const std::vector<ledger::Register>& workload,
                         const ValidationContext& ctx);

/// Text form: key=value header lines, a blank line, then one line per event
/// ("tick node kind outcome") and per commit ("commit tick node height hash
/// register").
void write_trace(std::ostream& out, const SimTrace& trace);
SimTrace read_trace(std::istream& in);

}  // namespace bcer::consensus
