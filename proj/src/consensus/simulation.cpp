#include "bcer/consensus/simulation.hpp"

#include <deque>
#include <memory>
#include <queue>
#include <random>
#include <sstream>

namespace bcer::consensus {

namespace {

using ProposalPtr = std::shared_ptr<const Proposal>;

struct LockInfo {
  std::uint32_t round = 0;
  std::uint32_t since_round = 0;
  ProposalPtr proposal;
};

struct ProposalMsg {
  ProposalPtr proposal;
};
struct EndorseMsg {
  Endorsement endorsement;
  std::uint64_t height;
  std::uint32_t round;
};
struct StatusMsg {
  std::uint64_t height;
  std::uint32_t round;
  std::optional<std::uint32_t> lock_round;
  ProposalPtr lock;
};
struct CommitMsg {
  std::shared_ptr<const ledger::Block> block;
};
struct SyncRequestMsg {
  std::uint64_t from_height;
};
struct SyncMsg {
  std::vector<ledger::Block> blocks;
};
using Message = std::variant<ProposalMsg, EndorseMsg, StatusMsg, CommitMsg, SyncRequestMsg, SyncMsg>;

struct Delivery {
  std::size_t from;
  std::size_t to;
  std::shared_ptr<const Message> msg;
};

struct Timer {
  enum class Kind { Round, Retry } kind;
  std::size_t node;
  std::uint64_t height;
  std::uint32_t round;
};

struct QueuedEvent {
  std::uint64_t tick;
  std::uint64_t seq;
  std::variant<Delivery, Timer> what;

  bool operator>(const QueuedEvent& o) const { return std::tie(tick, seq) > std::tie(o.tick, o.seq); }
};

constexpr std::size_t kSyncBatch = 64;

struct NodeState {
  explicit NodeState(ValidatorNode v) : validator(std::move(v)) {}

  ValidatorNode validator;
  bool live = true;
  std::deque<std::size_t> pending;
  std::uint32_t round = 0;
  std::uint32_t head_since = 0;
  std::optional<LockInfo> lock;
  std::optional<Endorsement> last_endorsement;
  std::uint32_t last_endorsement_round = 0;
  // Leader bookkeeping for the current (height, round).
  ProposalPtr inflight;
  std::map<std::string, Endorsement> endorsements;
  std::map<std::string, std::pair<std::optional<std::uint32_t>, ProposalPtr>> statuses;
  bool proposed = false;
  bool seen_proposal = false;
};

std::string short_hash(const std::string& hex) { return hex.substr(0, 12); }

bool non_transient(RejectReason reason) {
  return reason == RejectReason::BadSignature || reason == RejectReason::Unauthorized ||
         reason == RejectReason::SchemaViolation;
}

class Engine {
 public:
  Engine(const SimConfig& config, const ledger::Chain& initial, const std::vector<std::string>& ids,
         const std::vector<identity::KeyPair>& keys, const ValidationContext& ctx,
         const std::vector<ledger::Register>& workload, crypto::VerifyCache* cache)
      : config_(config),
        ids_(ids),
        ctx_(ctx),
        workload_(workload),
        cache_(cache),
        rng_(config.rng_seed),
        quorum_(config.effective_quorum()) {
    auto keymap = roster_keys(ids, keys);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      NodeState n(ValidatorNode(ids[i], keys[i], initial, ids, keymap, quorum_));
      n.live = !config.silent.count(ids[i]);
      if (n.live)
        for (std::size_t w = 0; w < workload.size(); ++w) n.pending.push_back(w);
      nodes_.push_back(std::move(n));
    }
  }

  SimResult run() {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].live) start_height(i);

    while (!queue_.empty()) {
      auto ev = queue_.top();
      if (ev.tick > config_.max_ticks) {
        result_.hit_tick_limit = true;
        break;
      }
      queue_.pop();
      now_ = ev.tick;
      if (auto* d = std::get_if<Delivery>(&ev.what)) {
        deliver(*d);
      } else {
        on_timer(std::get<Timer>(ev.what));
      }
    }
    result_.end_tick = now_;
    finish();
    return std::move(result_);
  }

 private:
  // -- plumbing --------------------------------------------------------

  void log(std::size_t node, std::string kind, std::string outcome) {
    if (!config_.record_events) return;
    result_.trace.events.push_back({now_, ids_[node], std::move(kind), std::move(outcome)});
  }

  void schedule(std::uint64_t tick, std::variant<Delivery, Timer> what) {
    queue_.push(QueuedEvent{tick, seq_++, std::move(what)});
  }

  void send(std::size_t from, std::size_t to, std::shared_ptr<const Message> msg) {
    if (from == to || !nodes_[from].live || !nodes_[to].live) return;
    if (config_.drop_num > 0 && rng_() % config_.drop_den < config_.drop_num) return;
    std::uint64_t delay = config_.max_delay_ticks ? rng_() % (std::uint64_t{config_.max_delay_ticks} + 1) : 0;
    schedule(now_ + delay, Delivery{from, to, std::move(msg)});
  }

  void send(std::size_t from, std::size_t to, Message msg) {
    send(from, to, std::make_shared<const Message>(std::move(msg)));
  }

  void broadcast(std::size_t from, Message msg) {
    auto shared = std::make_shared<const Message>(std::move(msg));
    for (std::size_t to = 0; to < nodes_.size(); ++to) send(from, to, shared);
  }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i)
      if (ids_[i] == id) return i;
    return ids_.size();
  }

  std::size_t leader_index(std::uint64_t height, std::uint32_t round) const {
    return index_of(leader_for(height, ids_, round));
  }

  std::uint64_t height_of(const NodeState& n) const { return n.validator.next_height(); }

  std::int64_t now_ms() const { return config_.start_ms + static_cast<std::int64_t>(now_) * config_.tick_ms; }

  bool active(const NodeState& n) const {
    if (!n.pending.empty()) return true;
    return n.lock && n.round - n.lock->since_round < config_.max_retries;
  }

  // -- rounds ------------------------------------------------------------

  void drop_committed_heads(NodeState& n) {
    while (!n.pending.empty() &&
           ledger::find_register(n.validator.chain(), workload_[n.pending.front()].register_id))
      n.pending.pop_front();
  }

  void start_height(std::size_t i) {
    auto& n = nodes_[i];
    n.lock.reset();
    n.last_endorsement.reset();
    n.head_since = 0;
    enter_round(i, 0);
  }

  void enter_round(std::size_t i, std::uint32_t round) {
    auto& n = nodes_[i];
    const auto height = height_of(n);
    n.round = round;
    n.inflight.reset();
    n.endorsements.clear();
    n.statuses.clear();
    n.proposed = false;
    n.seen_proposal = false;
    if (round > 0) log(i, "round", "h=" + std::to_string(height) + " r=" + std::to_string(round));

    drop_committed_heads(n);
    if (!n.pending.empty() && round - n.head_since >= config_.max_retries) {
      log(i, "timeout", "reg=" + workload_[n.pending.front()].register_id);
      n.pending.pop_front();
      n.head_since = round;
      drop_committed_heads(n);
    }

    schedule(now_ + config_.round_ticks(), Timer{Timer::Kind::Round, i, height, round});
    schedule(now_ + config_.retry_ticks(), Timer{Timer::Kind::Retry, i, height, round});

    const auto leader = leader_index(height, round);
    if (round == 0) {
      if (leader == i) propose_new(i);
    } else if (leader == i) {
      record_status(i, i, status_of(n));
    } else {
      send(i, leader, status_of(n));
    }
  }

  StatusMsg status_of(const NodeState& n) const {
    StatusMsg s{height_of(n), n.round, std::nullopt, nullptr};
    if (n.lock) {
      s.lock_round = n.lock->round;
      s.lock = n.lock->proposal;
    }
    return s;
  }

  void on_timer(const Timer& t) {
    auto& n = nodes_[t.node];
    if (t.height != height_of(n) || t.round != n.round || !active(n)) return;
    if (t.kind == Timer::Kind::Round) {
      enter_round(t.node, n.round + 1);
      return;
    }
    const auto leader = leader_index(t.height, t.round);
    if (leader == t.node && n.inflight) {
      auto msg = std::make_shared<const Message>(ProposalMsg{n.inflight});
      for (std::size_t to = 0; to < nodes_.size(); ++to)
        if (!n.endorsements.count(ids_[to])) send(t.node, to, msg);
    } else if (leader != t.node && t.round > 0 && !n.seen_proposal) {
      send(t.node, leader, status_of(n));
    }
    schedule(now_ + config_.retry_ticks(), Timer{Timer::Kind::Retry, t.node, t.height, t.round});
  }

  // -- leader ------------------------------------------------------------

  void record_status(std::size_t i, std::size_t from, const StatusMsg& s) {
    auto& n = nodes_[i];
    n.statuses[ids_[from]] = {s.lock_round, s.lock};
    if (n.proposed || n.statuses.size() < quorum_) return;

    ProposalPtr best;
    std::uint32_t best_round = 0;
    for (const auto& [id, st] : n.statuses) {
      if (st.first && (!best || *st.first > best_round)) {
        best_round = *st.first;
        best = st.second;
      }
    }
    if (best) {
      auto p = std::make_shared<Proposal>(*best);
      p->round = n.round;
      p->proposer_id = ids_[i];
      n.proposed = true;
      launch(i, p);
    } else {
      propose_new(i);
    }
  }

  void propose_new(std::size_t i) {
    auto& n = nodes_[i];
    while (true) {
      drop_committed_heads(n);
      if (n.pending.empty()) return;
      const auto& reg = workload_[n.pending.front()];
      std::shared_ptr<Proposal> p;
      try {
        p = std::make_shared<Proposal>(propose(n.validator, reg, now_ms(), ctx_.cards, n.round, cache_));
      } catch (const ConsensusError& e) {
        log(i, "discard", "reg=" + reg.register_id + " " + e.what());
        n.pending.pop_front();
        continue;
      }
      auto check = on_proposal(n.validator, *p, ctx_, cache_);
      if (auto* rej = std::get_if<Rejection>(&check)) {
        if (non_transient(rej->reason)) {
          log(i, "discard", "reg=" + reg.register_id + " " + to_string(rej->reason));
          n.pending.pop_front();
          continue;
        }
        log(i, "reject", std::string("self ") + to_string(rej->reason));
        return;
      }
      n.proposed = true;
      launch(i, p);
      return;
    }
  }

  void launch(std::size_t i, const ProposalPtr& p) {
    auto& n = nodes_[i];
    log(i, "propose", "h=" + std::to_string(p->height) + " r=" + std::to_string(p->round) +
                          " reg=" + p->block_body.reg->register_id + " id=" + short_hash(p->proposal_id));
    auto own = accept(i, p);
    if (!own) return;
    n.inflight = p;
    n.endorsements.emplace(ids_[i], *own);
    broadcast(i, ProposalMsg{p});
    maybe_commit(i);
  }

  void maybe_commit(std::size_t i) {
    auto& n = nodes_[i];
    if (!n.inflight || n.endorsements.size() < quorum_) return;
    std::vector<Endorsement> es;
    for (const auto& [id, e] : n.endorsements) es.push_back(e);
    auto block = try_commit(*n.inflight, es, quorum_, n.validator.roster_keys(), cache_);
    if (!block) return;
    auto shared = std::make_shared<const ledger::Block>(std::move(*block));
    if (commit_local(i, *shared)) {
      broadcast(i, CommitMsg{shared});
      start_height(i);
    }
  }

  // -- validator -----------------------------------------------------------

  /// Round and lock rules around on_proposal; updates the lock on success.
  std::optional<Endorsement> accept(std::size_t i, const ProposalPtr& p) {
    auto& n = nodes_[i];
    const auto tag = "h=" + std::to_string(p->height) + " r=" + std::to_string(p->round);
    if (p->round < n.round) {
      log(i, "reject", tag + " " + to_string(RejectReason::StaleRound));
      return std::nullopt;
    }
    if (n.lock && n.lock->round == p->round && n.lock->proposal->proposal_id != p->proposal_id) {
      log(i, "reject", tag + " " + to_string(RejectReason::ConflictingLock));
      return std::nullopt;
    }
    if (n.last_endorsement && n.last_endorsement_round == p->round &&
        n.last_endorsement->proposal_id == p->proposal_id)
      return n.last_endorsement;

    auto verdict = on_proposal(n.validator, *p, ctx_, cache_);
    if (auto* rej = std::get_if<Rejection>(&verdict)) {
      log(i, "reject", tag + " " + to_string(rej->reason));
      return std::nullopt;
    }
    if (n.lock && n.lock->proposal->proposal_id == p->proposal_id) {
      n.lock->round = p->round;
    } else {
      n.lock = LockInfo{p->round, p->round, p};
    }
    n.last_endorsement = std::get<Endorsement>(verdict);
    n.last_endorsement_round = p->round;
    log(i, "endorse", tag + " id=" + short_hash(p->proposal_id));
    return n.last_endorsement;
  }

  bool commit_local(std::size_t i, const ledger::Block& block) {
    auto& n = nodes_[i];
    try {
      n.validator.commit(block, cache_);
    } catch (const ledger::AppendError& e) {
      log(i, "reject", "commit h=" + std::to_string(block.header.height) + " " + e.what());
      return false;
    }
    const auto hash = n.validator.chain().tip_hash().hex();
    const auto reg_id = block.reg ? block.reg->register_id : std::string();
    result_.trace.commits.push_back({now_, ids_[i], block.header.height, hash, reg_id});
    log(i, "commit", "h=" + std::to_string(block.header.height) + " hash=" + short_hash(hash) + " reg=" + reg_id);
    std::erase_if(n.pending, [&](std::size_t w) { return workload_[w].register_id == reg_id; });
    return true;
  }

  void send_sync(std::size_t from, std::size_t to, std::uint64_t from_height) {
    const auto& chain = nodes_[from].validator.chain();
    if (from_height > chain.tip_height()) return;
    SyncMsg sync;
    for (auto h = from_height; h <= chain.tip_height() && sync.blocks.size() < kSyncBatch; ++h)
      sync.blocks.push_back(chain.at(h));
    send(from, to, std::move(sync));
  }

  /// Common height gate: true when the message belongs to the current height.
  bool same_height(std::size_t i, std::size_t from, std::uint64_t height) {
    const auto mine = height_of(nodes_[i]);
    if (height < mine) {
      send_sync(i, from, height);
      return false;
    }
    if (height > mine) {
      send(i, from, SyncRequestMsg{mine});
      return false;
    }
    return true;
  }

  void deliver(const Delivery& d) {
    const auto i = d.to;
    auto& n = nodes_[i];
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ProposalMsg>) {
            if (!same_height(i, d.from, m.proposal->height)) return;
            if (m.proposal->round > n.round) enter_round(i, m.proposal->round);
            if (m.proposal->round == n.round) n.seen_proposal = true;
            if (auto e = accept(i, m.proposal)) send(i, d.from, EndorseMsg{*e, m.proposal->height, m.proposal->round});
          } else if constexpr (std::is_same_v<T, EndorseMsg>) {
            if (!n.inflight || m.height != height_of(n) || m.round != n.round ||
                m.endorsement.proposal_id != n.inflight->proposal_id)
              return;
            n.endorsements.emplace(m.endorsement.validator_id, m.endorsement);
            maybe_commit(i);
          } else if constexpr (std::is_same_v<T, StatusMsg>) {
            if (!same_height(i, d.from, m.height) || m.round < n.round) return;
            if (m.round > n.round) enter_round(i, m.round);
            if (leader_index(m.height, m.round) == i) record_status(i, d.from, m);
          } else if constexpr (std::is_same_v<T, CommitMsg>) {
            const auto h = m.block->header.height;
            if (h > height_of(n)) {
              send(i, d.from, SyncRequestMsg{height_of(n)});
            } else if (h == height_of(n) && commit_local(i, *m.block)) {
              start_height(i);
            }
          } else if constexpr (std::is_same_v<T, SyncRequestMsg>) {
            send_sync(i, d.from, m.from_height);
          } else if constexpr (std::is_same_v<T, SyncMsg>) {
            bool advanced = false;
            for (const auto& block : m.blocks) {
              if (block.header.height < height_of(n)) continue;
              if (block.header.height > height_of(n) || !commit_local(i, block)) break;
              advanced = true;
            }
            if (advanced) start_height(i);
          }
        },
        *d.msg);
  }

  void finish() {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].live) result_.chains.emplace(ids_[i], nodes_[i].validator.chain());
    std::set<std::string> on_chain;
    if (!result_.chains.empty()) {
      const auto& best = result_.best_chain();
      for (std::size_t h = 0; h < best.size(); ++h)
        if (best.at(h).reg) on_chain.insert(best.at(h).reg->register_id);
    }
    for (const auto& reg : workload_)
      (on_chain.count(reg.register_id) ? result_.committed : result_.timed_out).push_back(reg.register_id);
  }

  const SimConfig& config_;
  const std::vector<std::string>& ids_;
  const ValidationContext& ctx_;
  const std::vector<ledger::Register>& workload_;
  crypto::VerifyCache* cache_;
  std::mt19937_64 rng_;
  std::size_t quorum_;
  std::vector<NodeState> nodes_;
  std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  std::uint64_t now_ = 0;
  SimResult result_;
};

std::string join(const std::set<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

const ledger::Chain& SimResult::best_chain() const {
  if (chains.empty()) throw std::logic_error("simulation had no live validators");
  const ledger::Chain* best = nullptr;
  for (const auto& [id, chain] : chains)
    if (!best || chain.size() > best->size()) best = &chain;
  return *best;
}

bool SimResult::converged() const {
  const ledger::Chain* first = nullptr;
  for (const auto& [id, chain] : chains) {
    if (!first) {
      first = &chain;
    } else if (chain.size() != first->size() || chain.tip_hash() != first->tip_hash()) {
      return false;
    }
  }
  return true;
}

bool SimResult::safe() const {
  std::map<std::uint64_t, std::string> seen;
  for (const auto& c : trace.commits) {
    auto [it, inserted] = seen.emplace(c.height, c.block_hash);
    if (!inserted && it->second != c.block_hash) return false;
  }
  return true;
}

std::vector<std::string> validator_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i));
  return ids;
}

std::vector<identity::KeyPair> validator_keypairs(std::size_t n, const std::string& label) {
  std::vector<identity::KeyPair> keys;
  for (std::size_t i = 0; i < n; ++i)
    keys.push_back(identity::KeyPair::from_seed(crypto::sha256(label + "-" + std::to_string(i)).view()));
  return keys;
}

ledger::ValidatorKeys roster_keys(const std::vector<std::string>& ids, const std::vector<identity::KeyPair>& keys) {
  if (ids.size() != keys.size()) throw std::invalid_argument("validator ids and keys differ in length");
  ledger::ValidatorKeys out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], keys[i].public_key);
  return out;
}

Simulation::Simulation(SimConfig config, ledger::Chain initial, std::vector<std::string> ids,
                       std::vector<identity::KeyPair> keys, ValidationContext ctx)
    : config_(std::move(config)),
      initial_(std::move(initial)),
      ids_(std::move(ids)),
      keys_(std::move(keys)),
      ctx_(ctx) {
  if (ids_.empty()) throw ConsensusError(ConsensusError::Code::EmptyValidatorSet, "empty validator set");
  if (ids_.size() != keys_.size()) throw std::invalid_argument("validator ids and keys differ in length");
  if (config_.drop_den == 0 || config_.drop_num > config_.drop_den)
    throw std::invalid_argument("drop probability must lie in [0, 1]");
  config_.validator_count = ids_.size();
}

SimResult Simulation::run(crypto::VerifyCache* cache) {
  crypto::VerifyCache local;
  if (!cache) cache = &local;
  Engine engine(config_, initial_, ids_, keys_, ctx_, workload_, cache);
  auto result = engine.run();
  auto& h = result.trace.header;
  h["network_id"] = initial_.network_id();
  h["validators"] = std::to_string(ids_.size());
  h["quorum"] = std::to_string(config_.effective_quorum());
  h["seed"] = std::to_string(config_.rng_seed);
  h["drop"] = std::to_string(config_.drop_num) + "/" + std::to_string(config_.drop_den);
  h["max_delay"] = std::to_string(config_.max_delay_ticks);
  h["max_retries"] = std::to_string(config_.max_retries);
  h["silent"] = join(config_.silent);
  h["workload"] = std::to_string(workload_.size());
  h["start_height"] = std::to_string(initial_.tip_height());
  return result;
}

SimResult run_simulation(const SimConfig& config, const std::vector<ledger::Register>& workload,
                         const ValidationContext& ctx) {
  Simulation sim(config, ledger::Chain(ledger::make_genesis(config.network_id, config.start_ms)),
                 validator_ids(config.validator_count), validator_keypairs(config.validator_count), ctx);
  for (const auto& reg : workload) sim.submit(reg);
  return sim.run();
}

}  // namespace bcer::consensus
