#include "bcer/node/node.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bcer::node {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kNetworkFile = "network.json";
constexpr const char* kAuthorityFile = "authority.key";
constexpr const char* kRosterFile = "roster.json";
constexpr const char* kModelFile = "network.model";
constexpr const char* kAclFile = "network.acl";
constexpr const char* kChainFile = "chain.log";
constexpr const char* kCardsFile = "cards.log";

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NodeError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content, bool secret = false) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NodeError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw NodeError("cannot write " + tmp.string());
  }
  if (secret) fs::permissions(tmp, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
  fs::rename(tmp, path);
}

void append_line(const fs::path& path, const std::string& line) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw NodeError("cannot open " + path.string());
  const bool ok = ::write(fd, line.data(), line.size()) == static_cast<ssize_t>(line.size()) && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) throw NodeError("cannot append to " + path.string());
}

identity::KeyPair make_key(const InitOptions& options, const std::string& role) {
  if (options.key_label) return identity::KeyPair::from_seed(crypto::sha256(*options.key_label + "/" + role).view());
  return identity::KeyPair::generate();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw NodeError("malformed " + path.string() + ": " + e.what());
  }
}

NetworkInfo read_info(const fs::path& dir) {
  auto j = read_json(dir / kNetworkFile);
  try {
    NetworkInfo info;
    info.network_id = j.at("network_id").get<std::string>();
    info.quorum = j.at("quorum").get<std::size_t>();
    for (const auto& v : j.at("validators")) {
      info.validator_ids.push_back(v.at("id").get<std::string>());
      info.validator_keys.push_back(crypto::PublicKey::from_hex(v.at("public_key").get<std::string>()));
    }
    info.genesis_hash = crypto::HashDigest::from_hex(j.at("genesis_hash").get<std::string>());
    info.created_ms = j.at("created_ms").get<std::int64_t>();
    info.authority_key = crypto::PublicKey::from_hex(j.at("authority_public_key").get<std::string>());
    info.endpoint = j.value("endpoint", "");
    if (info.validator_ids.empty() || info.quorum == 0 || info.quorum > info.validator_ids.size())
      throw NodeError("quorum inconsistent with roster size");
    return info;
  } catch (const json::exception& e) {
    throw NodeError("malformed " + (dir / kNetworkFile).string() + ": " + e.what());
  } catch (const HexError& e) {
    throw NodeError("malformed " + (dir / kNetworkFile).string() + ": " + e.what());
  }
}

std::vector<identity::KeyPair> read_roster(const fs::path& dir, const NetworkInfo& info) {
  auto j = read_json(dir / kRosterFile);
  std::vector<identity::KeyPair> keys;
  try {
    const auto& validators = j.at("validators");
    if (validators.size() != info.validator_ids.size()) throw NodeError("roster does not match network.json");
    for (std::size_t i = 0; i < validators.size(); ++i) {
      const auto& v = validators[i];
      if (v.at("id").get<std::string>() != info.validator_ids[i]) throw NodeError("roster order differs from network.json");
      auto kp = identity::KeyPair::from_seed(from_hex(v.at("seed").get<std::string>()));
      if (kp.public_key != info.validator_keys[i])
        throw NodeError("roster key for " + info.validator_ids[i] + " does not match network.json");
      keys.push_back(kp);
    }
  } catch (const json::exception& e) {
    throw NodeError("malformed roster: " + std::string(e.what()));
  }
  return keys;
}

identity::CardDirectory read_cards(const fs::path& path, const crypto::PublicKey& authority) {
  identity::CardDirectory cards;
  if (!fs::exists(path)) return cards;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto card = identity::decode_card(line, authority);
      cards.add(card);
    } catch (const std::exception&) {
      // a torn or foreign line; the holder can present the card again
    }
  }
  return cards;
}

}  // namespace

fs::path resolve_data_dir(const std::optional<fs::path>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  return kDefaultDataDir;
}

NetworkInfo init_data_dir(const fs::path& dir, const InitOptions& options) {
  if (options.validators == 0) throw NodeError("a network needs at least one validator");
  const auto quorum = options.quorum ? options.quorum : ledger::majority_quorum(options.validators);
  if (quorum > options.validators) throw NodeError("quorum exceeds validator count");
  if (options.network_id.empty()) throw NodeError("network id must not be empty");
  if (fs::exists(dir / kChainFile)) throw NodeError(dir.string() + " already holds a chain");
  fs::create_directories(dir);

  const auto created = options.created_ms.value_or(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                       std::chrono::system_clock::now().time_since_epoch())
                                                       .count());
  const auto authority = make_key(options, "authority");
  auto genesis = ledger::make_genesis(options.network_id, created);

  NetworkInfo info;
  info.network_id = options.network_id;
  info.quorum = quorum;
  info.genesis_hash = genesis.hash();
  info.created_ms = created;
  info.authority_key = authority.public_key;
  info.endpoint = options.endpoint;

  json validators = json::array();
  json roster = json::array();
  for (std::size_t i = 0; i < options.validators; ++i) {
    const auto id = "v" + std::to_string(i);
    const auto kp = make_key(options, id);
    info.validator_ids.push_back(id);
    info.validator_keys.push_back(kp.public_key);
    validators.push_back({{"id", id}, {"public_key", kp.public_key.hex()}});
    roster.push_back({{"id", id}, {"seed", kp.secret_key.hex()}});
  }
  json network = {{"network_id", info.network_id},
                  {"quorum", quorum},
                  {"validators", validators},
                  {"genesis_hash", info.genesis_hash.hex()},
                  {"created_ms", created},
                  {"authority_public_key", authority.public_key.hex()},
                  {"endpoint", options.endpoint}};

  write_text(dir / kNetworkFile, network.dump(2) + "\n");
  write_text(dir / kRosterFile, json{{"validators", roster}}.dump(2) + "\n", true);
  write_text(dir / kAuthorityFile, authority.secret_key.hex() + "\n", true);
  write_text(dir / kModelFile, std::string(records::default_model_source()));
  write_text(dir / kAclFile, std::string(records::default_acl_source()));
  write_text(dir / kCardsFile, "");
  ChainStore store(dir / kChainFile);
  store.load(LoadMode::Recover);
  store.persist_block(genesis);
  return info;
}

std::unique_ptr<Node> Node::open(const fs::path& dir, LoadMode mode, const consensus::SimConfig& sim) {
  if (!fs::exists(dir / kNetworkFile))
    throw NodeError(dir.string() + " is not an initialized data directory (run init first)");
  std::unique_ptr<Node> node(new Node());
  node->dir_ = dir;
  node->mode_ = mode;
  node->info_ = read_info(dir);

  records::NetworkSetup setup;
  try {
    setup.model = model::parse_model(read_text(dir / kModelFile));
    setup.acl = model::parse_acl(read_text(dir / kAclFile), setup.model);
  } catch (const model::ModelError& e) {
    throw NodeError("business network files do not parse: " + std::string(e.what()));
  }
  setup.authority_key = node->info_.authority_key;
  setup.validator_ids = node->info_.validator_ids;
  setup.validator_keys = read_roster(dir, node->info_);
  setup.quorum = node->info_.quorum;
  setup.sim = sim;

  node->store_ = std::make_unique<ChainStore>(dir / kChainFile);
  auto stored = node->store_->load(mode);
  node->dropped_torn_tail_ = stored.dropped_torn_tail;
  auto cards = read_cards(dir / kCardsFile, node->info_.authority_key);
  const auto keys = consensus::roster_keys(setup.validator_ids, setup.validator_keys);

  if (mode == LoadMode::Recover) {
    if (stored.blocks.empty()) throw StoreError(StoreError::Code::Corrupt, "chain file has no genesis block", 0);
    if (stored.blocks.front().hash() != node->info_.genesis_hash)
      throw StoreError(StoreError::Code::Corrupt, "chain invalid at height 0: genesis differs from network.json", 0);
    auto chain = replay(stored.blocks, node->info_.quorum, keys);
    node->records_ = std::make_unique<records::RecordsNetwork>(std::move(setup), std::move(chain), std::move(cards));
    auto* store = node->store_.get();
    node->records_->on_commit([store](const ledger::Block& block) { store->persist_block(block); });
    const auto cards_file = dir / kCardsFile;
    node->records_->on_card(
        [cards_file](const identity::IdCard& card) { append_line(cards_file, identity::encode_card(card)); });
  } else {
    auto report = node::audit(stored, node->info_.quorum, keys, node->info_.genesis_hash);
    std::string fault = report.valid ? "" : describe_failure(report);
    auto chain = ledger::Chain::from_blocks(stored.blocks);
    if (chain.empty()) chain = ledger::Chain(ledger::make_genesis(node->info_.network_id, node->info_.created_ms));
    node->records_ =
        std::make_unique<records::RecordsNetwork>(std::move(setup), std::move(chain), std::move(cards), fault);
  }
  return node;
}

ledger::ValidationReport Node::audit() const {
  ChainStore reader(dir_ / kChainFile);
  auto stored = reader.load(LoadMode::Audit);
  return node::audit(stored, info_.quorum, consensus::roster_keys(records_->setup().validator_ids,
                                                                  records_->setup().validator_keys),
                     info_.genesis_hash);
}

identity::IdCard Node::issue_card(identity::Role role, const std::string& participant_ref) {
  const auto seed_hex = read_text(dir_ / kAuthorityFile);
  auto authority = identity::KeyPair::from_seed(from_hex(seed_hex.substr(0, seed_hex.find('\n'))));
  if (authority.public_key != info_.authority_key) throw NodeError("authority.key does not match network.json");
  identity::ConnectionProfile profile{info_.network_id, {info_.endpoint.empty() ? "local" : info_.endpoint}};
  auto card = identity::issue_card(authority, records::participant_type_for(role), participant_ref, role, profile);
  if (!read_only()) records_->enroll_card(card);
  return card;
}

std::string describe_failure(const ledger::ValidationReport& report) {
  const auto* bad = report.first_failure();
  if (!bad) return {};
  return "height " + std::to_string(bad->height) + ": " + ledger::to_string(bad->check) +
         (bad->detail.empty() ? "" : " (" + bad->detail + ")");
}

}  // namespace bcer::node
