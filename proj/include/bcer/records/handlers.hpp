#pragma once

// Transaction processors: each declared transaction type maps to one handler
// that turns a validated transaction instance into unsigned registers.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bcer/identity/card.hpp"
#include "bcer/ledger/chain.hpp"
#include "bcer/model/model.hpp"

namespace bcer::records {

struct HandlerContext {
  const ledger::Chain& chain;
  const identity::IdCard& submitter;
};

using TransactionHandler =
    std::function<std::vector<ledger::Register>(const ledger::Map& transaction, const HandlerContext& ctx)>;

class HandlerRegistry {
 public:
  /// Throws std::invalid_argument if the type already has a handler.
  void add(const std::string& transaction_type, TransactionHandler handler);
  const TransactionHandler* find(const std::string& transaction_type) const;

  /// Declared transaction types without a handler.
  std::vector<std::string> missing(const model::ModelDefinition& model) const;
  /// Throws RecordsError(NoHandler) naming every uncovered type.
  void check_complete(const model::ModelDefinition& model) const;

  /// RegisterRecord and UpdateRecord.
  static HandlerRegistry defaults();

 private:
  std::map<std::string, TransactionHandler> handlers_;
};

/// Validates `instance` as `transaction_type` and runs its handler.
/// Throws RecordsError(NoHandler) for undeclared or unhandled types and
/// RecordsError(SchemaViolation) for invalid instances.
std::vector<ledger::Register> dispatch_transaction(const std::string& transaction_type,
                                                   const ledger::Value& instance, const HandlerRegistry& registry,
                                                   const model::ModelDefinition& model, const HandlerContext& ctx);

}  // namespace bcer::records
