#pragma once

// Canonical binary encoding used for everything that gets hashed or signed.
//
//   0x01 int    : 8-byte big-endian two's complement
//   0x02 string : 4-byte big-endian length, UTF-8 bytes
//   0x03 bytes  : 4-byte big-endian length, raw bytes
//   0x04 list   : 4-byte big-endian count, elements
//   0x05 map    : 4-byte big-endian count, entries ordered by key bytes;
//                 an entry is a 4-byte length + key bytes, then the value
//
// There is deliberately no floating-point tag.

#include <concepts>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bcer/crypto.hpp"

namespace bcer::ledger {

class Value;
using List = std::vector<Value>;
using Map = std::map<std::string, Value>;

enum class ValueKind : std::uint8_t {
  Int = 0x01,
  String = 0x02,
  Bytes = 0x03,
  List = 0x04,
  Map = 0x05,
};

const char* to_string(ValueKind kind);

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  enum class Reason { Truncated, Malformed, TrailingData };
  DecodeError(Reason reason, std::size_t offset, const std::string& what);
  Reason reason() const { return reason_; }
  std::size_t offset() const { return offset_; }

 private:
  Reason reason_;
  std::size_t offset_;
};

class Value {
 public:
  using Storage = std::variant<std::int64_t, std::string, Bytes, List, Map>;

  Value() : storage_(Map{}) {}
  template <std::integral T>
    requires(!std::same_as<T, bool> && !std::same_as<T, char>)
  Value(T v) : storage_(static_cast<std::int64_t>(v)) {}
  Value(std::string v) : storage_(std::move(v)) {}
  Value(const char* v) : storage_(std::string(v)) {}
  Value(Bytes v) : storage_(std::move(v)) {}
  Value(List v) : storage_(std::move(v)) {}
  Value(Map v) : storage_(std::move(v)) {}
  Value(bool) = delete;
  Value(float) = delete;
  Value(double) = delete;

  ValueKind kind() const { return static_cast<ValueKind>(storage_.index() + 1); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(storage_); }
  bool is_string() const { return std::holds_alternative<std::string>(storage_); }
  bool is_bytes() const { return std::holds_alternative<Bytes>(storage_); }
  bool is_list() const { return std::holds_alternative<List>(storage_); }
  bool is_map() const { return std::holds_alternative<Map>(storage_); }

  // Typed accessors throw EncodingError on a kind mismatch.
  std::int64_t as_int() const;
  const std::string& as_string() const;
  const Bytes& as_bytes() const;
  const List& as_list() const;
  const Map& as_map() const;

  const Storage& storage() const { return storage_; }

  friend bool operator==(const Value&, const Value&) = default;

 private:
  Storage storage_;
};

Bytes canonical_encode(const Value& value);
/// Strict inverse of canonical_encode: rejects unsorted or duplicate map keys,
/// unknown tags, truncated input and trailing bytes.
Value canonical_decode(ByteView data);

// Helpers for decoding structured records with a fixed schema.
const Value& require_field(const Map& map, const std::string& key);
const Value* find_field(const Map& map, const std::string& key);
/// Throws EncodingError unless map's keys are exactly `required` plus any subset of `optional`.
void expect_keys(const Map& map, std::initializer_list<const char*> required,
                 std::initializer_list<const char*> optional = {});

}  // namespace bcer::ledger
