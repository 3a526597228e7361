#include "bcer/ledger/encoding.hpp"

#include <algorithm>
#include <set>

namespace bcer::ledger {
namespace {

constexpr std::size_t kMaxDepth = 64;

void put_u32(Bytes& out, std::size_t n) {
  if (n > 0xffffffffu) throw EncodingError("length exceeds 32-bit prefix");
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(n >> shift));
}

void put_blob(Bytes& out, const std::uint8_t* data, std::size_t n) {
  put_u32(out, n);
  out.insert(out.end(), data, data + n);
}

void encode_into(Bytes& out, const Value& value, std::size_t depth) {
  if (depth > kMaxDepth) throw EncodingError("value nesting too deep");
  out.push_back(static_cast<std::uint8_t>(value.kind()));
  switch (value.kind()) {
    case ValueKind::Int: {
      auto u = static_cast<std::uint64_t>(value.as_int());
      for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(u >> shift));
      break;
    }
    case ValueKind::String: {
      const auto& s = value.as_string();
      put_blob(out, reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
      break;
    }
    case ValueKind::Bytes: {
      const auto& b = value.as_bytes();
      put_blob(out, b.data(), b.size());
      break;
    }
    case ValueKind::List: {
      const auto& list = value.as_list();
      put_u32(out, list.size());
      for (const auto& item : list) encode_into(out, item, depth + 1);
      break;
    }
    case ValueKind::Map: {
      // std::map<std::string> orders keys by char_traits<char>::compare, which
      // compares as unsigned char: ascending bytewise.
      const auto& map = value.as_map();
      put_u32(out, map.size());
      for (const auto& [key, item] : map) {
        put_blob(out, reinterpret_cast<const std::uint8_t*>(key.data()), key.size());
        encode_into(out, item, depth + 1);
      }
      break;
    }
  }
}

class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  Value read_value(std::size_t depth) {
    if (depth > kMaxDepth) fail(DecodeError::Reason::Malformed, "nesting too deep");
    const std::size_t tag_offset = pos_;
    switch (read_u8()) {
      case 0x01: {
        std::uint64_t u = 0;
        need(8);
        for (int i = 0; i < 8; ++i) u = u << 8 | data_[pos_++];
        return Value(static_cast<std::int64_t>(u));
      }
      case 0x02: {
        auto n = read_u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return Value(std::move(s));
      }
      case 0x03: {
        auto n = read_u32();
        need(n);
        Bytes b(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return Value(std::move(b));
      }
      case 0x04: {
        auto n = read_u32();
        // Every element takes at least 5 bytes; refuse absurd counts early.
        if (n > remaining()) fail(DecodeError::Reason::Truncated, "list count exceeds input");
        List list;
        list.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) list.push_back(read_value(depth + 1));
        return Value(std::move(list));
      }
      case 0x05: {
        auto n = read_u32();
        if (n > remaining()) fail(DecodeError::Reason::Truncated, "map count exceeds input");
        Map map;
        std::optional<std::string> previous;
        for (std::uint32_t i = 0; i < n; ++i) {
          const std::size_t key_offset = pos_;
          auto len = read_u32();
          need(len);
          std::string key(reinterpret_cast<const char*>(data_.data() + pos_), len);
          pos_ += len;
          if (previous && !(*previous < key)) {
            pos_ = key_offset;
            fail(DecodeError::Reason::Malformed, "map keys not strictly ascending");
          }
          Value item = read_value(depth + 1);
          previous = key;
          map.emplace(std::move(key), std::move(item));
        }
        return Value(std::move(map));
      }
      default:
        pos_ = tag_offset;
        fail(DecodeError::Reason::Malformed, "unknown type tag");
    }
  }

  void finish() {
    if (pos_ != data_.size()) fail(DecodeError::Reason::TrailingData, "trailing bytes after value");
  }

 private:
  [[noreturn]] void fail(DecodeError::Reason reason, const std::string& what) {
    throw DecodeError(reason, pos_, what);
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  void need(std::size_t n) {
    if (n > remaining()) fail(DecodeError::Reason::Truncated, "unexpected end of input");
  }
  std::uint8_t read_u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t read_u32() {
    need(4);
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n = n << 8 | data_[pos_++];
    return n;
  }

  ByteView data_;
  std::size_t pos_ = 0;
};

[[noreturn]] void kind_mismatch(ValueKind want, ValueKind got) {
  throw EncodingError(std::string("expected ") + to_string(want) + ", found " + to_string(got));
}

}  // namespace

const char* to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::Int: return "int";
    case ValueKind::String: return "string";
    case ValueKind::Bytes: return "bytes";
    case ValueKind::List: return "list";
    case ValueKind::Map: return "map";
  }
  return "?";
}

DecodeError::DecodeError(Reason reason, std::size_t offset, const std::string& what)
    : std::runtime_error(what + " at offset " + std::to_string(offset)), reason_(reason), offset_(offset) {}

std::int64_t Value::as_int() const {
  if (!is_int()) kind_mismatch(ValueKind::Int, kind());
  return std::get<std::int64_t>(storage_);
}
const std::string& Value::as_string() const {
  if (!is_string()) kind_mismatch(ValueKind::String, kind());
  return std::get<std::string>(storage_);
}
const Bytes& Value::as_bytes() const {
  if (!is_bytes()) kind_mismatch(ValueKind::Bytes, kind());
  return std::get<Bytes>(storage_);
}
const List& Value::as_list() const {
  if (!is_list()) kind_mismatch(ValueKind::List, kind());
  return std::get<List>(storage_);
}
const Map& Value::as_map() const {
  if (!is_map()) kind_mismatch(ValueKind::Map, kind());
  return std::get<Map>(storage_);
}

Bytes canonical_encode(const Value& value) {
  Bytes out;
  encode_into(out, value, 0);
  return out;
}

Value canonical_decode(ByteView data) {
  Reader reader(data);
  Value v = reader.read_value(0);
  reader.finish();
  return v;
}

const Value& require_field(const Map& map, const std::string& key) {
  auto it = map.find(key);
  if (it == map.end()) throw EncodingError("missing field '" + key + "'");
  return it->second;
}

const Value* find_field(const Map& map, const std::string& key) {
  auto it = map.find(key);
  return it == map.end() ? nullptr : &it->second;
}

void expect_keys(const Map& map, std::initializer_list<const char*> required,
                 std::initializer_list<const char*> optional) {
  std::size_t matched = 0;
  for (const char* key : required) {
    if (!map.count(key)) throw EncodingError(std::string("missing field '") + key + "'");
    ++matched;
  }
  for (const char* key : optional) matched += map.count(key);
  if (matched != map.size()) {
    for (const auto& [key, _] : map) {
      auto named = [&](const char* k) { return key == k; };
      if (std::none_of(required.begin(), required.end(), named) &&
          std::none_of(optional.begin(), optional.end(), named))
        throw EncodingError("unexpected field '" + key + "'");
    }
  }
}

}  // namespace bcer::ledger
