#include "bcer/model/instance.hpp"

namespace bcer::model {
namespace {

bool digits(std::string_view s, std::size_t from, std::size_t n, int& out) {
  if (from + n > s.size()) return false;
  out = 0;
  for (std::size_t i = from; i < from + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  return month == 2 && leap ? 29 : kDays[month - 1];
}

}  // namespace

const char* to_string(InstanceError::Code code) {
  switch (code) {
    case InstanceError::Code::UnknownType: return "unknown-type";
    case InstanceError::Code::NotARecord: return "not-a-record";
    case InstanceError::Code::MissingField: return "missing-field";
    case InstanceError::Code::UnknownField: return "unknown-field";
    case InstanceError::Code::TypeMismatch: return "type-mismatch";
    case InstanceError::Code::EmptyIdentifier: return "empty-identifier";
  }
  return "?";
}

bool is_iso8601(std::string_view s) {
  int year, month, day;
  if (!digits(s, 0, 4, year) || s.size() < 10 || s[4] != '-' || !digits(s, 5, 2, month) || s[7] != '-' ||
      !digits(s, 8, 2, day))
    return false;
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) return false;
  if (s.size() == 10) return true;
  int hour, minute, second;
  if (s.size() < 20 || s[10] != 'T' || !digits(s, 11, 2, hour) || s[13] != ':' || !digits(s, 14, 2, minute) ||
      s[16] != ':' || !digits(s, 17, 2, second))
    return false;
  if (hour > 23 || minute > 59 || second > 60) return false;
  std::size_t i = 19;
  if (s[i] == '.') {
    ++i;
    std::size_t start = i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (i == start) return false;
  }
  return i + 1 == s.size() && s[i] == 'Z';
}

std::vector<InstanceError> validate_instance(const ModelDefinition& model, std::string_view type_name,
                                             const ledger::Value& instance) {
  std::vector<InstanceError> errors;
  const TypeDecl* decl = model.find(type_name);
  if (!decl) {
    errors.push_back({InstanceError::Code::UnknownType, "", "type '" + std::string(type_name) + "' is not declared"});
    return errors;
  }
  if (!instance.is_map()) {
    errors.push_back({InstanceError::Code::NotARecord, "", "instance of '" + decl->name + "' must be a record"});
    return errors;
  }
  const auto& fields = instance.as_map();
  for (const auto& f : decl->fields) {
    auto it = fields.find(f.name);
    if (it == fields.end()) {
      if (!f.optional) errors.push_back({InstanceError::Code::MissingField, f.name, f.name + " required"});
      continue;
    }
    const auto& v = it->second;
    auto mismatch = [&](const char* want) {
      errors.push_back({InstanceError::Code::TypeMismatch, f.name,
                        f.name + ": expected " + want + ", found " + ledger::to_string(v.kind())});
    };
    if (f.reference_type) {
      if (!v.is_string()) mismatch("identifier string");
      else if (v.as_string().empty())
        errors.push_back({InstanceError::Code::EmptyIdentifier, f.name, f.name + ": empty reference"});
      continue;
    }
    switch (f.primitive) {
      case PrimitiveType::String:
        if (!v.is_string()) mismatch("String");
        break;
      case PrimitiveType::Integer:
        if (!v.is_int()) mismatch("Integer");
        break;
      case PrimitiveType::Boolean:
        if (!v.is_int() || (v.as_int() != 0 && v.as_int() != 1)) mismatch("Boolean (0 or 1)");
        break;
      case PrimitiveType::DateTime:
        if (!v.is_string() || !is_iso8601(v.as_string())) mismatch("ISO-8601 DateTime");
        break;
    }
  }
  for (const auto& [name, _] : fields) {
    if (!decl->field(name))
      errors.push_back({InstanceError::Code::UnknownField, name, name + ": not declared in '" + decl->name + "'"});
  }
  if (!decl->identified_by.empty()) {
    auto it = fields.find(decl->identified_by);
    if (it != fields.end() && it->second.is_string() && it->second.as_string().empty()) {
      errors.push_back({InstanceError::Code::EmptyIdentifier, decl->identified_by,
                        decl->identified_by + " required"});
    }
  }
  return errors;
}

}  // namespace bcer::model
