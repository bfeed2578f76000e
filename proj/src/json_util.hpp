#pragma once

// Checked accessors shared by the IR, stats and plan readers.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"
#include "mbs/error.hpp"

namespace mbs::detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] inline void schema_error(const std::string& message) {
  throw Error(ErrorCategory::kSchema, message);
}

inline json parse_json(std::string_view document, std::string_view what) {
  try {
    return json::parse(document);
  } catch (const json::parse_error& e) {
    schema_error(std::string(what) + ": not valid JSON (" + e.what() + ")");
  }
}

inline const json& field(const json& object, const char* key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) schema_error(where + ": missing field '" + key + "'");
  return *it;
}

inline std::int64_t get_int(const json& object, const char* key, const std::string& where) {
  const json& value = field(object, key, where);
  if (!value.is_number_integer()) schema_error(where + ": field '" + key + "' must be an integer");
  return value.get<std::int64_t>();
}

inline int get_small_int(const json& object, const char* key, const std::string& where) {
  const std::int64_t value = get_int(object, key, where);
  if (value < -1'000'000'000 || value > 1'000'000'000) {
    schema_error(where + ": field '" + key + "' is out of range");
  }
  return static_cast<int>(value);
}

inline double get_number(const json& object, const char* key, const std::string& where) {
  const json& value = field(object, key, where);
  if (!value.is_number()) schema_error(where + ": field '" + key + "' must be a number");
  return value.get<double>();
}

inline bool get_bool(const json& object, const char* key, const std::string& where) {
  const json& value = field(object, key, where);
  if (!value.is_boolean()) schema_error(where + ": field '" + key + "' must be a boolean");
  return value.get<bool>();
}

inline std::string get_string(const json& object, const char* key, const std::string& where) {
  const json& value = field(object, key, where);
  if (!value.is_string()) schema_error(where + ": field '" + key + "' must be a string");
  return value.get<std::string>();
}

inline const json& get_array(const json& object, const char* key, const std::string& where) {
  const json& value = field(object, key, where);
  if (!value.is_array()) schema_error(where + ": field '" + key + "' must be an array");
  return value;
}

inline void require_object(const json& value, const std::string& where) {
  if (!value.is_object()) schema_error(where + ": expected an object");
}

inline void reject_unknown_keys(const json& object, std::initializer_list<std::string_view> allowed,
                                const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (std::string_view name : allowed) known = known || key == name;
    if (!known) schema_error(where + ": unknown field '" + key + "'");
  }
}

// Accepts "<family>/<major>" or "<family>/<major>.<minor>" with major == 1.
inline void check_version(const json& object, std::string_view family, const std::string& where) {
  const std::string version = get_string(object, "version", where);
  const std::string prefix = std::string(family) + "/";
  if (version.rfind(prefix, 0) != 0) {
    schema_error(where + ": field 'version' must start with '" + prefix + "', got '" + version + "'");
  }
  const std::string rest = version.substr(prefix.size());
  const std::string major = rest.substr(0, rest.find('.'));
  if (major != "1") schema_error(where + ": unsupported version '" + version + "'");
}

}  // namespace mbs::detail
