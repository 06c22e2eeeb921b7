/*
 * Copyright (c) 2026 The SVGNet Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <set>
#include <string>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "svgnet/error.hpp"

namespace svgnet::detail {

/// Reads optional fields from a JSON object and rejects unknown keys.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) fail(ErrorCode::ConfigError, context_ + " must be a JSON object");
  }

  template <typename V>
  void get(const char* key, V& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    const auto& v = *it;
    if constexpr (std::is_same_v<V, bool>) {
      if (!v.is_boolean()) bad(key, "a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<V> && std::is_unsigned_v<V>) {
      if (!v.is_number_integer() || v.get<long long>() < 0) bad(key, "a non-negative integer");
      out = v.get<V>();
    } else if constexpr (std::is_integral_v<V>) {
      if (!v.is_number_integer()) bad(key, "an integer");
      out = v.get<V>();
    } else if constexpr (std::is_floating_point_v<V>) {
      if (!v.is_number()) bad(key, "a number");
      out = v.get<V>();
    } else if constexpr (std::is_same_v<V, std::string>) {
      if (!v.is_string()) bad(key, "a string");
      out = v.get<std::string>();
    } else {
      out = v;
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) fail(ErrorCode::ConfigError, "unknown key '" + k + "' in " + context_);
    }
  }

 private:
  [[noreturn]] void bad(const char* key, const char* what) const {
    fail(ErrorCode::ConfigError, context_ + "." + key + " must be " + what);
  }

  const nlohmann::json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

}  // namespace svgnet::detail
