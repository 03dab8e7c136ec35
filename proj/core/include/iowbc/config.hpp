// Copyright 2026 The iowbc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IOWBC_CONFIG_HPP_
#define IOWBC_CONFIG_HPP_

#include <map>
#include <string>
#include <vector>

#include "iowbc/common.hpp"

namespace iowbc {

// Flat "key = value" text files. '#' starts a comment, blank lines are
// ignored, later duplicates win. Values are scalars, words, or
// space-separated number lists. See docs/config_reference.md for the key
// catalog.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_text(const std::string& text, const std::string& origin = "<text>");

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  VecX get_vector(const std::string& key) const;
  VecX get_vector(const std::string& key, const VecX& fallback) const;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, int value);

  /// Keys sharing a prefix, in lexicographic order ("command." etc).
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  /// Verbatim bytes of the file this config was parsed from. Used for the
  /// run-directory snapshot, which must be byte-identical to the input.
  const std::string& raw_text() const { return raw_text_; }
  const std::string& origin() const { return origin_; }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::string raw_value(const std::string& key) const;

  std::map<std::string, std::string> kv_;
  std::string raw_text_;
  std::string origin_;
};

/// Formats a double so that re-reading reproduces the value and repeated
/// runs produce identical bytes.
std::string fmt_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace iowbc

#endif  // IOWBC_CONFIG_HPP_
