// Copyright 2026 The MVCL Authors.
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

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mvcl/errors.hpp"

namespace mvcl {

using json = nlohmann::json;

namespace detail {

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace detail

/// Calls `visit(line_number, record)` for every non-blank line. Invalid JSON
/// becomes a ParseError carrying the line number; so does any
/// json::exception escaping `visit` (missing field, wrong type).
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(std::size_t, const json&)>& visit) {
  auto in = detail::open_for_read(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    try {
      visit(line_no, record);
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 1, e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

inline void write_json_file(const std::filesystem::path& path, const json& value) {
  write_text_file(path, value.dump(1) + "\n");
}

/// Fetches a required field, failing with a message naming it.
template <typename T>
T require_field(const json& record, const char* name) {
  auto it = record.find(name);
  if (it == record.end()) throw json::other_error::create(501, std::string("missing field '") + name + "'", &record);
  return it->template get<T>();
}

}  // namespace mvcl
