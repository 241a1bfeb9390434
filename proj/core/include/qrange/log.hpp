/*
 * Copyright 2026 The qrange Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <sstream>
#include <string>
#include <string_view>

namespace qrange::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Verbosity is read once from the SIRA_LOG environment variable
// (error|warn|info|debug, default warn) unless overridden.
Level level();
void set_level(Level lvl);
Level parse_level(std::string_view text);

void write(Level lvl, std::string_view message);

template <typename... Args>
void emit(Level lvl, const Args&... args) {
  if (lvl > level()) return;
  std::ostringstream os;
  (os << ... << args);
  write(lvl, os.str());
}

template <typename... Args>
void warn(const Args&... args) {
  emit(Level::warn, args...);
}
template <typename... Args>
void info(const Args&... args) {
  emit(Level::info, args...);
}
template <typename... Args>
void debug(const Args&... args) {
  emit(Level::debug, args...);
}

}  // namespace qrange::log
