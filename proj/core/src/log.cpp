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

#include "qrange/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>

namespace qrange::log {
namespace {

std::atomic<int>& current() {
  static std::atomic<int> lvl = [] {
    const char* env = std::getenv("SIRA_LOG");
    return static_cast<int>(env ? parse_level(env) : Level::warn);
  }();
  return lvl;
}

constexpr std::string_view kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

Level level() { return static_cast<Level>(current().load()); }

void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

Level parse_level(std::string_view text) {
  for (int i = 0; i < 4; ++i) {
    if (text == kNames[i]) return static_cast<Level>(i);
  }
  if (text == "trace" || text == "all") return Level::debug;
  return Level::warn;
}

void write(Level lvl, std::string_view message) {
  std::cerr << "[" << kNames[static_cast<int>(lvl)] << "] " << message << '\n';
}

}  // namespace qrange::log
