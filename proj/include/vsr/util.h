// include/vsr/util.h

// Copyright 2026 The vsrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VSR_UTIL_H_
#define VSR_UTIL_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace vsr {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();
inline constexpr const char *kToolVersion = "vsrlab 1.0.0";

// log(exp(a) + exp(b)) without overflow; kLogZero is the additive identity.
double LogAdd(double a, double b);

// Warnings go to stderr with a "WARNING" prefix, one line each.
void LogWarning(const std::string &msg);
void LogInfo(const std::string &msg);
// Silences LogInfo (warnings are always printed).
void SetVerbose(bool verbose);

std::string Trim(std::string_view s);
std::vector<std::string> SplitWhitespace(std::string_view s);
std::vector<std::string> Split(std::string_view s, char sep);
std::string Join(const std::vector<std::string> &parts, std::string_view sep);
// Shortest text that reads back to the same double.
std::string FormatDouble(double v);

// Hex SHA-256 of a byte string / of a file's contents.
std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path &path);

// Runs fn(i) for i in [0, n) over up to `jobs` threads (0 = hardware
// concurrency). fn must only write to per-index state; callers reduce the
// results afterwards in index order, so output never depends on thread count.
void ParallelFor(size_t n, const std::function<void(size_t)> &fn,
                 unsigned jobs = 0);

}  // namespace vsr

#endif  // VSR_UTIL_H_
