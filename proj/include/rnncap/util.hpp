/*
 * Copyright 2026 The rnncap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RNNCAP_UTIL_HPP
#define RNNCAP_UTIL_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rnncap {

/// FNV-1a 64-bit hash of a byte sequence.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Shortest decimal form of a double that parses back to the same bits.
/// Used everywhere a floating value is serialized so that reports are
/// byte-stable across runs.
std::string format_double(double v);

/// Lower-case hexadecimal rendering of a 64-bit value, zero padded.
std::string to_hex(std::uint64_t v);

/// Writes content to path atomically: a sibling temp file is written,
/// flushed, and renamed over the target. Throws std::runtime_error on I/O
/// failure.
void atomic_write_file(const std::string& path, const std::string& content);

/// Worker count for parallel loops: RNNCAP_THREADS if set and positive,
/// otherwise the hardware concurrency (at least 1).
std::size_t resolved_thread_count();

/// Runs fn(i) for i in [0, count) on up to resolved_thread_count() workers.
/// Each index is an independent work item writing only to its own slot, so
/// parallel execution produces exactly the serial result. Exceptions from
/// workers are rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace rnncap

#endif  // RNNCAP_UTIL_HPP
