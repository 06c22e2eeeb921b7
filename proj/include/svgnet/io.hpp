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

#include <filesystem>
#include <string>
#include <string_view>

namespace svgnet::io {

/// Reads a whole file; throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// std::filesystem::create_directories reporting failures as IoError.
void ensure_directory(const std::filesystem::path& path);

/// SHA-free content fingerprint (FNV-1a 64) rendered as hex.
std::string fingerprint(std::string_view content);

}  // namespace svgnet::io
