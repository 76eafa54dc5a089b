// Copyright 2026 The Canopy Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace canopy {

/// Reads a whole file into memory. Throws IoError when unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and renames it into place, so readers
/// never observe a partially written file.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& bytes);

/// Regular files directly under `dir` with the given extension (".xml"),
/// sorted by file name. Throws IoError when `dir` is not a directory.
std::vector<std::filesystem::path> list_files(
    const std::filesystem::path& dir, const std::string& extension);

}  // namespace canopy
