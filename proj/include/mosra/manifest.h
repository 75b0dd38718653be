// Copyright 2026 The MOSRA Authors. All Rights Reserved.
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

#ifndef MOSRA_MANIFEST_H_
#define MOSRA_MANIFEST_H_

#include <optional>
#include <string>
#include <vector>

namespace mosra {

enum class Role { kMos, kAcoustics };

const char* RoleName(Role role);

struct ManifestRow {
  std::string path;
  Role role = Role::kAcoustics;
  std::optional<double> mos;
  std::optional<double> snr_db;
  std::optional<double> sti;
  std::optional<double> t60_s;
  std::optional<double> drr_db;
  std::optional<double> c50_db;
};

// CSV with header `path,role,mos,snr_db,sti,t60_s,drr_db,c50_db`. Empty
// cells mark inapplicable labels. Relative paths are resolved against the
// directory holding the manifest.
struct DatasetManifest {
  std::vector<ManifestRow> rows;
  std::string base_dir;

  std::string ResolvePath(const ManifestRow& row) const;
};

inline constexpr const char* kManifestHeader =
    "path,role,mos,snr_db,sti,t60_s,drr_db,c50_db";

// Throws FormatError on a malformed file or a row that breaks the role
// contract (acoustics rows need all five labels, MOS rows need mos in
// [1, 5]).
DatasetManifest ReadManifest(const std::string& path);
void WriteManifest(const std::string& path, const DatasetManifest& manifest);
void ValidateRow(const ManifestRow& row);

}  // namespace mosra

#endif  // MOSRA_MANIFEST_H_
