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

#include "mosra/manifest.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mosra/errors.h"

namespace mosra {
namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> ParseCell(const std::string& cell, int line_no) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw FormatError("manifest line " + std::to_string(line_no) +
                      ": not a number: '" + cell + "'");
  }
  return v;
}

std::string FormatCell(const std::optional<double>& v) {
  if (!v) return {};
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), *v);
  return std::string(buf, res.ptr);
}

}  // namespace

const char* RoleName(Role role) {
  return role == Role::kMos ? "mos" : "acoustics";
}

std::string DatasetManifest::ResolvePath(const ManifestRow& row) const {
  const std::filesystem::path p(row.path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (std::filesystem::path(base_dir) / p).string();
}

void ValidateRow(const ManifestRow& row) {
  if (row.role == Role::kMos) {
    if (!row.mos || !(*row.mos >= 1.0 && *row.mos <= 5.0)) {
      throw FormatError("mos row '" + row.path + "' needs a mos label in [1, 5]");
    }
    return;
  }
  for (const auto* label : {&row.snr_db, &row.sti, &row.t60_s, &row.drr_db,
                            &row.c50_db}) {
    if (!*label || !std::isfinite(**label)) {
      throw FormatError("acoustics row '" + row.path +
                        "' must carry all five finite acoustic labels");
    }
  }
}

DatasetManifest ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  DatasetManifest manifest;
  manifest.base_dir = std::filesystem::path(path).parent_path().string();

  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) {
    throw FormatError("manifest '" + path + "' must start with header '" +
                      std::string(kManifestHeader) + "'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != 8) {
      throw FormatError("manifest line " + std::to_string(line_no) +
                        ": expected 8 cells, got " + std::to_string(cells.size()));
    }
    ManifestRow row;
    row.path = cells[0];
    if (cells[1] == "mos") {
      row.role = Role::kMos;
    } else if (cells[1] == "acoustics") {
      row.role = Role::kAcoustics;
    } else {
      throw FormatError("manifest line " + std::to_string(line_no) +
                        ": unknown role '" + cells[1] + "'");
    }
    row.mos = ParseCell(cells[2], line_no);
    row.snr_db = ParseCell(cells[3], line_no);
    row.sti = ParseCell(cells[4], line_no);
    row.t60_s = ParseCell(cells[5], line_no);
    row.drr_db = ParseCell(cells[6], line_no);
    row.c50_db = ParseCell(cells[7], line_no);
    ValidateRow(row);
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

void WriteManifest(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest '" + path + "'");
  out << kManifestHeader << '\n';
  for (const ManifestRow& row : manifest.rows) {
    if (row.path.find(',') != std::string::npos) {
      throw InvalidArgument("manifest paths may not contain commas: " + row.path);
    }
    out << row.path << ',' << RoleName(row.role) << ',' << FormatCell(row.mos)
        << ',' << FormatCell(row.snr_db) << ',' << FormatCell(row.sti) << ','
        << FormatCell(row.t60_s) << ',' << FormatCell(row.drr_db) << ','
        << FormatCell(row.c50_db) << '\n';
  }
  if (!out) throw IoError("error writing manifest '" + path + "'");
}

}  // namespace mosra
