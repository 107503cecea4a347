// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cascade {

// RFC 4180 with UTF-8 payloads: quoted fields, doubled-quote escapes,
// LF or CRLF record ends. The header row is required by every caller.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable read_csv_text(const std::string& text);

std::string csv_escape(const std::string& field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace cascade
