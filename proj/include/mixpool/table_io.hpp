#pragma once

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mixpool/errors.hpp"

// Small text-table utilities shared by the ingest pipeline and the CLI:
// locale-independent number formatting/parsing, CSV line handling, and file
// digests. Formatting uses "%.17g" so a written double reparses to the exact
// same bits, which keeps re-ingesting our own output byte-stable.

namespace mixpool::io {

inline std::string format_double(double value, const char* fmt = "%.17g") {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, fmt, value);
  return buffer;
}

inline double parse_double(const std::string& field, const std::string& context) {
  errno = 0;
  const char* begin = field.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || std::isnan(value)) {
    throw InputFormatError(context + ": expected a number, got '" + field + "'");
  }
  return value;
}

// Splits one CSV line on commas. Fields must not themselves contain commas
// or quotes (none of our identifiers or numbers do). A trailing '\r' from
// CRLF input is stripped.
inline std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputFormatError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

// FNV-1a 64-bit digest, reported as 16 hex characters.
inline std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

inline std::string digest_file(const std::filesystem::path& path) {
  return fnv1a64_hex(read_file_bytes(path));
}

}  // namespace mixpool::io
