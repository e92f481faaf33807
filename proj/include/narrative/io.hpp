#pragma once

// File plumbing shared by the persistence formats.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nd {

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& file, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Splits one CSV record. Double-quoted fields may contain commas and "".
std::vector<std::string> split_csv_line(std::string_view line);

/// Parses a finite double; throws std::invalid_argument otherwise.
double parse_double(std::string_view s);

std::string hex64(std::uint64_t v);

/// Shortest round-trip text for a double.
std::string format_double(double v);

}  // namespace nd
