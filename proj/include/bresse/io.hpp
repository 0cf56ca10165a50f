#pragma once

#include <string>
#include <vector>

namespace bresse {

/// Writes via a sibling temp file and rename, so readers never see a partial file.
void atomic_write(const std::string& path, const std::string& content);

/// Appends one line (newline added) to a file, creating it if needed.
void append_line(const std::string& path, const std::string& line);

std::string read_file(const std::string& path);

/// Splits CSV text into rows of fields (no quoting; '.' decimals, '\n' endings).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Shortest round-trip text for a double.
std::string fmt_double(double x);

}  // namespace bresse
