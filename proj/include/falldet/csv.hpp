#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace falldet::csv {

/// Shortest decimal string that round-trips back to exactly this double.
/// Keeps written files stable across runs and platforms.
std::string format_double(double v);

/// Parse a full cell as a double. Leading/trailing whitespace is ignored;
/// returns nullopt for anything else left over.
std::optional<double> parse_double(std::string_view cell);

/// Missing cell: empty after trimming, or "nan" in any letter case.
bool is_missing(std::string_view cell);

/// Parse a timestamp cell in milliseconds. Fractional values are rounded
/// half-up. Throws std::invalid_argument on garbage.
std::int64_t parse_timestamp_ms(std::string_view cell, const std::string& context);

std::string_view trim(std::string_view s);

/// Split one CSV line on commas and trim each cell. No quoting: the formats
/// handled here are numeric tables with plain identifiers.
std::vector<std::string> split_line(std::string_view line);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Read a whole CSV file (header + rows). Throws std::invalid_argument if
/// the file is absent or has no header, and on ragged rows.
Table read_table(const std::filesystem::path& path);

/// Write lines joined by '\n' with a trailing newline, atomically enough for
/// our purposes (truncate + write).
void write_text(const std::filesystem::path& path, const std::string& content);

std::string join(const std::vector<std::string>& cells);

}  // namespace falldet::csv
