#include "falldet/csv.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace falldet::csv {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::optional<double> parse_double(std::string_view cell) {
    const std::string_view s = trim(cell);
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

bool is_missing(std::string_view cell) {
    const std::string_view s = trim(cell);
    if (s.empty()) return true;
    if (s.size() != 3) return false;
    auto lower = [](char c) {
        return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    };
    return lower(s[0]) == 'n' && lower(s[1]) == 'a' && lower(s[2]) == 'n';
}

std::int64_t parse_timestamp_ms(std::string_view cell, const std::string& context) {
    const auto value = parse_double(cell);
    if (!value || !std::isfinite(*value)) {
        throw std::invalid_argument(context + ": bad timestamp '" +
                                    std::string(trim(cell)) + "'");
    }
    // Half-up: 0.5 rounds toward +infinity.
    return static_cast<std::int64_t>(std::floor(*value + 0.5));
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        const std::string_view cell =
            line.substr(start, comma == std::string_view::npos
                                   ? std::string_view::npos
                                   : comma - start);
        cells.emplace_back(trim(cell));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open file: " + path.string());
    }
    Table table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            table.header = split_line(line);
            have_header = true;
            continue;
        }
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size()) {
            std::ostringstream msg;
            msg << path.string() << ": row " << table.rows.size() + 1
                << " has " << cells.size() << " cells, header has "
                << table.header.size();
            throw std::invalid_argument(msg.str());
        }
        table.rows.push_back(std::move(cells));
    }
    if (!have_header || table.header.empty()) {
        throw std::invalid_argument("empty csv file: " + path.string());
    }
    return table;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write file: " + path.string());
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    return line;
}

}  // namespace falldet::csv
