#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace thyroid::csv {

using Row = std::vector<std::string>;

// Parses comma-delimited text with RFC 4180 quoting. A UTF-8 byte-order mark
// is skipped; CRLF and LF line endings are both accepted. Blank lines are
// dropped.
std::vector<Row> parse(std::string_view text);

std::vector<Row> read_file(const std::filesystem::path& path);

// Quotes a field only when it contains a delimiter, quote, or line break.
std::string escape(std::string_view field);

std::string format_row(const Row& row);

// Accumulates rows and renders them with '\n' line endings.
class Writer {
public:
    explicit Writer(Row header) { add(std::move(header)); }

    void add(const Row& row) {
        text_ += format_row(row);
        text_ += '\n';
    }

    const std::string& str() const noexcept { return text_; }

private:
    std::string text_;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace thyroid::csv
