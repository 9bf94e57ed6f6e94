#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "trecxfer/common.hpp"

namespace trecxfer::csv {

using Row = std::vector<std::string>;

/// A parsed row plus the physical line it started on (rows may span lines).
struct NumberedRow {
    std::size_t line;
    Row fields;
};

/// RFC-4180 reader: quoted fields may contain commas, doubled quotes and line breaks.
/// Accepts LF or CRLF terminators and a leading UTF-8 byte-order mark.
inline std::vector<NumberedRow> parse(std::string_view text, const std::string& source = "<csv>")
{
    if (text.substr(0, 3) == "\xEF\xBB\xBF") {
        text.remove_prefix(3);
    }
    std::vector<NumberedRow> rows;
    Row row;
    std::string field;
    std::size_t line = 1;
    std::size_t row_start = 1;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool row_has_content = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back({row_start, std::move(row)});
        row.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                }
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty() || field_was_quoted) {
                throw ParseError(source, line, "unexpected quote inside unquoted field");
            }
            in_quotes = true;
            field_was_quoted = true;
            row_has_content = true;
            break;
        case ',':
            end_field();
            row_has_content = true;
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') {
                break;
            }
            field.push_back(c);
            break;
        case '\n':
            if (row_has_content || !field.empty()) {
                end_row();
            }
            ++line;
            row_start = line;
            break;
        default:
            if (field_was_quoted) {
                throw ParseError(source, line, "characters after closing quote");
            }
            field.push_back(c);
            row_has_content = true;
        }
    }
    if (in_quotes) {
        throw ParseError(source, row_start, "unterminated quoted field");
    }
    if (row_has_content || !field.empty()) {
        end_row();
    }
    return rows;
}

inline std::string quote(std::string_view field)
{
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string format_row(const Row& row)
{
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) {
            out.push_back(',');
        }
        out += quote(row[i]);
    }
    out.push_back('\n');
    return out;
}

}  // namespace trecxfer::csv
