#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace promptlit::csv {

using Row = std::vector<std::string>;

/// RFC 4180 field quoting: quotes only when the field needs it.
std::string escape(std::string_view field);
std::string format_row(const Row& row);

/// Parses a whole document; quoted fields may span lines. A trailing newline
/// does not produce an empty row.
std::vector<Row> parse(std::string_view document);

}  // namespace promptlit::csv
