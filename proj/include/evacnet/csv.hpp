#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace evacnet::csv {

using Row = std::vector<std::string>;

/// RFC 4180 reader: comma separated, double-quoted fields may hold commas,
/// newlines and doubled quotes. A UTF-8 BOM on the first field is dropped.
/// Throws Error(MalformedRow) on an unterminated quote.
std::vector<Row> read(std::istream& in);

/// Quotes the field only when it needs it.
std::string escape(std::string_view field);

}  // namespace evacnet::csv
