#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace stackfed::csv {

// Reads one record; quoted fields may hold commas, doubled quotes and
// newlines. `quoted[i]` tells whether field i was quoted. False at EOF.
bool read_record(std::istream& in, std::vector<std::string>& fields,
                 std::vector<bool>* quoted = nullptr);

// Quotes a field when it contains a comma, quote or line break.
std::string escape(std::string_view field);

}  // namespace stackfed::csv
