#include "stackfed/csv.hpp"

#include <istream>

namespace stackfed::csv {

bool read_record(std::istream& in, std::vector<std::string>& fields, std::vector<bool>* quoted) {
  fields.clear();
  if (quoted) quoted->clear();
  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  bool any = false;
  const auto finish_field = [&]() {
    fields.push_back(std::move(field));
    if (quoted) quoted->push_back(was_quoted);
    field.clear();
    was_quoted = false;
  };
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      was_quoted = true;
    } else if (c == ',') {
      finish_field();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  finish_field();
  return true;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace stackfed::csv
