#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace groupcf::csv {

using Row = std::vector<std::string>;

// Incremental RFC-4180 reader. Quoted fields may contain separators, doubled
// quotes and line breaks. line() is the 1-based line where the last returned
// record started.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::optional<Row> next();
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t current_line_ = 1;
  std::size_t record_line_ = 0;
};

std::string escape(std::string_view field);
std::string join(const Row& row);

}  // namespace groupcf::csv
