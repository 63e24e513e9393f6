#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bother::io {

// Splits one CSV line; double quotes delimit fields and "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

}  // namespace bother::io
