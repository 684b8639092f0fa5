#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace engrank {

// Comma-separated, header row, no quoting (the survey schema never needs
// escaping). Blank lines are skipped.
struct CsvDocument {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvDocument read_csv(std::istream& in);

// Shortest decimal form that round-trips through a double. Every CSV and
// console emitter goes through this so re-emitting a report is byte-stable.
std::string format_double(double value);

std::string join_csv_row(const std::vector<std::string>& cells);

}  // namespace engrank
