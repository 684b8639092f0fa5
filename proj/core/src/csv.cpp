#include "engrank/csv.hpp"

#include <charconv>
#include <istream>
#include <system_error>

#include "engrank/errors.hpp"

namespace engrank {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

}  // namespace

CsvDocument read_csv(std::istream& in) {
    CsvDocument doc;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (doc.header.empty()) {
            doc.header = split_line(line);
        } else {
            doc.rows.push_back(split_line(line));
        }
    }
    if (doc.header.empty()) throw DataError("csv: no header row");
    return doc;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

std::string join_csv_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out.push_back(',');
        out += cells[i];
    }
    out.push_back('\n');
    return out;
}

}  // namespace engrank
