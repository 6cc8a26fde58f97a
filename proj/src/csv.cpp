#include "svhom/csv.hpp"

#include <cstdio>
#include <sstream>

namespace svhom {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : out_(path), ncols_(columns.size()), path_(path) {
    if (!out_) throw ConfigError("cannot open output file '" + path + "'");
    for (std::size_t i = 0; i < columns.size(); ++i)
        out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
}

std::string CsvWriter::fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void CsvWriter::row(std::initializer_list<double> values) {
    require(values.size() == ncols_, "CsvWriter: wrong column count for " + path_);
    std::size_t i = 0;
    for (double v : values) out_ << fmt(v) << (++i < ncols_ ? "," : "\n");
}

void CsvWriter::row_mixed(const std::vector<std::string>& cells) {
    require(cells.size() == ncols_, "CsvWriter: wrong column count for " + path_);
    for (std::size_t i = 0; i < cells.size(); ++i)
        out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
}

double CsvTable::num(std::size_t r, std::size_t c) const { return std::stod(rows[r][c]); }

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open input file '" + path + "'");
    CsvTable t;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (header) {
            t.columns = cells;
            header = false;
        } else {
            t.rows.push_back(cells);
        }
    }
    return t;
}

}  // namespace svhom
