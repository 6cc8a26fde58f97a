#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "svhom/errors.hpp"

namespace svhom {

// Fixed column order, header row, floats at 17 significant digits: re-running
// an unchanged config must reproduce byte-identical files.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns);

    void row(std::initializer_list<double> values);
    void row_mixed(const std::vector<std::string>& cells);
    static std::string fmt(double v);

private:
    std::ofstream out_;
    std::size_t ncols_;
    std::string path_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    double num(std::size_t r, std::size_t c) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace svhom
