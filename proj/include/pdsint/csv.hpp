#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "pdsint/errors.hpp"

namespace pdsint {

/// Comma-separated table; reals are written with 17 significant digits.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t rows() const noexcept { return rows_.size(); }
    const std::vector<std::string>& row(std::size_t i) const { return rows_.at(i); }

    void add_row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format(v));
        add_cells(std::move(cells));
    }

    void add_cells(std::vector<std::string> cells) {
        if (cells.size() != header_.size())
            throw ModelError("CsvTable: row has " + std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header_.size()));
        rows_.push_back(std::move(cells));
    }

    static std::string format(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    std::string str() const {
        std::string out;
        append_line(out, header_);
        for (const auto& r : rows_) append_line(out, r);
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot open '" + path + "' for writing");
        f << str();
        if (!f) throw Error("write failed for '" + path + "'");
    }

private:
    static void append_line(std::string& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace pdsint
