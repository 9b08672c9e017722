#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace tipping {

// 17 significant digits, round-trip exact for doubles.
std::string fmt17(double v);

// RFC 4180 writer: header row, CRLF-free, fields quoted only when needed.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& fields);

private:
    void write(const std::vector<std::string>& fields);
    std::ofstream out_;
    std::size_t width_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;
    std::vector<double> numbers(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace tipping
