#include "cosguide/csv.hpp"

#include <sstream>

namespace cosguide {

CsvTable CsvTable::read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::size_t b = line.find_first_not_of("# ");
            t.comments.push_back(b == std::string::npos ? "" : line.substr(b));
            continue;
        }
        if (!have_header) {
            t.header = line;
            have_header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        t.rows.push_back(std::move(cells));
    }
    return t;
}

std::string CsvTable::comment_value(const std::string& key) const {
    for (const std::string& c : comments) {
        if (c.rfind(key + "=", 0) == 0) return c.substr(key.size() + 1);
    }
    return {};
}

} // namespace cosguide
