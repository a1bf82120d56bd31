#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cosguide {

/// Deterministic CSV writer: doubles rendered with %.17g (round-trip
/// exact), identical inputs give byte-identical files.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& comments,
              const std::string& header)
        : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open output file: " + path);
        for (const std::string& c : comments) out_ << "# " << c << "\n";
        out_ << header << "\n";
    }

    void field(double v) {
        sep();
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out_ << buf;
    }
    void field(int v) {
        sep();
        out_ << v;
    }
    void field(long long v) {
        sep();
        out_ << v;
    }
    void field(std::size_t v) {
        sep();
        out_ << v;
    }
    void field(const std::string& v) {
        sep();
        out_ << v;
    }
    void end_row() {
        out_ << "\n";
        first_ = true;
    }

    template <class... Ts> void row(Ts... vals) {
        (field(vals), ...);
        end_row();
    }

private:
    void sep() {
        if (!first_) out_ << ",";
        first_ = false;
    }
    std::ofstream out_;
    bool first_ = true;
};

/// Minimal reader counterpart: skips '#' comments and the header row.
struct CsvTable {
    std::vector<std::string> comments;
    std::string header;
    std::vector<std::vector<std::string>> rows;

    static CsvTable read(const std::string& path);
    /// Value of "key=value" comment lines, empty if absent.
    std::string comment_value(const std::string& key) const;
};

} // namespace cosguide
