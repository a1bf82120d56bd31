#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cosguide {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat key=value configuration; '#' starts a comment, dotted keys group
/// sections. Later assignments (e.g. command-line overrides) win.
class Config {
public:
    static Config from_file(const std::string& path);

    void set(const std::string& key, const std::string& value);
    void set_line(const std::string& line); // "key = value"

    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key) const; // comma separated

    /// Sorted "key=value" lines; the basis of the config hash.
    std::string canonical() const;
    std::uint64_t hash() const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t v);

} // namespace cosguide
