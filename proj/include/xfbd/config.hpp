#pragma once

#include <map>
#include <string>

namespace xfbd {

/// Flat `key = value` config file: one pair per line, '#' comments, blank
/// lines ignored. Values keep their literal text; typed getters convert.
class Config {
public:
    Config() = default;
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace xfbd
