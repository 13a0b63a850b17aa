#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

namespace distillflow {

// Ordered key=value record: one pair per line, '#' starts a comment,
// surrounding whitespace is ignored. Doubles are written in shortest
// round-trip form so a record re-reads bit-exactly.
class KeyValues {
public:
    static KeyValues parse(std::istream& in);
    static KeyValues load(const std::filesystem::path& path);

    void write(std::ostream& out) const;
    std::string str() const;

    bool contains(std::string_view key) const { return values_.find(std::string(key)) != values_.end(); }
    const std::map<std::string, std::string, std::less<>>& entries() const { return values_; }

    void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
    void set(std::string key, double value);
    void set(std::string key, std::int64_t value);
    void set(std::string key, int value) { set(std::move(key), static_cast<std::int64_t>(value)); }
    void set(std::string key, std::uint64_t value);
    void set(std::string key, bool value) { set(std::move(key), std::string(value ? "1" : "0")); }

    // Typed getters throw ConfigError on a missing key or malformed value.
    const std::string& get(std::string_view key) const;
    double get_double(std::string_view key) const;
    std::int64_t get_int(std::string_view key) const;
    std::uint64_t get_uint(std::string_view key) const;
    bool get_bool(std::string_view key) const;

private:
    std::map<std::string, std::string, std::less<>> values_;
};

std::string format_double(double v);
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);
std::uint64_t parse_uint(std::string_view text);
bool parse_bool(std::string_view text);

}  // namespace distillflow
