#include "distillflow/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "distillflow/errors.hpp"

namespace distillflow {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_integral(std::string_view text) {
    text = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("not an integer: '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    text = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::int64_t parse_int(std::string_view text) { return parse_integral<std::int64_t>(text); }
std::uint64_t parse_uint(std::string_view text) { return parse_integral<std::uint64_t>(text); }

bool parse_bool(std::string_view text) {
    text = trim(text);
    if (text == "1" || text == "true" || text == "yes") return true;
    if (text == "0" || text == "false" || text == "no") return false;
    throw ConfigError("not a boolean: '" + std::string(text) + "'");
}

KeyValues KeyValues::parse(std::istream& in) {
    KeyValues kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key(trim(view.substr(0, eq)));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (kv.contains(key)) throw ConfigError("duplicate key '" + key + "'");
        kv.values_[key] = std::string(trim(view.substr(eq + 1)));
    }
    return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse(in);
}

void KeyValues::write(std::ostream& out) const {
    for (const auto& [k, v] : values_) out << k << '=' << v << '\n';
}

std::string KeyValues::str() const {
    std::ostringstream out;
    write(out);
    return out.str();
}

void KeyValues::set(std::string key, double value) { values_[std::move(key)] = format_double(value); }
void KeyValues::set(std::string key, std::int64_t value) { values_[std::move(key)] = std::to_string(value); }
void KeyValues::set(std::string key, std::uint64_t value) { values_[std::move(key)] = std::to_string(value); }

const std::string& KeyValues::get(std::string_view key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key '" + std::string(key) + "'");
    return it->second;
}

double KeyValues::get_double(std::string_view key) const { return parse_double(get(key)); }
std::int64_t KeyValues::get_int(std::string_view key) const { return parse_int(get(key)); }
std::uint64_t KeyValues::get_uint(std::string_view key) const { return parse_uint(get(key)); }
bool KeyValues::get_bool(std::string_view key) const { return parse_bool(get(key)); }

}  // namespace distillflow
