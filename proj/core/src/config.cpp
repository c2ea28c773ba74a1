#include "graspmap/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "graspmap/errors.hpp"

namespace graspmap {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace

void KeyValueConfig::insert_line(const std::string& raw, int lineno) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') return;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
        throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    entries_[key] = value;
}

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    KeyValueConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) cfg.insert_line(line, ++lineno);
    return cfg;
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) cfg.insert_line(line, ++lineno);
    return cfg;
}

void KeyValueConfig::apply_overrides(const std::vector<std::string>& overrides) {
    int n = 0;
    for (const std::string& o : overrides) insert_line(o, ++n);
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw ConfigError("");
        return v;
    } catch (...) {
        throw ConfigError("config: " + key + " is not a number: " + it->second);
    }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) throw ConfigError("");
        return v;
    } catch (...) {
        throw ConfigError("config: " + key + " is not an integer: " + it->second);
    }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) throw ConfigError("");
        return v;
    } catch (...) {
        throw ConfigError("config: " + key + " is not an unsigned integer: " + it->second);
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config: " + key + " is not a boolean: " + it->second);
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key,
                                              const std::vector<int>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<int> out;
    std::istringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(trim(item)));
        } catch (...) {
            throw ConfigError("config: " + key + " is not an integer list: " + it->second);
        }
    }
    if (out.empty()) {
        throw ConfigError("config: " + key + " is an empty list");
    }
    return out;
}

void KeyValueConfig::validate_keys(const std::vector<std::string>& known) const {
    for (const auto& [key, _] : entries_) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("config: unknown key: " + key);
        }
    }
}

} // namespace graspmap
