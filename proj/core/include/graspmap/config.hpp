#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace graspmap {

/// Line-oriented "section.key=value" configuration. '#' starts a comment.
/// Lookups are typed; unknown keys are rejected by validate_keys().
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig from_file(const std::string& path);
    static KeyValueConfig from_string(const std::string& text);

    /// Applies "key=value" override strings on top of the file contents.
    void apply_overrides(const std::vector<std::string>& overrides);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key,
                                  const std::vector<int>& fallback) const;

    /// Throws ConfigError when a stored key is not in `known`.
    void validate_keys(const std::vector<std::string>& known) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    void insert_line(const std::string& line, int lineno);

    std::map<std::string, std::string> entries_;
};

} // namespace graspmap
