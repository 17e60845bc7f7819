#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facet/errors.hpp"

namespace facet {

// Line-oriented run configuration: `[section]` headers and `key = value`
// lines, `#` comments. Every RNG seed is explicit. Unknown keys are
// rejected at validation time with all offenders listed at once.
class RunConfig {
public:
    static RunConfig parse_file(const std::filesystem::path& path);
    static RunConfig parse_string(const std::string& text, const std::string& origin);

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    std::string require_str(const std::string& section, const std::string& key) const;
    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
    int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const;
    uint64_t get_u64(const std::string& section, const std::string& key, uint64_t fallback) const;
    double get_real(const std::string& section, const std::string& key, double fallback) const;
    std::vector<double> get_list(const std::string& section, const std::string& key) const;

    // Rejects unknown sections/keys; `allowed` maps section name to its key
    // set. Throws one ConfigError listing every offender.
    void validate_keys(const std::map<std::string, std::vector<std::string>>& allowed) const;

    const std::string& source_text() const { return text_; }
    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::string text_;
    std::string origin_;
};

// FNV-1a 64-bit over the raw bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace facet
