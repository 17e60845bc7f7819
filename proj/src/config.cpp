#include "facet/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace facet {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig RunConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str(), path.string());
}

RunConfig RunConfig::parse_string(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    cfg.text_ = text;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            cfg.sections_[section];
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any [section]");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        auto [it, inserted] = cfg.sections_[section].emplace(key, value);
        if (!inserted)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                              "' in [" + section + "]");
    }
    return cfg;
}

bool RunConfig::has_section(const std::string& section) const {
    return sections_.count(section) > 0;
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::string RunConfig::require_str(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end() || !it->second.count(key))
        throw ConfigError(origin_ + ": missing required key '" + key + "' in [" + section + "]");
    return it->second.at(key);
}

std::string RunConfig::get_str(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return has(section, key) ? sections_.at(section).at(key) : fallback;
}

int64_t RunConfig::get_int(const std::string& section, const std::string& key,
                           int64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections_.at(section).at(key);
    try {
        size_t pos = 0;
        const int64_t r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + v +
                          "' is not an integer");
    }
}

uint64_t RunConfig::get_u64(const std::string& section, const std::string& key,
                            uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections_.at(section).at(key);
    try {
        size_t pos = 0;
        const uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + v +
                          "' is not an unsigned integer");
    }
}

double RunConfig::get_real(const std::string& section, const std::string& key,
                           double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& v = sections_.at(section).at(key);
    try {
        size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + v + "' is not a number");
    }
}

std::vector<double> RunConfig::get_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    if (!has(section, key)) return out;
    const std::string& v = sections_.at(section).at(key);
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw ConfigError(origin_ + ": [" + section + "] " + key + " has an empty list entry");
        try {
            size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": [" + section + "] " + key + " entry '" + item +
                              "' is not a number");
        }
    }
    return out;
}

void RunConfig::validate_keys(const std::map<std::string, std::vector<std::string>>& allowed) const {
    std::vector<std::string> offenders;
    for (const auto& [section, keys] : sections_) {
        auto it = allowed.find(section);
        if (it == allowed.end()) {
            offenders.push_back("[" + section + "] (unknown section)");
            continue;
        }
        for (const auto& [key, value] : keys)
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                offenders.push_back("[" + section + "] " + key);
    }
    if (!offenders.empty()) {
        std::string msg = origin_ + ": unknown configuration keys:";
        for (const auto& o : offenders) msg += " " + o + ";";
        throw ConfigError(msg);
    }
}

std::string fnv1a_hex(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace facet
