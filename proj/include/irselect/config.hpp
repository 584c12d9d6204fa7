#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "irselect/common.hpp"

namespace irselect {

// Scenario config: named [sections] of flat key = value pairs; values are
// numbers, quoted strings, booleans, or bracketed (possibly nested) arrays.
struct ConfigValue {
    enum class Type { Number, String, Boolean, Array };
    Type type = Type::Number;
    double num = 0.0;
    std::string str;
    bool boolean = false;
    std::vector<ConfigValue> array;

    double as_number() const {
        if (type != Type::Number) throw ValidationError("config: expected a number");
        return num;
    }
    const std::string& as_string() const {
        if (type != Type::String) throw ValidationError("config: expected a string");
        return str;
    }
    bool as_bool() const {
        if (type != Type::Boolean) throw ValidationError("config: expected a boolean");
        return boolean;
    }
    const std::vector<ConfigValue>& as_array() const {
        if (type != Type::Array) throw ValidationError("config: expected an array");
        return array;
    }
    std::vector<double> as_number_array() const {
        std::vector<double> out;
        for (const auto& v : as_array()) out.push_back(v.as_number());
        return out;
    }
};

class Config {
public:
    static Config parse_string(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line, section, pending;
        int depth = 0;
        auto flush = [&]() {
            if (pending.empty()) return;
            cfg.add_pair(section, pending);
            pending.clear();
        };
        while (std::getline(in, line)) {
            strip_comment(line);
            if (depth == 0) {
                const auto first = line.find_first_not_of(" \t\r");
                if (first == std::string::npos) continue;
                if (line[first] == '[' && line.find(']', first) != std::string::npos &&
                    line.find('=') == std::string::npos) {
                    const auto close = line.find(']', first);
                    section = line.substr(first + 1, close - first - 1);
                    continue;
                }
                pending = line;
            } else {
                pending += ' ';
                pending += line;
            }
            depth = bracket_depth(pending);
            if (depth == 0) flush();
        }
        if (depth != 0) throw ValidationError("config: unbalanced brackets at end of file");
        flush();
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("config: cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_string(ss.str());
    }

    // "section.key=value" with the same value grammar as the file.
    void apply_override(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos)
            throw ValidationError("override: expected section.key=value, got " + assignment);
        const auto dot = assignment.find('.');
        if (dot == std::string::npos || dot > eq)
            throw ValidationError("override: expected section.key=value, got " + assignment);
        const std::string section = trim(assignment.substr(0, dot));
        const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
        std::size_t pos = 0;
        const std::string rhs = assignment.substr(eq + 1);
        sections_[section][key] = parse_value(rhs, pos);
    }

    bool has(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    const ConfigValue& get(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        if (s == sections_.end() || !s->second.count(key))
            throw ValidationError("config: missing " + section + "." + key);
        return s->second.at(key);
    }

    double number(const std::string& s, const std::string& k) const {
        return get(s, k).as_number();
    }
    double number_or(const std::string& s, const std::string& k, double dflt) const {
        return has(s, k) ? get(s, k).as_number() : dflt;
    }
    std::string string_or(const std::string& s, const std::string& k,
                          const std::string& dflt) const {
        return has(s, k) ? get(s, k).as_string() : dflt;
    }

private:
    static void strip_comment(std::string& line) {
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.erase(i);
                return;
            }
        }
    }

    static int bracket_depth(const std::string& s) {
        int depth = 0;
        bool quoted = false;
        for (char c : s) {
            if (c == '"') quoted = !quoted;
            if (quoted) continue;
            if (c == '[') ++depth;
            if (c == ']') --depth;
        }
        return depth;
    }

    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    static ConfigValue parse_value(const std::string& s, std::size_t& pos) {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos >= s.size()) throw ValidationError("config: missing value");
        ConfigValue v;
        if (s[pos] == '[') {
            ++pos;
            v.type = ConfigValue::Type::Array;
            for (;;) {
                while (pos < s.size() &&
                       (std::isspace(static_cast<unsigned char>(s[pos])) || s[pos] == ','))
                    ++pos;
                if (pos >= s.size()) throw ValidationError("config: unterminated array");
                if (s[pos] == ']') {
                    ++pos;
                    break;
                }
                v.array.push_back(parse_value(s, pos));
            }
            return v;
        }
        if (s[pos] == '"') {
            const auto close = s.find('"', pos + 1);
            if (close == std::string::npos)
                throw ValidationError("config: unterminated string");
            v.type = ConfigValue::Type::String;
            v.str = s.substr(pos + 1, close - pos - 1);
            pos = close + 1;
            return v;
        }
        if (s.compare(pos, 4, "true") == 0) {
            v.type = ConfigValue::Type::Boolean;
            v.boolean = true;
            pos += 4;
            return v;
        }
        if (s.compare(pos, 5, "false") == 0) {
            v.type = ConfigValue::Type::Boolean;
            v.boolean = false;
            pos += 5;
            return v;
        }
        char* end = nullptr;
        const double num = std::strtod(s.c_str() + pos, &end);
        if (end == s.c_str() + pos)
            throw ValidationError("config: cannot parse value near '" + s.substr(pos) + "'");
        v.type = ConfigValue::Type::Number;
        v.num = num;
        pos = static_cast<std::size_t>(end - s.c_str());
        return v;
    }

    void add_pair(const std::string& section, const std::string& line) {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config: expected key = value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ValidationError("config: empty key");
        std::size_t pos = 0;
        const std::string rhs = line.substr(eq + 1);
        ConfigValue v = parse_value(rhs, pos);
        while (pos < rhs.size() && std::isspace(static_cast<unsigned char>(rhs[pos]))) ++pos;
        if (pos != rhs.size())
            throw ValidationError("config: trailing characters after value in '" + line + "'");
        sections_[section][key] = std::move(v);
    }

    std::map<std::string, std::map<std::string, ConfigValue>> sections_;
};

} // namespace irselect
