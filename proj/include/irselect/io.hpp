#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "irselect/common.hpp"

namespace irselect {

// Scientific notation, 17 significant digits; infinities spelled out.
inline std::string fmt17(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

// Output files appear atomically: write-temp-rename.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        if (!out) throw ValidationError("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) body_ += ',';
            body_ += header[i];
        }
        body_ += '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) body_ += ',';
            body_ += cells[i];
        }
        body_ += '\n';
    }

    void numeric_row(const std::vector<double>& cells) {
        std::vector<std::string> s;
        s.reserve(cells.size());
        for (double x : cells) s.push_back(fmt17(x));
        row(s);
    }

    void save(const std::filesystem::path& path) const { atomic_write_file(path, body_); }

private:
    std::string body_;
};

inline void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
    atomic_write_file(path, j.dump(2) + "\n");
}

// JSON has no infinity; moments and betas may be infinite.
inline nlohmann::json json_number(double x) {
    if (std::isinf(x)) return x > 0 ? nlohmann::json("inf") : nlohmann::json("-inf");
    if (std::isnan(x)) return nlohmann::json("nan");
    return nlohmann::json(x);
}

} // namespace irselect
