#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tsdcn/errors.hpp"

namespace tsdcn {

using json = nlohmann::json;

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

inline json read_json_file(const std::string& path) {
    json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) throw IoError("invalid JSON: " + path);
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace tsdcn
