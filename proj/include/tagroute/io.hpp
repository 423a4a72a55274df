#pragma once
// File helpers shared by the modules that own on-disk formats. All files
// are UTF-8; line-delimited JSON for record streams, plain JSON otherwise.

#include <string>
#include <vector>

#include <json.hpp>

namespace tagroute {

using Json = nlohmann::json;

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Throws ParseError with the offending line number on malformed input.
std::vector<Json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<Json>& rows);

Json parse_json(const std::string& text, const std::string& context);
Json load_json(const std::string& path);

}  // namespace tagroute
