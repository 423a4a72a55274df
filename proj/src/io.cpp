#include "tagroute/io.hpp"

#include <fstream>
#include <sstream>

#include "tagroute/errors.hpp"

namespace tagroute {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) fail(Errc::IoError, "short write to '" + path + "'");
}

std::vector<Json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "' for reading");
  std::vector<Json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    rows.push_back(parse_json(line, path + ":" + std::to_string(lineno)));
  }
  return rows;
}

void write_jsonl(const std::string& path, const std::vector<Json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open '" + path + "' for writing");
  for (const auto& row : rows) {
    out << row.dump() << '\n';
  }
  if (!out) fail(Errc::IoError, "short write to '" + path + "'");
}

Json parse_json(const std::string& text, const std::string& context) {
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) {
    fail(Errc::ParseError, "invalid JSON in " + context);
  }
  return value;
}

Json load_json(const std::string& path) {
  return parse_json(read_file(path), path);
}

}  // namespace tagroute
