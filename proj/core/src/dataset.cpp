#include "urbanmas/dataset.hpp"

#include <fstream>
#include <sstream>

#include "urbanmas/error.hpp"
#include "urbanmas/serialization.hpp"

namespace urbanmas {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<nlohmann::json>& lines) {
  std::string buf;
  for (const auto& j : lines) {
    buf += j.dump();
    buf += '\n';
  }
  write_text_file(path, buf);
}

std::vector<LocationSample> load_dataset(const fs::path& path) {
  std::vector<LocationSample> out;
  std::size_t index = 0;
  for (const auto& j : read_jsonl(path)) {
    ++index;
    LocationSample s;
    try {
      s = j.get<LocationSample>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument,
                  path.string() + ": record " + std::to_string(index) + ": " + e.what());
    }
    auto v = validate_location(s);
    if (!v.empty())
      throw Error(ErrorCode::InvalidArgument,
                  path.string() + ": record " + std::to_string(index) + ": " + v.front());
    out.push_back(std::move(s));
  }
  return out;
}

void save_dataset(const fs::path& path, const std::vector<LocationSample>& samples) {
  std::vector<nlohmann::json> lines;
  lines.reserve(samples.size());
  for (const auto& s : samples) lines.emplace_back(s);
  write_jsonl(path, lines);
}

}  // namespace urbanmas
