#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanmas/domain.hpp"

namespace urbanmas {

/// Reads a line-delimited JSON dataset, one LocationSample per line. Blank
/// lines are skipped. Every record is validated; the first invalid line
/// raises Error(InvalidArgument) naming the line number.
std::vector<LocationSample> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const std::vector<LocationSample>& samples);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& lines);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames, so readers never observe a
/// partial file.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace urbanmas
