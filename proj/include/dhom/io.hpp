#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace dhom {

using Json = nlohmann::ordered_json;

// %.17g rendering: shortest text that round-trips a double across platforms we
// target; keeps reruns byte-identical.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Atomic writers: content goes to <path>.tmp, then rename.
void write_text_atomic(const std::string& path, const std::string& content);
void write_csv(const std::string& path, const CsvTable& table);
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

std::uint64_t fnv1a(const std::string& data);

// <path>.meta.json with the config hash and library version.
void write_sidecar(const std::string& path, std::uint64_t config_hash);

bool files_identical(const std::string& a, const std::string& b);

}  // namespace dhom
