#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace effectmap {

class FactorSpace;
struct EffectTable;

std::vector<std::string> split_csv_line(std::string_view line);
std::string join_csv_line(const std::vector<std::string>& cells);

// 17 significant digits; round-trips every finite double.
std::string format_number(double v);
std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

// Sorted keys, numbers at 17 significant digits, non-finite numbers as null.
std::string dump_json(const nlohmann::json& value, int indent = 2);

FactorSpace space_from_json(const nlohmann::json& doc);
nlohmann::json space_to_json(const FactorSpace& space);
FactorSpace load_space(const std::filesystem::path& path);

nlohmann::json table_to_json(const EffectTable& table);

nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

}  // namespace effectmap
