#pragma once

#include "effectmap/effect_table.hpp"

#include <string>
#include <vector>

namespace effectmap::cli {

inline constexpr const char* tool_version = "0.1.0";

// Runs one subcommand; returns the process exit status.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

// Long-form plot data.
std::string main_effects_csv(const EffectTable& table);
std::string interactions_csv(const EffectTable& table);

}  // namespace effectmap::cli
