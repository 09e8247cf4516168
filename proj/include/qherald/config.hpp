#pragma once

#include <string>
#include <vector>

#include "qherald/sweep.hpp"

namespace qherald::config {

/// Sets one field by its key name. Throws std::invalid_argument for unknown
/// keys and malformed values.
void set_option(sweep::SweepConfig& cfg, const std::string& key, const std::string& value);

const std::vector<std::string>& known_keys();

/// Flat `key = value` lines; `#` starts a comment. Errors name the line.
void apply_text(sweep::SweepConfig& cfg, const std::string& text, const std::string& source = "<config>");
void apply_file(sweep::SweepConfig& cfg, const std::string& path);

std::string to_text(const sweep::SweepConfig& cfg);

}  // namespace qherald::config
