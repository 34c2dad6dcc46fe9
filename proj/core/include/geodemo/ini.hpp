#pragma once

#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace geodemo {

using IniTree = boost::property_tree::ptree;

/// Parses INI text (key = value, optional [sections], ';' or '#' comments).
/// Throws ConfigError{BadConfig} on syntax errors.
IniTree parse_ini(const std::string& text, std::string_view source = "<string>");

/// Throws ConfigError{FileNotFound} when the file is missing.
IniTree load_ini(const std::filesystem::path& path);

/// Comma-separated list with items trimmed and empty items dropped.
std::vector<std::string> split_list(const std::string& text);

/// true/yes/1 or false/no/0. Errors: ConfigError{BadConfig} naming `key`.
bool parse_bool(const std::string& key, const std::string& text);

/// Errors: ConfigError{BadConfig} naming `key`.
double parse_config_number(const std::string& key, const std::string& text);

}  // namespace geodemo
