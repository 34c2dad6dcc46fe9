#include "geodemo/ini.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <fstream>
#include <sstream>

#include "geodemo/csv.hpp"
#include "geodemo/error.hpp"

namespace geodemo {

IniTree parse_ini(const std::string& text, std::string_view source) {
  // Inline comments start at ';' or '#' preceded by whitespace.
  std::string cleaned;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    for (std::size_t i = 1; i < line.size(); ++i) {
      if ((line[i] == ';' || line[i] == '#') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.erase(i);
        break;
      }
    }
    cleaned += line;
    cleaned += '\n';
  }
  std::istringstream in(cleaned);
  IniTree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("BadConfig", std::string(source) + ": " + e.message() + " (line " +
                                       std::to_string(e.line()) + ")");
  }
  return tree;
}

IniTree load_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("FileNotFound", "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_ini(buffer.str(), path.string());
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ConfigError("BadConfig", key + ": expected boolean, got '" + text + "'");
}

double parse_config_number(const std::string& key, const std::string& text) {
  auto v = parse_number(text);
  if (!v) throw ConfigError("BadConfig", key + ": expected number, got '" + text + "'");
  return *v;
}

}  // namespace geodemo
