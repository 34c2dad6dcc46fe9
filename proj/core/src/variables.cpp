#include "geodemo/variables.hpp"

#include <set>

#include "geodemo/error.hpp"

namespace geodemo {

std::string_view to_string(Domain domain) {
  return domain == Domain::Demographic ? "Demographic" : "Social";
}

std::string_view to_string(Polarity polarity) {
  return polarity == Polarity::AsIs ? "AsIs" : "Inverted";
}

Domain parse_domain(std::string_view text) {
  if (text == "Demographic" || text == "demographic") return Domain::Demographic;
  if (text == "Social" || text == "social") return Domain::Social;
  throw ConfigError("BadDomain", "unknown domain '" + std::string(text) + "'");
}

Polarity parse_polarity(std::string_view text) {
  if (text == "AsIs" || text == "asis" || text == "as_is") return Polarity::AsIs;
  if (text == "Inverted" || text == "inverted") return Polarity::Inverted;
  throw ConfigError("BadPolarity", "unknown polarity '" + std::string(text) + "'");
}

const std::vector<VariableMeta>& default_variables() {
  static const std::vector<VariableMeta> variables = {
      {"aged_16_24", Domain::Demographic, "Age", Polarity::AsIs},
      {"aged_25_34", Domain::Demographic, "Age", Polarity::AsIs},
      {"aged_35_44", Domain::Demographic, "Age", Polarity::AsIs},
      {"mixed", Domain::Demographic, "Ethnicity", Polarity::AsIs},
      {"indian", Domain::Demographic, "Ethnicity", Polarity::AsIs},
      {"pakistani_bangladeshi", Domain::Demographic, "Ethnicity", Polarity::AsIs},
      {"black", Domain::Demographic, "Ethnicity", Polarity::AsIs},
      {"other_minority", Domain::Demographic, "Ethnicity", Polarity::AsIs},
      {"nvq3_plus", Domain::Social, "Qualifications", Polarity::AsIs},
      {"unemployed", Domain::Social, "EmploymentStatus", Polarity::AsIs},
      {"inactive", Domain::Social, "EmploymentStatus", Polarity::AsIs},
  };
  return variables;
}

const std::vector<std::string>& minority_ethnicity_variables() {
  static const std::vector<std::string> names = {"mixed", "indian", "pakistani_bangladeshi",
                                                 "black", "other_minority"};
  return names;
}

void check_unique_names(const std::vector<VariableMeta>& variables) {
  std::set<std::string> seen;
  for (const auto& v : variables) {
    if (!seen.insert(v.name).second) {
      throw ConfigError("DuplicateVariable", "variable '" + v.name + "' declared twice");
    }
  }
}

}  // namespace geodemo
