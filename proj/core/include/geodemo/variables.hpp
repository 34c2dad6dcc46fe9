#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace geodemo {

enum class Domain { Demographic, Social };
enum class Polarity { AsIs, Inverted };

/// Classification variable and its place in the domain/dimension taxonomy.
struct VariableMeta {
  std::string name;
  Domain domain = Domain::Demographic;
  std::string dimension;  // Age | Ethnicity | Qualifications | EmploymentStatus
  Polarity polarity = Polarity::AsIs;

  bool operator==(const VariableMeta&) const = default;
};

std::string_view to_string(Domain domain);
std::string_view to_string(Polarity polarity);
Domain parse_domain(std::string_view text);
Polarity parse_polarity(std::string_view text);

/// The eleven digital-accessibility measures, in canonical order:
/// three age bands, five minority ethnicities, NVQ3+, unemployment and
/// economic inactivity.
const std::vector<VariableMeta>& default_variables();

/// Ethnicity variables of default_variables() (used by the default risk rule).
const std::vector<std::string>& minority_ethnicity_variables();

/// Throws ConfigError{DuplicateVariable} on repeated names.
void check_unique_names(const std::vector<VariableMeta>& variables);

}  // namespace geodemo
