#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "geodemo/cluster.hpp"
#include "geodemo/preprocess.hpp"

namespace geodemo {

enum class Direction { Above, Near, Below };
std::string_view to_string(Direction direction);

struct ClusterProfile {
  int cluster_id = 0;
  std::string name;  // "Cluster <id + 1>" unless named
  std::size_t size = 0;
  std::vector<std::string> variables;
  std::vector<double> mean_z;
  std::vector<Direction> directions;
  bool at_risk = false;
  std::vector<std::string> rationale;  // rule atoms the profile satisfies

  double mean_of(const std::string& variable) const;
};

/// Comparison against a z threshold, e.g. `nvq3_plus < 0`.
struct RiskAtom {
  enum class Op { Less, LessEqual, Greater, GreaterEqual };
  std::string variable;
  Op op = Op::Less;
  double threshold = 0.0;

  bool holds(double value) const;
  std::string text() const;
};

/// Boolean rule over RiskAtoms joined by AND / OR with parentheses.
/// AND binds tighter than OR; keywords are case-insensitive and `&&`, `||`
/// are accepted.
class RiskRule {
 public:
  struct Node;

  /// Errors: ConfigError{BadRiskRule} with the offending position.
  static RiskRule parse(std::string_view expression, std::string description = {});

  /// Low qualifications, above-average unemployment or inactivity, and a
  /// strongly over-represented minority ethnicity.
  static RiskRule default_rule();
  static std::string default_expression();

  bool evaluate(const std::map<std::string, double>& values,
                std::vector<std::string>* satisfied = nullptr) const;

  const std::string& expression() const { return expression_; }
  const std::string& description() const { return description_; }
  const std::vector<RiskAtom>& atoms() const { return atoms_; }
  std::vector<std::string> variables() const;

 private:
  std::string expression_;
  std::string description_;
  std::vector<RiskAtom> atoms_;
  std::shared_ptr<const Node> root_;
};

/// Mean z per cluster and variable with Above/Near/Below tags using the
/// dead band `epsilon`. Profiles are ordered by cluster id.
std::vector<ClusterProfile> pen_portrait(const FeatureMatrix& features, const ClusterModel& model,
                                         double epsilon = 0.1);

/// Sets at_risk and rationale. Errors: UnknownVariableInRule.
std::vector<ClusterProfile> flag_risk(std::vector<ClusterProfile> profiles, const RiskRule& rule);

/// Errors: UnknownClusterId.
std::vector<ClusterProfile> name_clusters(std::vector<ClusterProfile> profiles,
                                          const std::map<int, std::string>& names);

std::string profiles_csv(const std::vector<ClusterProfile>& profiles);
std::string risk_csv(const std::vector<ClusterProfile>& profiles, const RiskRule& rule);
std::string portraits_markdown(const std::vector<ClusterProfile>& profiles, const RiskRule& rule);

}  // namespace geodemo
