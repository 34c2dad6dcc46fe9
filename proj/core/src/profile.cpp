#include "geodemo/profile.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "geodemo/csv.hpp"
#include "geodemo/error.hpp"
#include "geodemo/variables.hpp"

namespace geodemo {

std::string_view to_string(Direction direction) {
  switch (direction) {
    case Direction::Above: return "Above";
    case Direction::Near: return "Near";
    case Direction::Below: return "Below";
  }
  return "Near";
}

double ClusterProfile::mean_of(const std::string& variable) const {
  for (std::size_t j = 0; j < variables.size(); ++j) {
    if (variables[j] == variable) return mean_z[j];
  }
  throw ConfigError("UnknownVariableInRule", "profile has no variable '" + variable + "'");
}

bool RiskAtom::holds(double value) const {
  switch (op) {
    case Op::Less: return value < threshold;
    case Op::LessEqual: return value <= threshold;
    case Op::Greater: return value > threshold;
    case Op::GreaterEqual: return value >= threshold;
  }
  return false;
}

std::string RiskAtom::text() const {
  static constexpr const char* ops[] = {"<", "<=", ">", ">="};
  return variable + " " + ops[static_cast<int>(op)] + " " + format_number(threshold);
}

struct RiskRule::Node {
  enum class Kind { Atom, And, Or };
  Kind kind = Kind::Atom;
  std::size_t atom = 0;
  std::vector<std::shared_ptr<const Node>> children;
};

namespace {

using NodePtr = std::shared_ptr<const RiskRule::Node>;

class RuleParser {
 public:
  RuleParser(std::string_view text, std::vector<RiskAtom>& atoms) : text_(text), atoms_(atoms) {}

  NodePtr parse() {
    NodePtr root = parse_or();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("BadRiskRule", why + " at offset " + std::to_string(pos_) + " in '" +
                                         std::string(text_) + "'");
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool keyword(std::string_view word, std::string_view symbol) {
    skip_space();
    if (text_.substr(pos_, symbol.size()) == symbol) {
      pos_ += symbol.size();
      return true;
    }
    if (pos_ + word.size() > text_.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
      if (std::toupper(static_cast<unsigned char>(text_[pos_ + i])) != word[i]) return false;
    }
    const std::size_t after = pos_ + word.size();
    if (after < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[after])) || text_[after] == '_')) {
      return false;
    }
    pos_ = after;
    return true;
  }

  NodePtr combine(RiskRule::Node::Kind kind, std::vector<NodePtr> parts) {
    if (parts.size() == 1) return parts.front();
    auto node = std::make_shared<RiskRule::Node>();
    node->kind = kind;
    node->children = std::move(parts);
    return node;
  }

  NodePtr parse_or() {
    std::vector<NodePtr> parts{parse_and()};
    while (keyword("OR", "||")) parts.push_back(parse_and());
    return combine(RiskRule::Node::Kind::Or, std::move(parts));
  }

  NodePtr parse_and() {
    std::vector<NodePtr> parts{parse_factor()};
    while (keyword("AND", "&&")) parts.push_back(parse_factor());
    return combine(RiskRule::Node::Kind::And, std::move(parts));
  }

  NodePtr parse_factor() {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      NodePtr inner = parse_or();
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
      ++pos_;
      return inner;
    }
    return parse_atom();
  }

  NodePtr parse_atom() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ == start) fail("expected a variable name");
    RiskAtom atom;
    atom.variable = std::string(text_.substr(start, pos_ - start));
    skip_space();
    if (text_.substr(pos_, 2) == "<=") {
      atom.op = RiskAtom::Op::LessEqual;
      pos_ += 2;
    } else if (text_.substr(pos_, 2) == ">=") {
      atom.op = RiskAtom::Op::GreaterEqual;
      pos_ += 2;
    } else if (text_.substr(pos_, 1) == "<") {
      atom.op = RiskAtom::Op::Less;
      ++pos_;
    } else if (text_.substr(pos_, 1) == ">") {
      atom.op = RiskAtom::Op::Greater;
      ++pos_;
    } else {
      fail("expected a comparison operator");
    }
    skip_space();
    const std::size_t num_start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || std::string_view("+-.eE").find(text_[pos_]) != std::string_view::npos)) {
      ++pos_;
    }
    auto value = parse_number(text_.substr(num_start, pos_ - num_start));
    if (!value) fail("expected a numeric threshold");
    atom.threshold = *value;
    atoms_.push_back(atom);
    auto node = std::make_shared<RiskRule::Node>();
    node->atom = atoms_.size() - 1;
    return node;
  }

  std::string_view text_;
  std::vector<RiskAtom>& atoms_;
  std::size_t pos_ = 0;
};

bool eval_node(const RiskRule::Node& node, const std::vector<bool>& truth) {
  switch (node.kind) {
    case RiskRule::Node::Kind::Atom: return truth[node.atom];
    case RiskRule::Node::Kind::And:
      return std::all_of(node.children.begin(), node.children.end(),
                         [&](const NodePtr& c) { return eval_node(*c, truth); });
    case RiskRule::Node::Kind::Or:
      return std::any_of(node.children.begin(), node.children.end(),
                         [&](const NodePtr& c) { return eval_node(*c, truth); });
  }
  return false;
}

}  // namespace

RiskRule RiskRule::parse(std::string_view expression, std::string description) {
  RiskRule rule;
  rule.expression_ = trim(expression);
  rule.description_ = std::move(description);
  if (rule.expression_.empty()) throw ConfigError("BadRiskRule", "empty risk rule");
  RuleParser parser(rule.expression_, rule.atoms_);
  rule.root_ = parser.parse();
  return rule;
}

std::string RiskRule::default_expression() {
  std::string ethnic;
  for (const auto& v : minority_ethnicity_variables()) {
    ethnic += (ethnic.empty() ? "" : " OR ") + v + " > 0.5";
  }
  return "nvq3_plus < 0 AND (unemployed > 0 OR inactive > 0) AND (" + ethnic + ")";
}

RiskRule RiskRule::default_rule() {
  return parse(default_expression(),
               "below-average NVQ3+, above-average unemployment or inactivity, and a minority "
               "ethnicity more than 0.5 sd above the mean");
}

bool RiskRule::evaluate(const std::map<std::string, double>& values,
                        std::vector<std::string>* satisfied) const {
  std::vector<bool> truth(atoms_.size());
  for (std::size_t a = 0; a < atoms_.size(); ++a) {
    auto it = values.find(atoms_[a].variable);
    if (it == values.end()) {
      throw ConfigError("UnknownVariableInRule", "risk rule references unknown variable '" +
                                                     atoms_[a].variable + "'");
    }
    truth[a] = atoms_[a].holds(it->second);
    if (truth[a] && satisfied) satisfied->push_back(atoms_[a].text());
  }
  return eval_node(*root_, truth);
}

std::vector<std::string> RiskRule::variables() const {
  std::vector<std::string> out;
  for (const auto& a : atoms_) {
    if (std::find(out.begin(), out.end(), a.variable) == out.end()) out.push_back(a.variable);
  }
  return out;
}

std::vector<ClusterProfile> pen_portrait(const FeatureMatrix& features, const ClusterModel& model,
                                         double epsilon) {
  if (epsilon < 0.0) throw ConfigError("BadOptions", "dead band must be non-negative");
  if (model.assignments.size() != features.rows()) {
    throw DataError("DimensionMismatch", "model was not fitted on these features");
  }
  const std::size_t d = features.cols();
  std::vector<ClusterProfile> profiles(model.k);
  for (std::size_t c = 0; c < model.k; ++c) {
    auto& p = profiles[c];
    p.cluster_id = static_cast<int>(c);
    p.name = "Cluster " + std::to_string(c + 1);
    p.mean_z.assign(d, 0.0);
    for (const auto& v : features.variables) p.variables.push_back(v.name);
  }
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto& p = profiles[static_cast<std::size_t>(model.assignments[i])];
    ++p.size;
    for (std::size_t j = 0; j < d; ++j) p.mean_z[j] += features.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  for (auto& p : profiles) {
    if (p.size == 0) throw DataError("EmptyCluster", "cluster " + std::to_string(p.cluster_id) + " has no members");
    for (double& m : p.mean_z) m /= static_cast<double>(p.size);
    for (double m : p.mean_z) {
      p.directions.push_back(m > epsilon ? Direction::Above : m < -epsilon ? Direction::Below : Direction::Near);
    }
  }
  return profiles;
}

std::vector<ClusterProfile> flag_risk(std::vector<ClusterProfile> profiles, const RiskRule& rule) {
  for (auto& p : profiles) {
    std::map<std::string, double> values;
    for (std::size_t j = 0; j < p.variables.size(); ++j) values[p.variables[j]] = p.mean_z[j];
    p.rationale.clear();
    p.at_risk = rule.evaluate(values, &p.rationale);
  }
  return profiles;
}

std::vector<ClusterProfile> name_clusters(std::vector<ClusterProfile> profiles,
                                          const std::map<int, std::string>& names) {
  for (const auto& [id, name] : names) {
    auto it = std::find_if(profiles.begin(), profiles.end(),
                           [id = id](const ClusterProfile& p) { return p.cluster_id == id; });
    if (it == profiles.end()) throw ConfigError("UnknownClusterId", "no cluster with id " + std::to_string(id));
    it->name = name;
  }
  return profiles;
}

std::string profiles_csv(const std::vector<ClusterProfile>& profiles) {
  std::string out = csv_line({"cluster_id", "cluster_name", "variable", "mean_z", "direction"});
  for (const auto& p : profiles) {
    for (std::size_t j = 0; j < p.variables.size(); ++j) {
      out += csv_line({std::to_string(p.cluster_id), p.name, p.variables[j], format_number(p.mean_z[j]),
                       std::string(to_string(p.directions[j]))});
    }
  }
  return out;
}

std::string risk_csv(const std::vector<ClusterProfile>& profiles, const RiskRule& rule) {
  std::string out = csv_line({"cluster_id", "cluster_name", "size", "at_risk", "satisfied_atoms", "rule"});
  for (const auto& p : profiles) {
    std::string atoms;
    for (const auto& a : p.rationale) atoms += (atoms.empty() ? "" : "; ") + a;
    out += csv_line({std::to_string(p.cluster_id), p.name, std::to_string(p.size), p.at_risk ? "true" : "false",
                     atoms, rule.expression()});
  }
  return out;
}

std::string portraits_markdown(const std::vector<ClusterProfile>& profiles, const RiskRule& rule) {
  std::string out = "# Pen portraits\n\nRisk rule: `" + rule.expression() + "`\n";
  std::size_t flagged_districts = 0;
  for (const auto& p : profiles) {
    if (p.at_risk) flagged_districts += p.size;
  }
  out += "\nDistricts in at-risk clusters: " + std::to_string(flagged_districts) + "\n";

  for (const auto& p : profiles) {
    out += "\n## " + std::to_string(p.cluster_id + 1) + ". " + p.name + "\n\n";
    out += "- Districts: " + std::to_string(p.size) + "\n";
    out += std::string("- At risk: ") + (p.at_risk ? "yes" : "no") + "\n";
    std::vector<std::size_t> order(p.variables.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p.mean_z[a] > p.mean_z[b]; });
    auto list = [&](Direction dir) {
      std::string s;
      for (std::size_t j : order) {
        if (p.directions[j] != dir) continue;
        s += (s.empty() ? "" : ", ") + p.variables[j] + " (" + format_fixed(p.mean_z[j], 2) + ")";
      }
      return s.empty() ? std::string("none") : s;
    };
    out += "- Above average: " + list(Direction::Above) + "\n";
    out += "- Below average: " + list(Direction::Below) + "\n";
    out += "- Near average: " + list(Direction::Near) + "\n";
    if (p.at_risk) {
      std::string atoms;
      for (const auto& a : p.rationale) atoms += (atoms.empty() ? "" : "; ") + a;
      out += "- Rule atoms satisfied: " + atoms + "\n";
    }
  }
  return out;
}

}  // namespace geodemo
