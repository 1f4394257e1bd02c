#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "largegame/convergence.hpp"
#include "largegame/error.hpp"
#include "largegame/finite_game.hpp"
#include "largegame/limit_game.hpp"
#include "largegame/measure.hpp"
#include "largegame/metric_space.hpp"
#include "largegame/payoff.hpp"

namespace largegame {

struct Issue {
  std::string field;  // dotted path, e.g. "types[1].payoff"
  int line = 0;       // 1-based; 0 when unknown
  int column = 0;
  std::string message;

  std::string describe() const {
    std::string s = field;
    if (line > 0) s += " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")";
    return s + ": " + message;
  }
};

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<Issue> issues)
      : std::runtime_error(summarize(issues)), issues_(std::move(issues)) {}
  const std::vector<Issue>& issues() const { return issues_; }

 private:
  static std::string summarize(const std::vector<Issue>& issues) {
    std::string s;
    for (const auto& i : issues) s += (s.empty() ? "" : "\n") + i.describe();
    return s;
  }
  std::vector<Issue> issues_;
};

enum class ProfileMode { kSolve, kUniform };

struct Experiment {
  std::vector<std::size_t> sizes;
  Scheme scheme = Scheme::kQuota;
  std::size_t trials = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t max_iter = 2000;
  SolverMethod method = SolverMethod::kDampedBestResponse;
  ProfileMode profile = ProfileMode::kSolve;
};

struct Scenario {
  SpacePtr space;
  std::vector<std::string> type_names;
  std::optional<LimitGame> limit;
  std::optional<FinitePlayerGame> players;
  std::vector<std::pair<std::string, Measure>> measures;
  std::optional<MixedProfile> profile;  // for the explicit players block
  Experiment experiment;
  std::vector<Issue> warnings;

  const Measure& measure(const std::string& name) const {
    for (const auto& [k, m] : measures)
      if (k == name) return m;
    throw DomainError("scenario has no measure named '" + name + "'");
  }
};

namespace detail {

class ScenarioReader {
 public:
  Scenario read(const YAML::Node& root) {
    if (!root.IsMap()) {
      fail("", root, "scenario must be a mapping with space and types blocks");
      throw ScenarioError(issues_);
    }
    read_space(root["space"]);
    if (scenario_.space) {
      read_types(root["types"]);
      if (root["players"]) read_players(root["players"]);
      if (root["measures"]) read_measures(root["measures"]);
      if (root["profile"]) read_profile(root["profile"]);
    }
    if (root["experiment"]) read_experiment(root["experiment"]);
    for (const auto& it : root) {
      const auto key = it.first.as<std::string>();
      if (key != "space" && key != "types" && key != "players" && key != "measures" && key != "profile" &&
          key != "experiment")
        fail(key, it.first, "unknown block");
    }
    if (!issues_.empty()) throw ScenarioError(issues_);
    return std::move(scenario_);
  }

 private:
  void fail(const std::string& field, const YAML::Node& node, const std::string& message) {
    Issue i{field, 0, 0, message};
    if (node.IsDefined() && node.Mark().line >= 0) {
      i.line = node.Mark().line + 1;
      i.column = node.Mark().column + 1;
    }
    issues_.push_back(std::move(i));
  }

  void warn(const std::string& field, const YAML::Node& node, const std::string& message) {
    Issue i{field, node.Mark().line + 1, node.Mark().column + 1, message};
    scenario_.warnings.push_back(std::move(i));
  }

  template <typename T>
  std::optional<T> scalar(const YAML::Node& node, const std::string& field, const char* what) {
    if (!node.IsDefined() || !node.IsScalar()) {
      fail(field, node, std::string("expected ") + what);
      return std::nullopt;
    }
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(field, node, std::string("expected ") + what);
      return std::nullopt;
    }
  }

  std::optional<std::vector<std::string>> label_list(const YAML::Node& node, const std::string& field) {
    if (!node.IsSequence() || node.size() == 0) {
      fail(field, node, "expected a nonempty list of labels");
      return std::nullopt;
    }
    std::vector<std::string> out;
    for (std::size_t k = 0; k < node.size(); ++k) {
      auto s = scalar<std::string>(node[k], field + "[" + std::to_string(k) + "]", "a label");
      if (!s) return std::nullopt;
      out.push_back(*s);
    }
    return out;
  }

  std::optional<Matrix> real_matrix(const YAML::Node& node, const std::string& field) {
    if (!node.IsSequence()) {
      fail(field, node, "expected a list of rows");
      return std::nullopt;
    }
    Matrix m;
    for (std::size_t r = 0; r < node.size(); ++r) {
      const std::string rf = field + "[" + std::to_string(r) + "]";
      if (!node[r].IsSequence()) {
        fail(rf, node[r], "expected a list of numbers");
        return std::nullopt;
      }
      std::vector<double> row;
      for (std::size_t c = 0; c < node[r].size(); ++c) {
        auto x = scalar<double>(node[r][c], rf + "[" + std::to_string(c) + "]", "a number");
        if (!x) return std::nullopt;
        row.push_back(*x);
      }
      m.push_back(std::move(row));
    }
    return m;
  }

  void read_space(const YAML::Node& node) {
    if (!node.IsDefined() || !node.IsMap()) {
      fail("space", node, "missing space block");
      return;
    }
    auto labels = label_list(node["labels"], "space.labels");
    if (!labels) return;
    const bool has_coords = node["coordinates"].IsDefined(), has_matrix = node["matrix"].IsDefined();
    if (has_coords == has_matrix) {
      fail("space", node, "give exactly one of coordinates or matrix");
      return;
    }
    const std::string field = has_coords ? "space.coordinates" : "space.matrix";
    const YAML::Node& data = has_coords ? node["coordinates"] : node["matrix"];
    auto rows = real_matrix(data, field);
    if (!rows) return;
    if (rows->size() != labels->size()) {
      fail(field, data, "expected one row per label (" + std::to_string(labels->size()) + ")");
      return;
    }
    try {
      if (has_coords) {
        scenario_.space = FiniteMetricSpace::from_coordinates(*labels, *rows);
      } else {
        const MetricReport report = validate_metric(*rows);
        for (const auto& v : report.violations) fail(field, data, v.describe());
        if (!report.ok()) return;
        scenario_.space = FiniteMetricSpace::from_matrix(*labels, *rows);
      }
    } catch (const std::exception& e) {
      fail(field, data, e.what());
    }
  }

  std::optional<Payoff> payoff(const YAML::Node& node, const std::string& field) {
    auto text = scalar<std::string>(node, field, "a payoff expression string");
    if (!text) return std::nullopt;
    try {
      Payoff p = Payoff::parse_and_bind(*text, scenario_.space);
      if (p.uses_singular_ops())
        warn(field, node, "uses division or log; continuity on the whole simplex is not checked");
      return p;
    } catch (const ParseError& e) {
      fail(field, node, std::string(dynamic_cast<const BindError*>(&e) ? "bind" : "parse") +
                            " error at expression " + std::to_string(e.line()) + ":" +
                            std::to_string(e.column()) + ": " + e.message());
    } catch (const std::exception& e) {
      fail(field, node, e.what());
    }
    return std::nullopt;
  }

  std::optional<ActionSubset> feasible(const YAML::Node& node, const std::string& field) {
    if (!node.IsDefined()) return ActionSubset::all(scenario_.space);
    auto labels = label_list(node, field);
    if (!labels) return std::nullopt;
    try {
      return ActionSubset::from_labels(scenario_.space, *labels);
    } catch (const std::exception& e) {
      fail(field, node, e.what());
      return std::nullopt;
    }
  }

  void read_types(const YAML::Node& node) {
    if (!node.IsDefined() || !node.IsSequence() || node.size() == 0) {
      fail("types", node, "expected a nonempty list of player types");
      return;
    }
    std::vector<PlayerType> types;
    double total = 0.0;
    bool ok = true;
    for (std::size_t t = 0; t < node.size(); ++t) {
      const YAML::Node& tn = node[t];
      const std::string f = "types[" + std::to_string(t) + "]";
      if (!tn.IsMap()) {
        fail(f, tn, "expected a mapping with mass, feasible and payoff");
        ok = false;
        continue;
      }
      std::string name = "t" + std::to_string(t);
      if (tn["name"]) {
        auto s = scalar<std::string>(tn["name"], f + ".name", "a name");
        if (s) name = *s;
      }
      auto mass = scalar<double>(tn["mass"], f + ".mass", "a positive number");
      if (mass && !(*mass > 0.0)) {
        fail(f + ".mass", tn["mass"], "mass must be positive");
        mass.reset();
      }
      auto fs = feasible(tn["feasible"], f + ".feasible");
      auto p = payoff(tn["payoff"], f + ".payoff");
      if (!mass || !fs || !p) {
        ok = false;
        continue;
      }
      total += *mass;
      scenario_.type_names.push_back(name);
      types.push_back({*mass, *fs, *p});
    }
    if (!ok) return;
    if (std::abs(total - 1.0) > kMassTolerance) {
      fail("types.mass", node, "type masses sum to " + format_significant(total) + ", not 1");
      return;
    }
    scenario_.limit.emplace(scenario_.space, std::move(types));
  }

  void read_players(const YAML::Node& node) {
    if (!node.IsSequence() || node.size() == 0) {
      fail("players", node, "expected a nonempty list of players");
      return;
    }
    std::vector<Player> players;
    double total = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < node.size(); ++i) {
      const YAML::Node& pn = node[i];
      const std::string f = "players[" + std::to_string(i) + "]";
      if (!pn.IsMap()) {
        fail(f, pn, "expected a mapping with weight and either type or feasible and payoff");
        ok = false;
        continue;
      }
      auto weight = scalar<double>(pn["weight"], f + ".weight", "a positive number");
      if (weight && !(*weight > 0.0)) {
        fail(f + ".weight", pn["weight"], "weight must be positive");
        weight.reset();
      }
      std::optional<ActionSubset> fs;
      std::optional<Payoff> p;
      if (pn["type"]) {
        auto name = scalar<std::string>(pn["type"], f + ".type", "a type name");
        if (name && scenario_.limit) {
          auto it = std::find(scenario_.type_names.begin(), scenario_.type_names.end(), *name);
          if (it == scenario_.type_names.end()) {
            fail(f + ".type", pn["type"], "unknown type '" + *name + "'");
          } else {
            const auto& type = scenario_.limit->type(static_cast<std::size_t>(it - scenario_.type_names.begin()));
            fs = type.feasible;
            p = type.payoff;
          }
        }
      } else {
        fs = feasible(pn["feasible"], f + ".feasible");
        p = payoff(pn["payoff"], f + ".payoff");
      }
      if (!weight || !fs || !p) {
        ok = false;
        continue;
      }
      total += *weight;
      players.push_back({*weight, *fs, *p});
    }
    if (!ok) return;
    if (std::abs(total - 1.0) > kMassTolerance) {
      fail("players.weight", node, "player weights sum to " + format_significant(total) + ", not 1");
      return;
    }
    scenario_.players.emplace(scenario_.space, std::move(players));
  }

  std::optional<Measure> measure(const YAML::Node& node, const std::string& field) {
    if (!node.IsMap()) {
      fail(field, node, "expected a label -> weight mapping");
      return std::nullopt;
    }
    std::vector<double> w(scenario_.space->size(), 0.0);
    for (const auto& it : node) {
      auto label = scalar<std::string>(it.first, field, "a label");
      auto x = scalar<double>(it.second, field + "." + (label ? *label : "?"), "a weight");
      if (!label || !x) return std::nullopt;
      auto idx = scenario_.space->find(*label);
      if (!idx) {
        fail(field, it.first, "unknown label '" + *label + "'");
        return std::nullopt;
      }
      w[*idx] += *x;
    }
    try {
      return Measure(scenario_.space, std::move(w));
    } catch (const std::exception& e) {
      fail(field, node, e.what());
      return std::nullopt;
    }
  }

  void read_measures(const YAML::Node& node) {
    if (!node.IsMap()) {
      fail("measures", node, "expected a mapping of named measures");
      return;
    }
    for (const auto& it : node) {
      const auto name = it.first.as<std::string>();
      if (auto m = measure(it.second, "measures." + name)) scenario_.measures.emplace_back(name, *m);
    }
  }

  void read_profile(const YAML::Node& node) {
    if (!scenario_.players) {
      fail("profile", node, "a profile needs a valid players block");
      return;
    }
    if (!node.IsSequence() || node.size() != scenario_.players->size()) {
      fail("profile", node, "expected one measure per player (" + std::to_string(scenario_.players->size()) + ")");
      return;
    }
    MixedProfile prof;
    for (std::size_t i = 0; i < node.size(); ++i) {
      const std::string f = "profile[" + std::to_string(i) + "]";
      auto m = measure(node[i], f);
      if (!m) return;
      if (std::abs(m->mass_on(scenario_.players->player(i).feasible) - 1.0) > kMassTolerance) {
        fail(f, node[i], "puts mass outside the player's feasible set");
        return;
      }
      prof.push_back(*m);
    }
    scenario_.profile = std::move(prof);
  }

  void read_experiment(const YAML::Node& node) {
    if (!node.IsMap()) {
      fail("experiment", node, "expected a mapping");
      return;
    }
    Experiment& e = scenario_.experiment;
    if (node["sizes"]) {
      const YAML::Node& s = node["sizes"];
      if (!s.IsSequence() || s.size() == 0) {
        fail("experiment.sizes", s, "expected a nonempty list of player counts");
      } else {
        for (std::size_t k = 0; k < s.size(); ++k) {
          auto n = scalar<std::size_t>(s[k], "experiment.sizes[" + std::to_string(k) + "]", "a positive integer");
          if (!n) return;
          if (*n < 1 || (!e.sizes.empty() && *n <= e.sizes.back())) {
            fail("experiment.sizes", s, "sizes must be positive and strictly increasing");
            return;
          }
          e.sizes.push_back(*n);
        }
      }
    }
    if (node["scheme"]) {
      auto s = scalar<std::string>(node["scheme"], "experiment.scheme", "quota or iid");
      if (s && *s == "quota")
        e.scheme = Scheme::kQuota;
      else if (s && *s == "iid")
        e.scheme = Scheme::kIid;
      else if (s)
        fail("experiment.scheme", node["scheme"], "expected quota or iid");
    }
    if (node["trials"]) {
      if (auto t = scalar<std::size_t>(node["trials"], "experiment.trials", "a positive integer")) {
        if (*t < 1) fail("experiment.trials", node["trials"], "trials must be at least 1");
        e.trials = *t;
      }
    }
    if (node["tol"]) {
      if (auto t = scalar<double>(node["tol"], "experiment.tol", "a positive number")) {
        if (!(*t > 0.0)) fail("experiment.tol", node["tol"], "tol must be positive");
        e.tol = *t;
      }
    }
    if (node["seed"]) {
      if (auto s = scalar<std::uint64_t>(node["seed"], "experiment.seed", "a nonnegative integer")) e.seed = *s;
    }
    if (node["max_iter"]) {
      if (auto m = scalar<std::size_t>(node["max_iter"], "experiment.max_iter", "a positive integer")) e.max_iter = *m;
    }
    if (node["method"]) {
      auto s = scalar<std::string>(node["method"], "experiment.method", "damped-br or fictitious-play");
      if (s && *s == "damped-br")
        e.method = SolverMethod::kDampedBestResponse;
      else if (s && *s == "fictitious-play")
        e.method = SolverMethod::kFictitiousPlay;
      else if (s)
        fail("experiment.method", node["method"], "expected damped-br or fictitious-play");
    }
    if (node["profile"]) {
      auto s = scalar<std::string>(node["profile"], "experiment.profile", "solve or uniform");
      if (s && *s == "solve")
        e.profile = ProfileMode::kSolve;
      else if (s && *s == "uniform")
        e.profile = ProfileMode::kUniform;
      else if (s)
        fail("experiment.profile", node["profile"], "expected solve or uniform");
    }
    for (const auto& it : node) {
      const auto key = it.first.as<std::string>();
      if (key != "sizes" && key != "scheme" && key != "trials" && key != "tol" && key != "seed" &&
          key != "max_iter" && key != "method" && key != "profile")
        fail("experiment." + key, it.first, "unknown key");
    }
  }

  Scenario scenario_;
  std::vector<Issue> issues_;
};

}  // namespace detail

// Parses and validates a scenario document; every problem found is reported
// at once through ScenarioError.
inline Scenario load_scenario_string(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError({Issue{"", e.mark.line + 1, e.mark.column + 1, e.msg}});
  }
  return detail::ScenarioReader().read(root);
}

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scenario_string(buf.str());
}

namespace detail {

// shortest text that parses back to the same double
inline std::string shortest(double x) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

inline std::vector<std::string> shortest(const std::vector<double>& xs) {
  std::vector<std::string> out;
  for (double x : xs) out.push_back(shortest(x));
  return out;
}

inline void emit_measure(YAML::Emitter& out, const Measure& m) {
  out << YAML::Flow << YAML::BeginMap;
  for (std::size_t a : m.support()) out << YAML::Key << m.space()->label(a) << YAML::Value << shortest(m[a]);
  out << YAML::EndMap;
}

inline void emit_labels(YAML::Emitter& out, const ActionSubset& s) {
  out << YAML::Flow << YAML::BeginSeq;
  for (std::size_t a : s.members()) out << s.space()->label(a);
  out << YAML::EndSeq;
}

}  // namespace detail

// Serializes a scenario back to the document format; payoffs are written in
// canonical form, so load(write(s)) reproduces s.
inline std::string write_scenario(const Scenario& s) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "space" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "labels" << YAML::Value << YAML::Flow << s.space->labels();
  if (s.space->has_coordinates()) {
    out << YAML::Key << "coordinates" << YAML::Value << YAML::BeginSeq;
    for (std::size_t i = 0; i < s.space->size(); ++i) out << YAML::Flow << detail::shortest(s.space->coordinates()[i]);
  } else {
    out << YAML::Key << "matrix" << YAML::Value << YAML::BeginSeq;
    for (std::size_t i = 0; i < s.space->size(); ++i) out << YAML::Flow << detail::shortest(s.space->matrix()[i]);
  }
  out << YAML::EndSeq << YAML::EndMap;

  if (s.limit) {
    out << YAML::Key << "types" << YAML::Value << YAML::BeginSeq;
    for (std::size_t t = 0; t < s.limit->size(); ++t) {
      const auto& type = s.limit->type(t);
      out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << s.type_names[t];
      out << YAML::Key << "mass" << YAML::Value << detail::shortest(type.mass);
      out << YAML::Key << "feasible" << YAML::Value;
      detail::emit_labels(out, type.feasible);
      out << YAML::Key << "payoff" << YAML::Value << YAML::DoubleQuoted << type.payoff.text() << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  if (s.players) {
    out << YAML::Key << "players" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : s.players->players()) {
      out << YAML::BeginMap << YAML::Key << "weight" << YAML::Value << detail::shortest(p.weight);
      out << YAML::Key << "feasible" << YAML::Value;
      detail::emit_labels(out, p.feasible);
      out << YAML::Key << "payoff" << YAML::Value << YAML::DoubleQuoted << p.payoff.text() << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  if (!s.measures.empty()) {
    out << YAML::Key << "measures" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, m] : s.measures) {
      out << YAML::Key << name << YAML::Value;
      detail::emit_measure(out, m);
    }
    out << YAML::EndMap;
  }
  if (s.profile) {
    out << YAML::Key << "profile" << YAML::Value << YAML::BeginSeq;
    for (const auto& m : *s.profile) detail::emit_measure(out, m);
    out << YAML::EndSeq;
  }
  const Experiment& e = s.experiment;
  out << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
  if (!e.sizes.empty()) out << YAML::Key << "sizes" << YAML::Value << YAML::Flow << e.sizes;
  out << YAML::Key << "scheme" << YAML::Value << scheme_name(e.scheme);
  out << YAML::Key << "trials" << YAML::Value << e.trials;
  out << YAML::Key << "tol" << YAML::Value << detail::shortest(e.tol);
  out << YAML::Key << "seed" << YAML::Value << e.seed;
  out << YAML::Key << "max_iter" << YAML::Value << e.max_iter;
  out << YAML::Key << "method" << YAML::Value
      << (e.method == SolverMethod::kDampedBestResponse ? "damped-br" : "fictitious-play");
  out << YAML::Key << "profile" << YAML::Value << (e.profile == ProfileMode::kSolve ? "solve" : "uniform");
  out << YAML::EndMap << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace largegame
