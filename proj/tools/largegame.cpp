#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "largegame/largegame.hpp"
#include "largegame/scenario.hpp"

namespace {

using namespace largegame;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitFlagged = 2;
constexpr int kExitIo = 3;

struct Common {
  std::string path;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<std::size_t> trials;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("scenario", c.path, "scenario file")->required();
  cmd->add_option("--seed", c.seed, "master seed (default: scenario value, else 0)");
  cmd->add_option("--tol", c.tol, "tolerance (default: scenario value, else 1e-6)")->check(CLI::PositiveNumber);
  cmd->add_option("--trials", c.trials, "Monte Carlo trials (default: scenario value, else 200)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "report path; JSON there, CSV tables beside it");
}

// Scenario with command-line overrides applied to its experiment block.
Scenario load(const Common& c) {
  Scenario s = load_scenario(c.path);
  if (c.seed) s.experiment.seed = *c.seed;
  if (c.tol) s.experiment.tol = *c.tol;
  if (c.trials) s.experiment.trials = *c.trials;
  return s;
}

ordered_json config(const std::string& command, const Common& c, const Scenario& s) {
  const Experiment& e = s.experiment;
  ordered_json j;
  j["command"] = command;
  j["scenario_path"] = c.path;
  j["seed"] = e.seed;
  j["tol"] = e.tol;
  j["trials"] = e.trials;
  j["max_iter"] = e.max_iter;
  j["method"] = e.method == SolverMethod::kDampedBestResponse ? "damped-br" : "fictitious-play";
  j["scheme"] = scheme_name(e.scheme);
  j["sizes"] = e.sizes;
  j["profile"] = e.profile == ProfileMode::kSolve ? "solve" : "uniform";
  j["scenario"] = write_scenario(s);
  return j;
}

SolverOptions solver_options(const Experiment& e) {
  SolverOptions o;
  o.method = e.method;
  o.tol = e.tol;
  o.max_iter = e.max_iter;
  o.seed = e.seed;
  return o;
}

LimitSolverOptions limit_options(const Experiment& e) {
  LimitSolverOptions o;
  o.tol = e.tol;
  o.max_iter = e.max_iter;
  return o;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << text;
  if (!f) throw IoError("failed writing '" + path + "'");
}

std::string sibling(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  p.replace_extension();
  return p.string() + suffix;
}

// JSON to --out, tables beside it; the per-n table also goes to stdout.
void emit(const Common& c, const ordered_json& json, const std::string& table, const std::string& trials = {}) {
  std::cout << table;
  if (c.out.empty()) return;
  write_file(c.out, json.dump(2) + "\n");
  write_file(sibling(c.out, ".csv"), table);
  if (!trials.empty()) write_file(sibling(c.out, ".trials.csv"), trials);
}

std::string weights_csv(const SpacePtr& space, const std::vector<std::string>& names,
                        const std::vector<Measure>& rows, const std::vector<double>& masses) {
  std::ostringstream os;
  os << "agent,weight";
  for (const auto& l : space->labels()) os << "," << l;
  os << "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    os << names[r] << "," << format_significant(masses[r]);
    for (std::size_t a = 0; a < space->size(); ++a) os << "," << format_significant(rows[r][a]);
    os << "\n";
  }
  return os.str();
}

int cmd_validate(const Common& c) {
  const Scenario s = load(c);
  for (const auto& w : s.warnings) std::cerr << "warning: " << w.describe() << "\n";
  std::cout << "ok: " << s.space->size() << " actions, " << (s.limit ? s.limit->size() : 0) << " types, "
            << (s.players ? s.players->size() : 0) << " explicit players, " << s.measures.size()
            << " measures\n";
  return kExitOk;
}

int cmd_metric(const Common& c, const std::string& p_name, const std::string& q_name) {
  const Scenario s = load(c);
  const Measure& p = s.measure(p_name);
  const Measure& q = s.measure(q_name);
  const double rho = prohorov(p, q, std::min(s.experiment.tol, 1e-9));
  const double beta = bl_distance(p, q);
  std::cout << "prohorov " << format_significant(rho) << "\n"
            << "bl " << format_significant(beta) << "\n";
  if (!c.out.empty()) {
    ordered_json j;
    j["kind"] = "metric";
    j["config"] = config("metric", c, s);
    j["p"] = p_name;
    j["q"] = q_name;
    j["prohorov"] = round_significant(rho);
    j["bl"] = round_significant(beta);
    write_file(c.out, j.dump(2) + "\n");
    write_file(sibling(c.out, ".csv"),
               "p,q,prohorov,bl\n" + p_name + "," + q_name + "," + format_significant(rho) + "," +
                   format_significant(beta) + "\n");
  }
  return kExitOk;
}

int cmd_solve(const Common& c, std::optional<std::size_t> n, bool limit, bool use_players, bool strict) {
  const Scenario s = load(c);
  const Experiment& e = s.experiment;
  ordered_json j;
  j["kind"] = "solve";
  j["config"] = config("solve", c, s);
  double gap = 0.0;
  std::string table;

  if (limit) {
    if (!s.limit) throw DomainError("scenario has no types block");
    const auto r = solve_limit_rsne(*s.limit, limit_options(e));
    gap = r.certified_gap;
    j["game"] = "limit";
    j["certified_gap"] = round_significant(gap);
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["summary"] = measure_to_json(societal_summary(*s.limit, r.strategy));
    ordered_json strat = ordered_json::array();
    std::vector<double> masses;
    for (std::size_t t = 0; t < s.limit->size(); ++t) {
      strat.push_back({{"type", s.type_names[t]}, {"strategy", measure_to_json(r.strategy[t])}});
      masses.push_back(s.limit->type(t).mass);
    }
    j["strategy"] = strat;
    table = weights_csv(s.space, s.type_names, r.strategy, masses);
  } else {
    std::optional<FinitePlayerGame> game;
    std::vector<std::string> names;
    if (use_players) {
      if (!s.players) throw DomainError("scenario has no players block");
      game = *s.players;
      for (std::size_t i = 0; i < game->size(); ++i) names.push_back("p" + std::to_string(i));
    } else {
      if (!s.limit) throw DomainError("scenario has no types block");
      Discretization d = discretize(*s.limit, *n, e.scheme, e.seed);
      for (std::size_t i = 0; i < d.type_of.size(); ++i)
        names.push_back("p" + std::to_string(i) + ":" + s.type_names[d.type_of[i]]);
      game = std::move(d.game);
    }
    const auto r = solve_rsne(*game, solver_options(e));
    gap = r.certified_gap;
    j["game"] = "finite";
    j["players"] = game->size();
    j["certified_gap"] = round_significant(gap);
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    try {
      j["exact_gap"] = round_significant(rsne_gap_exact(*game, r.profile));
    } catch (const CapacityError&) {
      j["exact_gap"] = nullptr;
    }
    j["summary"] = measure_to_json(summary(*game, r.profile));
    ordered_json prof = ordered_json::array();
    std::vector<double> weights;
    for (std::size_t i = 0; i < game->size(); ++i) {
      prof.push_back({{"player", names[i]}, {"strategy", measure_to_json(r.profile[i])}});
      weights.push_back(game->player(i).weight);
    }
    j["profile"] = prof;
    table = weights_csv(s.space, names, r.profile, weights);
  }
  std::cerr << "certified_gap " << format_significant(gap) << "\n";
  emit(c, j, table);
  return strict && !(gap <= e.tol) ? kExitFlagged : kExitOk;
}

MixedProfile experiment_profile(const FinitePlayerGame& game, const Experiment& e) {
  if (e.profile == ProfileMode::kUniform) return uniform_profile(game);
  return solve_rsne(game, solver_options(e)).profile;
}

int cmd_concentrate(const Common& c) {
  const Scenario s = load(c);
  const Experiment& e = s.experiment;
  ExperimentReport merged;
  merged.kind = "concentration";
  auto add = [&](const ExperimentReport& r) {
    merged.records.insert(merged.records.end(), r.records.begin(), r.records.end());
    merged.trials.insert(merged.trials.end(), r.trials.begin(), r.trials.end());
  };
  if (!e.sizes.empty()) {
    if (!s.limit) throw DomainError("scenario has no types block");
    for (std::size_t n : e.sizes) {
      const Discretization d = discretize(*s.limit, n, e.scheme, e.seed);
      add(concentration_experiment(d.game, experiment_profile(d.game, e), e.trials, e.seed));
    }
  } else if (s.players) {
    const MixedProfile prof = s.profile ? *s.profile : experiment_profile(*s.players, e);
    add(concentration_experiment(*s.players, prof, e.trials, e.seed));
  } else {
    throw DomainError("concentrate needs experiment.sizes or a players block");
  }
  merged.metadata["config"] = config("concentrate", c, s);
  emit(c, report_to_json(merged), report_to_csv(merged), trials_to_csv(merged));
  return kExitOk;
}

int cmd_closedgraph(const Common& c, bool strict) {
  const Scenario s = load(c);
  const Experiment& e = s.experiment;
  if (!s.limit) throw DomainError("scenario has no types block");
  if (e.sizes.empty()) throw DomainError("closedgraph needs experiment.sizes");
  GameSequenceSpec spec{*s.limit, e.sizes, e.scheme, e.seed};
  ExperimentReport r = closed_graph_experiment(spec, solver_options(e), default_probes(s.space));
  r.metadata["config"] = config("closedgraph", c, s);
  emit(c, report_to_json(r), report_to_csv(r));
  bool flagged = false;
  for (const auto& rec : r.records) flagged = flagged || rec.flagged;
  return strict && flagged ? kExitFlagged : kExitOk;
}

int cmd_ned(const Common& c, bool strict) {
  const Scenario s = load(c);
  const Experiment& e = s.experiment;
  if (!s.limit) throw DomainError("scenario has no types block");
  const auto sol = solve_limit_rsne(*s.limit, limit_options(e));
  const JointDistribution dist = induced_distribution(*s.limit, sol.strategy);
  const double check_tol = 2.0 * e.tol;
  const NedReport ned = ned_check(dist, *s.limit, check_tol);

  // name each characteristic row by the first type carrying it
  std::vector<std::string> names;
  for (const auto& ch : dist.characteristics) {
    std::string name;
    for (std::size_t t = 0; t < s.limit->size() && name.empty(); ++t)
      if (s.limit->type(t).characteristic() == ch) name = s.type_names[t];
    names.push_back(name);
  }
  ordered_json j;
  j["kind"] = "ned";
  j["config"] = config("ned", c, s);
  j["certified_gap"] = round_significant(sol.certified_gap);
  j["check_tol"] = check_tol;
  j["is_ned"] = ned.is_ned;
  j["summary"] = measure_to_json(dist.action_marginal());
  std::ostringstream table;
  table << "characteristic,action,weight,gap\n";
  ordered_json atoms = ordered_json::array();
  for (const auto& a : ned.atoms) {
    const std::string& action = s.space->label(a.action);
    atoms.push_back({{"characteristic", names[a.characteristic]},
                     {"action", action},
                     {"weight", round_significant(a.weight)},
                     {"gap", std::isfinite(a.gap) ? ordered_json(round_significant(a.gap)) : ordered_json()}});
    table << names[a.characteristic] << "," << action << "," << format_significant(a.weight) << ","
          << format_significant(a.gap) << "\n";
  }
  j["atoms"] = atoms;
  std::cerr << (ned.is_ned ? "ned: pass" : "ned: FAIL") << "\n";
  emit(c, j, table.str());
  return strict && !ned.is_ned ? kExitFlagged : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibria, probability metrics and convergence experiments for large anonymous games"};
  app.require_subcommand(1);

  Common common;
  auto* validate = app.add_subcommand("validate", "check a scenario file");
  add_common(validate, common);

  std::string p_name, q_name;
  auto* metric = app.add_subcommand("metric", "Prohorov and bounded-Lipschitz distance of two named measures");
  add_common(metric, common);
  metric->add_option("--p", p_name, "first measure name")->required();
  metric->add_option("--q", q_name, "second measure name")->required();

  std::optional<std::size_t> n;
  bool limit = false, use_players = false, strict = false;
  auto* solve = app.add_subcommand("solve", "solve a finite or limit game");
  add_common(solve, common);
  auto* n_opt = solve->add_option("--n", n, "discretize the limit game into n players")->check(CLI::PositiveNumber);
  auto* limit_opt = solve->add_flag("--limit", limit, "solve the limit game");
  auto* players_opt = solve->add_flag("--players", use_players, "solve the explicit players block");
  n_opt->excludes(limit_opt)->excludes(players_opt);
  limit_opt->excludes(players_opt);
  solve->add_flag("--strict", strict, "exit 2 when the certified gap exceeds tol");

  auto* concentrate = app.add_subcommand("concentrate", "empirical vs mean summary concentration experiment");
  add_common(concentrate, common);

  auto* closedgraph = app.add_subcommand("closedgraph", "closed-graph experiment along a discretized sequence");
  add_common(closedgraph, common);
  closedgraph->add_flag("--strict", strict, "exit 2 when any size is flagged");

  auto* ned = app.add_subcommand("ned", "solve the limit game and check its induced distribution");
  add_common(ned, common);
  ned->add_flag("--strict", strict, "exit 2 when the check fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (solve->parsed() && !n && !limit && !use_players) {
    std::cerr << "solve: give one of --n, --limit or --players\n";
    return kExitValidation;
  }

  try {
    if (validate->parsed()) return cmd_validate(common);
    if (metric->parsed()) return cmd_metric(common, p_name, q_name);
    if (solve->parsed()) return cmd_solve(common, n, limit, use_players, strict);
    if (concentrate->parsed()) return cmd_concentrate(common);
    if (closedgraph->parsed()) return cmd_closedgraph(common, strict);
    if (ned->parsed()) return cmd_ned(common, strict);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ScenarioError& e) {
    for (const auto& issue : e.issues()) std::cerr << "error: " << issue.describe() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
