#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "largegame/error.hpp"
#include "largegame/measure.hpp"
#include "largegame/metric_space.hpp"
#include "largegame/payoff.hpp"
#include "largegame/refine.hpp"

namespace largegame {

// A player characteristic: feasible action set and payoff.
struct Characteristic {
  ActionSubset feasible;
  Payoff payoff;

  friend bool operator==(const Characteristic& a, const Characteristic& b) {
    return a.feasible == b.feasible && a.payoff == b.payoff;
  }
};

struct PlayerType {
  double mass;
  ActionSubset feasible;
  Payoff payoff;

  Characteristic characteristic() const { return {feasible, payoff}; }
};

// Nonatomic game in distribution form: finitely many player types with
// masses summing to one.
class LimitGame {
 public:
  LimitGame(SpacePtr space, std::vector<PlayerType> types)
      : space_(std::move(space)), types_(std::move(types)) {
    if (types_.empty()) throw DomainError("a limit game needs at least one type");
    double total = 0.0;
    for (const auto& t : types_) {
      if (!(t.mass > 0.0) || !std::isfinite(t.mass)) throw DomainError("type masses must be positive");
      require_same_space(space_, t.feasible.space());
      require_same_space(space_, t.payoff.space());
      total += t.mass;
    }
    if (std::abs(total - 1.0) > kMassTolerance)
      throw DomainError("type masses sum to " + std::to_string(total) + ", not 1");
  }

  const SpacePtr& space() const { return space_; }
  const std::vector<PlayerType>& types() const { return types_; }
  const PlayerType& type(std::size_t t) const { return types_.at(t); }
  std::size_t size() const { return types_.size(); }

  // Distinct characteristics with their total mass (duplicated types merged).
  std::vector<std::pair<Characteristic, double>> characteristic_distribution() const {
    std::vector<std::pair<Characteristic, double>> out;
    for (const auto& t : types_) {
      auto c = t.characteristic();
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == c; });
      if (it == out.end())
        out.emplace_back(std::move(c), t.mass);
      else
        it->second += t.mass;
    }
    return out;
  }

 private:
  SpacePtr space_;
  std::vector<PlayerType> types_;
};

// One measure per type, carried by that type's feasible set.
using TypeStrategy = std::vector<Measure>;

inline void validate_strategy(const LimitGame& game, const TypeStrategy& g) {
  if (g.size() != game.size()) throw StructuralError("strategy size does not match type count");
  for (std::size_t t = 0; t < g.size(); ++t) {
    require_same_space(game.space(), g[t].space());
    if (std::abs(g[t].mass_on(game.type(t).feasible) - 1.0) > kMassTolerance)
      throw DomainError("strategy of type " + std::to_string(t) + " leaves its feasible set");
  }
}

inline TypeStrategy uniform_strategy(const LimitGame& game) {
  TypeStrategy g;
  for (const auto& t : game.types()) g.push_back(Measure::uniform_on(t.feasible));
  return g;
}

// Pure strategy f (one action per type) as degenerate randomized strategy.
inline TypeStrategy pure_strategy(const LimitGame& game, const std::vector<std::size_t>& f) {
  if (f.size() != game.size()) throw StructuralError("pure strategy size does not match type count");
  TypeStrategy g;
  for (std::size_t t = 0; t < f.size(); ++t) g.push_back(Measure::point_mass(game.space(), f[t]));
  validate_strategy(game, g);
  return g;
}

inline Measure societal_summary(const LimitGame& game, const TypeStrategy& g) {
  validate_strategy(game, g);
  std::vector<std::pair<double, Measure>> parts;
  for (std::size_t t = 0; t < g.size(); ++t) parts.emplace_back(game.type(t).mass, g[t]);
  return mix(parts);
}

// min_{a' in feasible} ( ∫ v(a, tau) strat(da) - v(a', tau) ); nonnegative
// iff strat is optimal against tau within the feasible set.
inline double psi_gap(const ActionSubset& feasible, const Payoff& payoff, const Measure& strat,
                      const Measure& tau) {
  require_same_space(feasible.space(), payoff.space());
  require_same_space(feasible.space(), strat.space());
  require_same_space(feasible.space(), tau.space());
  if (std::abs(strat.mass_on(feasible) - 1.0) > kMassTolerance)
    throw DomainError("strategy leaves the feasible set");
  double expected = 0.0;
  for (std::size_t a = 0; a < strat.size(); ++a)
    if (strat[a] > 0.0) expected += strat[a] * payoff.eval(a, tau);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a : feasible.members()) best = std::max(best, payoff.eval(a, tau));
  return expected - best;
}

struct RsneCheck {
  bool is_equilibrium = false;
  double worst_gap = 0.0;  // max over types of -psi, clipped at 0
  std::size_t witness_type = 0;
  std::size_t witness_action = 0;
};

// Pure deviations suffice: expected payoff is linear in the deviating
// measure, so its maximum over M(A_t) sits at a point mass.
inline RsneCheck rsne_check(const LimitGame& game, const TypeStrategy& g, double tol) {
  if (tol < 0.0) throw DomainError("tolerance must be nonnegative");
  const Measure tau = societal_summary(game, g);
  RsneCheck out;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < game.size(); ++t) {
    const auto& type = game.type(t);
    const double psi = psi_gap(type.feasible, type.payoff, g[t], tau);
    if (psi < worst) {
      worst = psi;
      out.witness_type = t;
      std::size_t arg = type.feasible.members().front();
      for (std::size_t a : type.feasible.members())
        if (type.payoff.eval(a, tau) > type.payoff.eval(arg, tau)) arg = a;
      out.witness_action = arg;
    }
  }
  out.worst_gap = std::max(0.0, -worst);
  out.is_equilibrium = worst >= -tol;
  return out;
}

// Pure-strategy Nash condition v_t(f(t), lambda f^-1) >= v_t(a, lambda f^-1)
// for every feasible a, with the summary built directly from type masses.
inline bool pure_ne_check(const LimitGame& game, const std::vector<std::size_t>& f, double tol) {
  if (f.size() != game.size()) throw StructuralError("pure strategy size does not match type count");
  std::vector<double> w(game.space()->size(), 0.0);
  for (std::size_t t = 0; t < f.size(); ++t) {
    if (!game.type(t).feasible.contains(f[t])) throw DomainError("pure strategy leaves the feasible set");
    w[f[t]] += game.type(t).mass;
  }
  const Measure tau(game.space(), std::move(w));
  for (std::size_t t = 0; t < f.size(); ++t) {
    const auto& type = game.type(t);
    const double own = type.payoff.eval(f[t], tau);
    for (std::size_t a : type.feasible.members())
      if (type.payoff.eval(a, tau) > own + tol) return false;
  }
  return true;
}

struct LimitSolverOptions {
  double tol = 1e-6;
  std::size_t max_iter = 2000;
  double tie_tol = 1e-9;
  std::size_t refine_start = 16;  // 0 disables the Newton polish
};

struct LimitSolveResult {
  TypeStrategy strategy;
  double certified_gap = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t iterations = 0;
  bool refined = false;
};

namespace detail {

inline std::vector<double> raw_summary(const LimitGame& game, const refine::Blocks& b) {
  std::vector<double> tau(game.space()->size(), 0.0);
  for (std::size_t t = 0; t < game.size(); ++t) {
    const auto& members = game.type(t).feasible.members();
    for (std::size_t k = 0; k < members.size(); ++k) tau[members[k]] += game.type(t).mass * b[t][k];
  }
  return tau;
}

inline refine::Blocks limit_payoff_table(const LimitGame& game, const refine::Blocks& b) {
  const auto tau = raw_summary(game, b);
  refine::Blocks table(game.size());
  for (std::size_t t = 0; t < game.size(); ++t)
    for (std::size_t a : game.type(t).feasible.members())
      table[t].push_back(game.type(t).payoff.eval_weights(a, tau));
  return table;
}

inline TypeStrategy strategy_from_blocks(const LimitGame& game, const refine::Blocks& b) {
  TypeStrategy g;
  for (std::size_t t = 0; t < game.size(); ++t) {
    std::vector<double> w(game.space()->size(), 0.0);
    const auto& members = game.type(t).feasible.members();
    for (std::size_t k = 0; k < members.size(); ++k) w[members[k]] = b[t][k];
    g.emplace_back(game.space(), std::move(w));
  }
  return g;
}

}  // namespace detail

// Damped fixed-point iteration on the summary: every type best-responds
// (uniform over the tie_tol-argmax) and the strategy moves toward the reply
// with step 1/(k+1), so the summary follows tau_{k+1} = (1-a_k) tau_k +
// a_k summary(BR). Periodic active-set Newton polish as in solve_rsne.
// Deterministic; never throws on non-convergence.
inline LimitSolveResult solve_limit_rsne(const LimitGame& game, const LimitSolverOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw DomainError("solver tolerance must be positive");
  LimitSolveResult result;
  refine::Blocks g(game.size());
  for (std::size_t t = 0; t < game.size(); ++t)
    g[t].assign(game.type(t).feasible.size(), 1.0 / static_cast<double>(game.type(t).feasible.size()));
  const refine::PayoffTable table_fn = [&game](const refine::Blocks& b) {
    return detail::limit_payoff_table(game, b);
  };

  auto consider = [&](const refine::Blocks& b, bool refined) {
    TypeStrategy s = detail::strategy_from_blocks(game, b);
    const double gap = rsne_check(game, s, 0.0).worst_gap;
    if (gap < result.certified_gap) {
      result.certified_gap = gap;
      result.strategy = std::move(s);
      result.refined = refined;
    }
    return gap;
  };

  std::size_t next_refine = opt.refine_start;
  for (std::size_t k = 1; k <= opt.max_iter; ++k) {
    result.iterations = k;
    if (consider(g, false) <= opt.tol) break;
    if (next_refine != 0 && k == next_refine) {
      next_refine *= 2;
      if (auto polished = refine::solve_indifference(g, table_fn))
        if (consider(*polished, true) <= opt.tol) break;
    }
    const auto table = table_fn(g);
    const double alpha = 1.0 / static_cast<double>(k + 1);
    for (std::size_t t = 0; t < game.size(); ++t) {
      const double best = *std::max_element(table[t].begin(), table[t].end());
      std::size_t ties = 0;
      for (double v : table[t]) ties += v >= best - opt.tie_tol ? 1 : 0;
      for (std::size_t q = 0; q < table[t].size(); ++q) {
        const double br = table[t][q] >= best - opt.tie_tol ? 1.0 / static_cast<double>(ties) : 0.0;
        g[t][q] = (1.0 - alpha) * g[t][q] + alpha * br;
      }
    }
  }
  result.converged = result.certified_gap <= opt.tol;
  return result;
}

// Finitely supported measure on (characteristic, action) pairs.
struct JointDistribution {
  SpacePtr actions;
  std::vector<Characteristic> characteristics;
  std::vector<std::vector<double>> weight;  // [characteristic][action]

  Measure action_marginal() const {
    std::vector<double> w(actions->size(), 0.0);
    for (const auto& row : weight)
      for (std::size_t a = 0; a < w.size(); ++a) w[a] += row[a];
    return Measure(actions, std::move(w));
  }

  std::vector<double> characteristic_marginal() const {
    std::vector<double> m;
    for (const auto& row : weight) {
      double s = 0.0;
      for (double x : row) s += x;
      m.push_back(s);
    }
    return m;
  }
};

// ∫ delta_{G(t)} ⊗ g_t d(type mass): weight mass_t * g_t(a) on ((A_t, v_t), a).
// Types sharing a characteristic are merged into one atom row.
inline JointDistribution induced_distribution(const LimitGame& game, const TypeStrategy& g) {
  validate_strategy(game, g);
  JointDistribution d;
  d.actions = game.space();
  for (std::size_t t = 0; t < game.size(); ++t) {
    const auto c = game.type(t).characteristic();
    auto it = std::find(d.characteristics.begin(), d.characteristics.end(), c);
    std::size_t row = static_cast<std::size_t>(it - d.characteristics.begin());
    if (it == d.characteristics.end()) {
      d.characteristics.push_back(c);
      d.weight.emplace_back(game.space()->size(), 0.0);
    }
    for (std::size_t a = 0; a < game.space()->size(); ++a) d.weight[row][a] += game.type(t).mass * g[t][a];
  }
  return d;
}

struct AtomGap {
  std::size_t characteristic = 0;
  std::size_t action = 0;
  double weight = 0.0;
  double gap = 0.0;  // max_{x in A'} v(x, tau_A) - v(a, tau_A)
};

struct NedReport {
  bool is_ned = false;
  std::vector<AtomGap> atoms;
};

// Nash equilibrium distribution check: the characteristics marginal must
// match the game (else PreconditionError), and every positive-weight atom
// ((A', v), a) must be a tol-best reply to the action marginal tau_A.
inline NedReport ned_check(const JointDistribution& dist, const LimitGame& game, double tol) {
  require_same_space(dist.actions, game.space());
  if (dist.weight.size() != dist.characteristics.size())
    throw StructuralError("joint distribution rows do not match its characteristics");
  const auto expected = game.characteristic_distribution();
  const auto marginal = dist.characteristic_marginal();

  auto name = [](const Characteristic& c) { return "(" + c.payoff.text() + ")"; };
  for (std::size_t c = 0; c < dist.characteristics.size(); ++c) {
    auto it = std::find_if(expected.begin(), expected.end(),
                           [&](const auto& e) { return e.first == dist.characteristics[c]; });
    const double target = it == expected.end() ? 0.0 : it->second;
    if (std::abs(marginal[c] - target) > tol)
      throw PreconditionError("characteristic " + name(dist.characteristics[c]) + " has mass " +
                              std::to_string(marginal[c]) + " but the game assigns " +
                              std::to_string(target));
  }
  for (const auto& [c, mass] : expected) {
    if (std::find(dist.characteristics.begin(), dist.characteristics.end(), c) == dist.characteristics.end() &&
        mass > tol)
      throw PreconditionError("characteristic " + name(c) + " is missing from the distribution");
  }

  const Measure tau = dist.action_marginal();
  NedReport report;
  report.is_ned = true;
  for (std::size_t c = 0; c < dist.characteristics.size(); ++c) {
    const auto& ch = dist.characteristics[c];
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t x : ch.feasible.members()) best = std::max(best, ch.payoff.eval(x, tau));
    for (std::size_t a = 0; a < tau.size(); ++a) {
      if (dist.weight[c][a] <= 0.0) continue;
      AtomGap atom{c, a, dist.weight[c][a], 0.0};
      atom.gap = ch.feasible.contains(a) ? best - ch.payoff.eval(a, tau)
                                         : std::numeric_limits<double>::infinity();
      if (atom.gap > tol) report.is_ned = false;
      report.atoms.push_back(atom);
    }
  }
  return report;
}

}  // namespace largegame
