#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "largegame/error.hpp"
#include "largegame/measure.hpp"
#include "largegame/metric_space.hpp"
#include "largegame/payoff.hpp"
#include "largegame/random.hpp"
#include "largegame/refine.hpp"

namespace largegame {

struct Player {
  double weight;
  ActionSubset feasible;
  Payoff payoff;
};

// Finite-player anonymous game: weighted players sharing an action space,
// each with a feasible set and a payoff of (own action, action summary).
class FinitePlayerGame {
 public:
  FinitePlayerGame(SpacePtr space, std::vector<Player> players)
      : space_(std::move(space)), players_(std::move(players)) {
    if (players_.empty()) throw DomainError("a finite game needs at least one player");
    double total = 0.0;
    for (const auto& p : players_) {
      if (!(p.weight > 0.0) || !std::isfinite(p.weight))
        throw DomainError("player weights must be positive");
      require_same_space(space_, p.feasible.space());
      require_same_space(space_, p.payoff.space());
      total += p.weight;
    }
    if (std::abs(total - 1.0) > kMassTolerance)
      throw DomainError("player weights sum to " + std::to_string(total) + ", not 1");
  }

  const SpacePtr& space() const { return space_; }
  const std::vector<Player>& players() const { return players_; }
  const Player& player(std::size_t i) const { return players_.at(i); }
  std::size_t size() const { return players_.size(); }

  double max_weight() const {
    double m = 0.0;
    for (const auto& p : players_) m = std::max(m, p.weight);
    return m;
  }

 private:
  SpacePtr space_;
  std::vector<Player> players_;
};

// One measure per player; player i's measure lives on its feasible set.
using MixedProfile = std::vector<Measure>;

inline void validate_profile(const FinitePlayerGame& game, const MixedProfile& profile) {
  if (profile.size() != game.size())
    throw StructuralError("profile has " + std::to_string(profile.size()) + " strategies for " +
                          std::to_string(game.size()) + " players");
  for (std::size_t i = 0; i < game.size(); ++i) {
    require_same_space(game.space(), profile[i].space());
    if (std::abs(profile[i].mass_on(game.player(i).feasible) - 1.0) > kMassTolerance)
      throw DomainError("strategy of player " + std::to_string(i) + " leaves its feasible set");
  }
}

inline MixedProfile uniform_profile(const FinitePlayerGame& game) {
  MixedProfile g;
  g.reserve(game.size());
  for (const auto& p : game.players()) g.push_back(Measure::uniform_on(p.feasible));
  return g;
}

// Mean measure sum_j weight_j * g_j.
inline Measure summary(const FinitePlayerGame& game, const MixedProfile& profile) {
  validate_profile(game, profile);
  std::vector<double> w(game.space()->size(), 0.0);
  for (std::size_t j = 0; j < game.size(); ++j)
    for (std::size_t a = 0; a < w.size(); ++a) w[a] += game.player(j).weight * profile[j][a];
  return Measure(game.space(), std::move(w));
}

namespace detail {

inline std::vector<double> summary_weights(const FinitePlayerGame& game, const MixedProfile& profile) {
  std::vector<double> w(game.space()->size(), 0.0);
  for (std::size_t j = 0; j < game.size(); ++j)
    for (std::size_t a = 0; a < w.size(); ++a) w[a] += game.player(j).weight * profile[j][a];
  return w;
}

// tau - lambda_i g_i + lambda_i delta_{a'}
inline std::vector<double> deviation_weights(const FinitePlayerGame& game, std::span<const double> tau,
                                             std::size_t i, std::size_t a_prime,
                                             std::span<const double> own) {
  std::vector<double> w(tau.begin(), tau.end());
  const double lam = game.player(i).weight;
  for (std::size_t a = 0; a < w.size(); ++a) w[a] -= lam * own[a];
  w[a_prime] += lam;
  return w;
}

}  // namespace detail

// lambda_i delta_{a'} + sum_{j != i} lambda_j g_j
inline Measure deviation_summary(const FinitePlayerGame& game, std::size_t i, std::size_t a_prime,
                                 const MixedProfile& profile) {
  validate_profile(game, profile);
  if (i >= game.size()) throw StructuralError("player index out of range");
  if (!game.player(i).feasible.contains(a_prime))
    throw DomainError("deviation to an infeasible action");
  std::vector<double> w(game.space()->size(), 0.0);
  for (std::size_t j = 0; j < game.size(); ++j) {
    if (j == i) continue;
    for (std::size_t a = 0; a < w.size(); ++a) w[a] += game.player(j).weight * profile[j][a];
  }
  w[a_prime] += game.player(i).weight;
  return Measure(game.space(), std::move(w));
}

// sum_a strat(a) * v_i(a, tau)
inline double mean_field_payoff(const FinitePlayerGame& game, std::size_t i, const Measure& strat,
                                const Measure& tau) {
  const Player& p = game.player(i);
  require_same_space(game.space(), strat.space());
  require_same_space(game.space(), tau.space());
  if (std::abs(strat.mass_on(p.feasible) - 1.0) > kMassTolerance)
    throw DomainError("strategy leaves the feasible set");
  double v = 0.0;
  for (std::size_t a = 0; a < strat.size(); ++a)
    if (strat[a] > 0.0) v += strat[a] * p.payoff.eval(a, tau);
  return v;
}

inline double mean_field_payoff(const FinitePlayerGame& game, std::size_t i, std::size_t action,
                                const Measure& tau) {
  return mean_field_payoff(game, i, Measure::point_mass(game.space(), action), tau);
}

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

// E[v_i(x_i, sum_j lambda_j delta_{x_j})] with x_j ~ g_j independent, by
// enumerating every joint pure outcome. With a deviation a', player i's
// action is fixed at a' (own summary weight lambda_i delta_{a'}).
inline double exact_expected_payoff(const FinitePlayerGame& game, std::size_t i,
                                    const MixedProfile& profile,
                                    std::optional<std::size_t> deviation = std::nullopt,
                                    std::uint64_t cap = kDefaultEnumerationCap) {
  validate_profile(game, profile);
  if (i >= game.size()) throw StructuralError("player index out of range");
  if (deviation && !game.player(i).feasible.contains(*deviation))
    throw DomainError("deviation to an infeasible action");

  const std::size_t n = game.size();
  std::vector<std::vector<std::size_t>> supports(n);
  double outcomes = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (deviation && j == i)
      supports[j] = {*deviation};
    else
      supports[j] = profile[j].support();
    outcomes *= static_cast<double>(supports[j].size());
  }
  if (outcomes > static_cast<double>(cap))
    throw CapacityError("exact enumeration needs " + std::to_string(outcomes) +
                        " outcomes (cap " + std::to_string(cap) +
                        "); use mc_expected_payoff instead");

  const Payoff& v = game.player(i).payoff;
  std::vector<std::size_t> odometer(n, 0);
  std::vector<double> w(game.space()->size(), 0.0);
  double total = 0.0;
  for (;;) {
    std::fill(w.begin(), w.end(), 0.0);
    double prob = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t a = supports[j][odometer[j]];
      w[a] += game.player(j).weight;
      if (!(deviation && j == i)) prob *= profile[j][a];
    }
    total += prob * v.eval_weights(supports[i][odometer[i]], w);

    std::size_t j = 0;
    while (j < n && ++odometer[j] == supports[j].size()) odometer[j++] = 0;
    if (j == n) break;
  }
  return total;
}

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

// Seeded Monte Carlo estimate of exact_expected_payoff with its standard
// error. Sample t uses the stream (seed, i, t).
inline McEstimate mc_expected_payoff(const FinitePlayerGame& game, std::size_t i,
                                     const MixedProfile& profile, std::optional<std::size_t> deviation,
                                     std::size_t samples, std::uint64_t seed) {
  validate_profile(game, profile);
  if (samples < 2) throw DomainError("Monte Carlo estimate needs at least two samples");
  if (deviation && !game.player(i).feasible.contains(*deviation))
    throw DomainError("deviation to an infeasible action");
  const Payoff& v = game.player(i).payoff;
  std::vector<double> w(game.space()->size());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t t = 0; t < samples; ++t) {
    Rng rng = make_stream(seed, {i, t});
    std::fill(w.begin(), w.end(), 0.0);
    std::size_t own = 0;
    for (std::size_t j = 0; j < game.size(); ++j) {
      std::size_t a = (deviation && j == i) ? *deviation : sample_index(profile[j].weights(), rng);
      if (j == i) own = a;
      w[a] += game.player(j).weight;
    }
    const double x = v.eval_weights(own, w);
    const double delta = x - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (x - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

// max_i max_{a'} [E dev payoff(a') - E payoff]^+ with exact expectations.
inline double rsne_gap_exact(const FinitePlayerGame& game, const MixedProfile& profile,
                             std::uint64_t cap = kDefaultEnumerationCap) {
  double gap = 0.0;
  for (std::size_t i = 0; i < game.size(); ++i) {
    const double base = exact_expected_payoff(game, i, profile, std::nullopt, cap);
    for (std::size_t a : game.player(i).feasible.members())
      gap = std::max(gap, exact_expected_payoff(game, i, profile, a, cap) - base);
  }
  return gap;
}

namespace detail {

// Mean-field deviation payoffs v_i(a', deviation summary) for every player
// and feasible action, plus each player's mean-field payoff at the summary.
struct MeanFieldTable {
  std::vector<std::vector<double>> deviation;  // [player][feasible index]
  std::vector<double> base;                    // v_i(g_i, tau)
};

inline MeanFieldTable mean_field_table(const FinitePlayerGame& game, const MixedProfile& profile) {
  const auto tau = summary_weights(game, profile);
  MeanFieldTable t;
  t.deviation.resize(game.size());
  t.base.resize(game.size());
  for (std::size_t i = 0; i < game.size(); ++i) {
    const Player& p = game.player(i);
    double base = 0.0;
    for (std::size_t a = 0; a < tau.size(); ++a)
      if (profile[i][a] > 0.0) base += profile[i][a] * p.payoff.eval_weights(a, tau);
    t.base[i] = base;
    for (std::size_t a : p.feasible.members()) {
      const auto w = deviation_weights(game, tau, i, a, profile[i].weights());
      t.deviation[i].push_back(p.payoff.eval_weights(a, w));
    }
  }
  return t;
}

inline double mean_field_gap_of(const MeanFieldTable& t) {
  double gap = 0.0;
  for (std::size_t i = 0; i < t.base.size(); ++i)
    for (double d : t.deviation[i]) gap = std::max(gap, d - t.base[i]);
  return gap;
}

inline refine::Blocks to_blocks(const FinitePlayerGame& game, const MixedProfile& profile) {
  refine::Blocks b(game.size());
  for (std::size_t i = 0; i < game.size(); ++i)
    for (std::size_t a : game.player(i).feasible.members()) b[i].push_back(profile[i][a]);
  return b;
}

// Builds a profile from per-player feasible-set probabilities without
// validation (the refinement evaluates slightly infeasible iterates).
inline std::vector<std::vector<double>> raw_profile(const FinitePlayerGame& game,
                                                    const refine::Blocks& b) {
  std::vector<std::vector<double>> g(game.size(), std::vector<double>(game.space()->size(), 0.0));
  for (std::size_t i = 0; i < game.size(); ++i) {
    const auto& members = game.player(i).feasible.members();
    for (std::size_t k = 0; k < members.size(); ++k) g[i][members[k]] = b[i][k];
  }
  return g;
}

inline MixedProfile from_blocks(const FinitePlayerGame& game, const refine::Blocks& b) {
  MixedProfile g;
  for (auto& w : raw_profile(game, b)) g.emplace_back(game.space(), std::move(w));
  return g;
}

}  // namespace detail

// max_i max_{a'} [v_i(a', deviation summary) - v_i(g_i, summary)]^+
inline double rsne_gap_meanfield(const FinitePlayerGame& game, const MixedProfile& profile) {
  validate_profile(game, profile);
  return detail::mean_field_gap_of(detail::mean_field_table(game, profile));
}

enum class SolverMethod { kDampedBestResponse, kFictitiousPlay };

struct SolverOptions {
  SolverMethod method = SolverMethod::kDampedBestResponse;
  double tol = 1e-6;
  std::size_t max_iter = 2000;
  std::uint64_t seed = 0;
  double tie_tol = 1e-9;
  // attempt an active-set Newton polish of the current iterate at
  // iterations refine_start, 2*refine_start, 4*refine_start, ...; 0 disables
  std::size_t refine_start = 16;
};

struct SolveResult {
  MixedProfile profile;
  double certified_gap = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t iterations = 0;
  bool refined = false;  // best profile came from the Newton polish
};

namespace detail {

inline std::vector<double> best_reply(const std::vector<double>& values, double tie_tol) {
  const double best = *std::max_element(values.begin(), values.end());
  std::vector<double> br(values.size(), 0.0);
  std::size_t ties = 0;
  for (std::size_t k = 0; k < values.size(); ++k)
    if (values[k] >= best - tie_tol) {
      br[k] = 1.0;
      ++ties;
    }
  for (double& b : br) b /= static_cast<double>(ties);
  return br;
}

inline refine::PayoffTable mean_field_deviation_table(const FinitePlayerGame& game) {
  return [&game](const refine::Blocks& b) {
    const auto g = raw_profile(game, b);
    std::vector<double> tau(game.space()->size(), 0.0);
    for (std::size_t j = 0; j < game.size(); ++j)
      for (std::size_t a = 0; a < tau.size(); ++a) tau[a] += game.player(j).weight * g[j][a];
    refine::Blocks t(game.size());
    for (std::size_t i = 0; i < game.size(); ++i) {
      const Player& p = game.player(i);
      for (std::size_t a : p.feasible.members())
        t[i].push_back(p.payoff.eval_weights(a, deviation_weights(game, tau, i, a, g[i])));
    }
    return t;
  };
}

}  // namespace detail

// Mean-field equilibrium search. Players best-respond (uniform over the
// tie_tol-argmax of a' -> v_i(a', deviation summary)) and mix the reply in
// with step 1/(k+1): simultaneously for damped-br, one player at a time in a
// seeded order for fictitious-play. Periodically the iterate is polished by
// an active-set Newton solve of the indifference conditions. Returns the
// best profile seen with its re-measured gap; never throws on
// non-convergence.
inline SolveResult solve_rsne(const FinitePlayerGame& game, const SolverOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw DomainError("solver tolerance must be positive");
  SolveResult result;
  refine::Blocks g = detail::to_blocks(game, uniform_profile(game));
  const auto table_fn = detail::mean_field_deviation_table(game);

  auto consider = [&](const refine::Blocks& b, bool refined) {
    const MixedProfile prof = detail::from_blocks(game, b);
    const double gap = rsne_gap_meanfield(game, prof);
    if (gap < result.certified_gap) {
      result.certified_gap = gap;
      result.profile = prof;
      result.refined = refined;
    }
    return gap;
  };

  std::size_t next_refine = opt.refine_start;
  Rng rng = make_stream(opt.seed, {0x66705f6f72646572ull});
  std::vector<std::size_t> order(game.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t k = 1; k <= opt.max_iter; ++k) {
    result.iterations = k;
    if (consider(g, false) <= opt.tol) break;
    if (next_refine != 0 && k == next_refine) {
      next_refine *= 2;
      if (auto polished = refine::solve_indifference(g, table_fn)) {
        if (consider(*polished, true) <= opt.tol) break;
      }
    }
    const double alpha = 1.0 / static_cast<double>(k + 1);
    if (opt.method == SolverMethod::kDampedBestResponse) {
      const auto t = table_fn(g);
      for (std::size_t i = 0; i < game.size(); ++i) {
        const auto br = detail::best_reply(t[i], opt.tie_tol);
        for (std::size_t q = 0; q < br.size(); ++q) g[i][q] = (1.0 - alpha) * g[i][q] + alpha * br[q];
      }
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      auto raw = detail::raw_profile(game, g);
      std::vector<double> tau(game.space()->size(), 0.0);
      for (std::size_t j = 0; j < game.size(); ++j)
        for (std::size_t a = 0; a < tau.size(); ++a) tau[a] += game.player(j).weight * raw[j][a];
      for (std::size_t i : order) {
        const Player& p = game.player(i);
        const auto& members = p.feasible.members();
        std::vector<double> row;
        for (std::size_t a : members)
          row.push_back(p.payoff.eval_weights(a, detail::deviation_weights(game, tau, i, a, raw[i])));
        const auto br = detail::best_reply(row, opt.tie_tol);
        for (std::size_t q = 0; q < br.size(); ++q) {
          const double next = (1.0 - alpha) * g[i][q] + alpha * br[q];
          tau[members[q]] += p.weight * (next - g[i][q]);
          raw[i][members[q]] = next;
          g[i][q] = next;
        }
      }
    }
  }
  result.converged = result.certified_gap <= opt.tol;
  return result;
}

// Active-set Newton polish of `start` toward an exact RSNE: deviation
// expectations (enumerated exactly) equal on each player's support and no
// higher outside it. Returns the polished profile and its exact gap, or
// nullopt when the Newton system fails to converge.
inline std::optional<std::pair<MixedProfile, double>> polish_exact_rsne(
    const FinitePlayerGame& game, const MixedProfile& start,
    std::uint64_t cap = kDefaultEnumerationCap) {
  validate_profile(game, start);
  const std::size_t n = game.size();
  refine::PayoffTable table = [&game, cap, n](const refine::Blocks& b) {
    const auto g = detail::raw_profile(game, b);
    refine::Blocks t(n);
    std::vector<std::vector<std::size_t>> supports(n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t a : game.player(j).feasible.members()) supports[j].push_back(a);
    double outcomes = 1.0;
    for (const auto& s : supports) outcomes *= static_cast<double>(s.size());
    if (outcomes > static_cast<double>(cap)) throw CapacityError("exact polish exceeds enumeration cap");
    std::vector<double> w(game.space()->size());
    for (std::size_t i = 0; i < n; ++i) {
      const Player& p = game.player(i);
      for (std::size_t dev : p.feasible.members()) {
        // enumerate the other players' feasible actions; raw probabilities
        // may be slightly negative on Newton iterates
        std::vector<std::size_t> odo(n, 0);
        double total = 0.0;
        for (;;) {
          std::fill(w.begin(), w.end(), 0.0);
          double prob = 1.0;
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t a = (j == i) ? dev : supports[j][odo[j]];
            w[a] += game.player(j).weight;
            if (j != i) prob *= g[j][a];
          }
          if (prob != 0.0) total += prob * p.payoff.eval_weights(dev, w);
          std::size_t j = 0;
          while (j < n) {
            if (j == i) {
              ++j;
              continue;
            }
            if (++odo[j] == supports[j].size()) {
              odo[j++] = 0;
            } else {
              break;
            }
          }
          if (j == n) break;
        }
        t[i].push_back(total);
      }
    }
    return t;
  };
  auto polished = refine::solve_indifference(detail::to_blocks(game, start), table);
  if (!polished) return std::nullopt;
  MixedProfile prof = detail::from_blocks(game, *polished);
  const double gap = rsne_gap_exact(game, prof, cap);
  return std::make_pair(std::move(prof), gap);
}

}  // namespace largegame
