#pragma once

#include <algorithm>
#include <chrono>
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
#include "largegame/finite_game.hpp"
#include "largegame/limit_game.hpp"
#include "largegame/measure.hpp"
#include "largegame/metric_space.hpp"
#include "largegame/payoff.hpp"
#include "largegame/random.hpp"
#include "largegame/report.hpp"

namespace largegame {

enum class Scheme { kQuota, kIid };

inline const char* scheme_name(Scheme s) { return s == Scheme::kQuota ? "quota" : "iid"; }

struct GameSequenceSpec {
  LimitGame limit;
  std::vector<std::size_t> sizes;
  Scheme scheme = Scheme::kQuota;
  std::uint64_t master_seed = 0;

  void validate() const {
    if (sizes.empty()) throw DomainError("sequence needs at least one size");
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (sizes[k] < 1) throw DomainError("sizes must be at least 1");
      if (k > 0 && sizes[k] <= sizes[k - 1]) throw DomainError("sizes must be strictly increasing");
    }
  }
};

// A finite game drawn from a limit game, remembering each player's type.
struct Discretization {
  FinitePlayerGame game;
  std::vector<std::size_t> type_of;  // per player

  std::vector<std::size_t> counts(std::size_t types) const {
    std::vector<std::size_t> c(types, 0);
    for (std::size_t t : type_of) ++c[t];
    return c;
  }
};

// Largest-remainder apportionment of n seats to masses; ties go to the
// lower index.
inline std::vector<std::size_t> quota_counts(const std::vector<double>& masses, std::size_t n) {
  std::vector<std::size_t> counts(masses.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t t = 0; t < masses.size(); ++t) {
    const double exact = masses[t] * static_cast<double>(n);
    counts[t] = static_cast<std::size_t>(std::floor(exact + 1e-12));
    assigned += counts[t];
    remainders.emplace_back(exact - static_cast<double>(counts[t]), t);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

// n equal-weight players. Quota assigns types by largest remainder; iid
// samples each player's type from the mass vector with stream (seed, n).
inline Discretization discretize(const LimitGame& limit, std::size_t n, Scheme scheme,
                                 std::uint64_t seed = 0) {
  if (n < 1) throw DomainError("discretization needs at least one player");
  std::vector<double> masses;
  for (const auto& t : limit.types()) masses.push_back(t.mass);
  std::vector<std::size_t> type_of;
  if (scheme == Scheme::kQuota) {
    const auto counts = quota_counts(masses, n);
    for (std::size_t t = 0; t < counts.size(); ++t) type_of.insert(type_of.end(), counts[t], t);
  } else {
    Rng rng = make_stream(seed, {n});
    for (std::size_t i = 0; i < n; ++i) type_of.push_back(sample_index(masses, rng));
  }
  std::vector<Player> players;
  players.reserve(n);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t t : type_of) players.push_back({w, limit.type(t).feasible, limit.type(t).payoff});
  return {FinitePlayerGame(limit.space(), std::move(players)), std::move(type_of)};
}

// max(Hausdorff distance of feasible sets, probed sup-norm distance of payoffs)
inline double characteristics_distance(const Characteristic& c1, const Characteristic& c2,
                                       const std::vector<Measure>& probes) {
  require_same_space(c1.feasible.space(), c2.feasible.space());
  return std::max(hausdorff(c1.feasible, c2.feasible), sup_norm_distance(c1.payoff, c2.payoff, probes));
}

// Dual-BL distance between the characteristics distributions of a finite
// game and a limit game, on the finite metric space of all characteristics
// occurring in either, under characteristics_distance.
inline double characteristics_bl(const FinitePlayerGame& finite, const LimitGame& limit,
                                 const std::vector<Measure>& probes) {
  require_same_space(finite.space(), limit.space());
  std::vector<Characteristic> points;
  auto index_of = [&points](const Characteristic& c) {
    auto it = std::find(points.begin(), points.end(), c);
    if (it != points.end()) return static_cast<std::size_t>(it - points.begin());
    points.push_back(c);
    return points.size() - 1;
  };
  std::vector<std::pair<std::size_t, double>> fin, lim;
  for (const auto& p : finite.players()) fin.emplace_back(index_of({p.feasible, p.payoff}), p.weight);
  for (const auto& t : limit.types()) lim.emplace_back(index_of(t.characteristic()), t.mass);

  const std::size_t k = points.size();
  Matrix dist(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      dist[i][j] = dist[j][i] = characteristics_distance(points[i], points[j], probes);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < k; ++i) labels.push_back("c" + std::to_string(i));
  const SpacePtr space = FiniteMetricSpace::from_matrix(std::move(labels), std::move(dist));

  std::vector<double> wf(k, 0.0), wl(k, 0.0);
  for (auto [i, w] : fin) wf[i] += w;
  for (auto [i, w] : lim) wl[i] += w;
  return bl_distance(Measure(space, std::move(wf)), Measure(space, std::move(wl)));
}

namespace detail {

// Linear-interpolation quantile of a sample (sorted copy).
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double stderr_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

inline void summarize(Record& r, const std::string& name, const std::vector<double>& xs) {
  r.set(name + "_mean", mean_of(xs));
  r.set(name + "_stderr", stderr_of(xs));
  r.set(name + "_q10", quantile(xs, 0.1));
  r.set(name + "_q50", quantile(xs, 0.5));
  r.set(name + "_q90", quantile(xs, 0.9));
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// Empirical measure P_n = sum_j lambda_j delta_{x_j}, x_j ~ g_j independent,
// against the mean measure sum_j lambda_j g_j. Trial t uses the stream
// (seed, n, t). One trial row each, plus an aggregate record with the mean,
// standard error and 10/50/90% quantiles of both distances.
inline ExperimentReport concentration_experiment(const FinitePlayerGame& game, const MixedProfile& profile,
                                                 std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw DomainError("concentration experiment needs at least one trial");
  const auto t0 = std::chrono::steady_clock::now();
  const Measure mean = summary(game, profile);
  const std::size_t n = game.size();
  std::vector<double> weights;
  for (const auto& p : game.players()) weights.push_back(p.weight);

  ExperimentReport report;
  report.kind = "concentration";
  report.metadata["seed"] = seed;
  report.metadata["trials"] = trials;
  report.metadata["players"] = n;

  std::vector<double> bl, rho;
  std::vector<std::size_t> draws(n);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_stream(seed, {n, t});
    for (std::size_t j = 0; j < n; ++j) draws[j] = sample_index(profile[j].weights(), rng);
    const Measure empirical = weighted_empirical(game.space(), draws, weights);
    bl.push_back(bl_distance(empirical, mean));
    rho.push_back(prohorov(empirical, mean));
    Record row;
    row.n = n;
    row.set("trial", static_cast<double>(t)).set("bl", bl.back()).set("prohorov", rho.back());
    report.trials.push_back(std::move(row));
  }
  Record agg;
  agg.n = n;
  agg.set("sup_lambda", game.max_weight());
  detail::summarize(agg, "bl", bl);
  detail::summarize(agg, "prohorov", rho);
  agg.set("wall_time_s", detail::seconds_since(t0));
  report.records.push_back(std::move(agg));
  return report;
}

struct ChebyshevResult {
  double empirical_tail = 0.0;
  double bound = 0.0;
  double binomial_stderr = 0.0;  // sqrt(p(1-p)/trials) at p = min(bound, 1)
};

// ||h||_inf + ||h||_Lip over the space's metric.
inline double bl_norm(const FiniteMetricSpace& space, std::span<const double> h) {
  double sup = 0.0, lip = 0.0;
  for (std::size_t x = 0; x < h.size(); ++x) {
    sup = std::max(sup, std::abs(h[x]));
    for (std::size_t y = x + 1; y < h.size(); ++y) {
      const double diff = std::abs(h[x] - h[y]);
      if (diff == 0.0) continue;
      const double d = space.distance(x, y);
      lip = std::max(lip, d > 0.0 ? diff / d : std::numeric_limits<double>::infinity());
    }
  }
  return sup + lip;
}

// Tail frequency of |sum_j lambda_j (h(x_j) - E h(x_j))| > omega over
// seeded trials, against the bound sup_j lambda_j / omega^2.
inline ChebyshevResult chebyshev_check(const FinitePlayerGame& game, const MixedProfile& profile,
                                       const std::vector<double>& h, double omega, std::size_t trials,
                                       std::uint64_t seed) {
  validate_profile(game, profile);
  const auto& space = *game.space();
  if (h.size() != space.size()) throw StructuralError("test function needs one value per point");
  if (!(omega > 0.0)) throw DomainError("omega must be positive");
  if (trials < 1) throw DomainError("Chebyshev check needs at least one trial");
  for (double v : h)
    if (std::abs(v) > 1.0 + 1e-12) throw DomainError("test function exceeds sup-norm 1");
  if (bl_norm(space, h) > 1.0 + 1e-12) {
    double sup = 0.0;
    for (double v : h) sup = std::max(sup, std::abs(v));
    for (std::size_t x = 0; x < h.size(); ++x)
      for (std::size_t y = x + 1; y < h.size(); ++y) {
        const double d = space.distance(x, y);
        const double lip = d > 0.0 ? std::abs(h[x] - h[y]) / d
                                   : (h[x] == h[y] ? 0.0 : std::numeric_limits<double>::infinity());
        if (sup + lip > 1.0 + 1e-12)
          throw DomainError("test function has BL norm above 1 at pair (" + space.label(x) + ", " +
                            space.label(y) + ")");
      }
  }

  const std::size_t n = game.size();
  std::vector<double> expect(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t a = 0; a < space.size(); ++a) expect[j] += profile[j][a] * h[a];

  std::size_t exceed = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_stream(seed, {n, t});
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t x = sample_index(profile[j].weights(), rng);
      s += game.player(j).weight * (h[x] - expect[j]);
    }
    if (std::abs(s) > omega) ++exceed;
  }
  ChebyshevResult r;
  r.empirical_tail = static_cast<double>(exceed) / static_cast<double>(trials);
  r.bound = game.max_weight() / (omega * omega);
  const double p = std::min(r.bound, 1.0);
  r.binomial_stderr = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  return r;
}

// Per-type average of the players' mixed strategies (equal weights). Types
// with no players get nullopt.
inline std::vector<std::optional<Measure>> type_averaged_strategy(const LimitGame& limit,
                                                                  const Discretization& disc,
                                                                  const MixedProfile& profile) {
  std::vector<std::vector<double>> sum(limit.size(), std::vector<double>(limit.space()->size(), 0.0));
  std::vector<std::size_t> count(limit.size(), 0);
  for (std::size_t i = 0; i < disc.type_of.size(); ++i) {
    const std::size_t t = disc.type_of[i];
    ++count[t];
    for (std::size_t a = 0; a < sum[t].size(); ++a) sum[t][a] += profile[i][a];
  }
  std::vector<std::optional<Measure>> out(limit.size());
  for (std::size_t t = 0; t < limit.size(); ++t) {
    if (count[t] == 0) continue;
    for (double& x : sum[t]) x /= static_cast<double>(count[t]);
    out[t] = Measure(limit.space(), sum[t]);
  }
  return out;
}

// For each n: discretize, solve for a mean-field equilibrium, and record the
// summary tau^n, its certified gap, the characteristics distance to the
// limit, and the limit-game gap max_t [-psi_t(type-averaged g_t^n, tau^n)]^+.
// Then the Cauchy diagnostic bl(tau^n, tau^m) for consecutive sizes, the
// distance to the last tau (proxy limit), and the distance to the summary of
// a solved limit equilibrium.
inline ExperimentReport closed_graph_experiment(const GameSequenceSpec& spec, const SolverOptions& solver,
                                                const std::vector<Measure>& probes) {
  spec.validate();
  const LimitGame& limit = spec.limit;
  ExperimentReport report;
  report.kind = "closed_graph";
  report.metadata["seed"] = spec.master_seed;
  report.metadata["scheme"] = scheme_name(spec.scheme);
  report.metadata["tol"] = solver.tol;
  report.metadata["max_iter"] = solver.max_iter;
  report.metadata["method"] =
      solver.method == SolverMethod::kDampedBestResponse ? "damped-br" : "fictitious-play";
  report.metadata["probes"] = probes.size();

  std::vector<std::optional<Measure>> taus;
  for (std::size_t n : spec.sizes) {
    const auto t0 = std::chrono::steady_clock::now();
    Record r;
    r.n = n;
    try {
      const Discretization disc = discretize(limit, n, spec.scheme, spec.master_seed);
      SolverOptions opt = solver;
      opt.seed = make_stream(spec.master_seed, {n})();
      const SolveResult sol = solve_rsne(disc.game, opt);
      const Measure tau = summary(disc.game, sol.profile);
      r.set("sup_lambda", disc.game.max_weight());
      r.set("certified_gap", sol.certified_gap);
      r.set("solver_iterations", static_cast<double>(sol.iterations));
      r.set("characteristics_bl", characteristics_bl(disc.game, limit, probes));

      const auto avg = type_averaged_strategy(limit, disc, sol.profile);
      double limit_gap = 0.0;
      bool missing = false;
      for (std::size_t t = 0; t < limit.size(); ++t) {
        if (!avg[t]) {
          missing = true;
          continue;
        }
        const auto& type = limit.type(t);
        limit_gap = std::max(limit_gap, -psi_gap(type.feasible, type.payoff, *avg[t], tau));
      }
      r.set("limit_gap", limit_gap);
      for (std::size_t a = 0; a < tau.size(); ++a) r.set("tau[" + limit.space()->label(a) + "]", tau[a]);
      if (!sol.converged) {
        r.flagged = true;
        r.note = "solver gap above tolerance";
      } else if (missing) {
        r.flagged = true;
        r.note = "some types have no players at this n";
      }
      taus.push_back(tau);
    } catch (const std::exception& e) {
      r.flagged = true;
      r.note = std::string("failed: ") + e.what();
      taus.push_back(std::nullopt);
    }
    r.set("wall_time_s", detail::seconds_since(t0));
    report.records.push_back(std::move(r));
  }

  std::optional<Measure> limit_tau;
  {
    LimitSolverOptions lopt;
    lopt.tol = solver.tol;
    lopt.max_iter = solver.max_iter;
    lopt.tie_tol = solver.tie_tol;
    const auto lsol = solve_limit_rsne(limit, lopt);
    report.metadata["limit_certified_gap"] = round_significant(lsol.certified_gap);
    if (lsol.converged) {
      limit_tau = societal_summary(limit, lsol.strategy);
      report.metadata["limit_tau"] = measure_to_json(*limit_tau);
    }
  }

  const std::optional<Measure>& last = taus.back();
  bool cauchy = true;
  double prev_step = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < taus.size(); ++k) {
    Record& r = report.records[k];
    if (!taus[k]) continue;
    if (k > 0 && taus[k - 1]) {
      const double step = bl_distance(*taus[k - 1], *taus[k]);
      r.set("tau_step_bl", step);
      if (step > prev_step) cauchy = false;
      prev_step = step;
    }
    if (last) r.set("tau_to_last_bl", bl_distance(*taus[k], *last));
    if (limit_tau) r.set("tau_to_limit_bl", bl_distance(*taus[k], *limit_tau));
  }
  report.metadata["cauchy"] = cauchy;
  return report;
}

}  // namespace largegame
