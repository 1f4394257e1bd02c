#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "largegame/error.hpp"
#include "largegame/metric_space.hpp"

namespace largegame {

inline constexpr double kMassTolerance = 1e-9;

// Finitely supported probability measure on a FiniteMetricSpace, one weight
// per point. Weights whose total is within kMassTolerance of 1 are
// renormalized; anything further off is rejected.
class Measure {
 public:
  Measure(SpacePtr space, std::vector<double> weights)
      : space_(std::move(space)), weights_(std::move(weights)) {
    if (!space_) throw StructuralError("measure without a space");
    if (weights_.size() != space_->size())
      throw StructuralError("measure has " + std::to_string(weights_.size()) +
                            " weights for a space of " + std::to_string(space_->size()) +
                            " points");
    double total = 0.0;
    for (double& w : weights_) {
      if (!std::isfinite(w)) throw DomainError("non-finite measure weight");
      if (w < 0.0) {
        if (w < -kMassTolerance) throw DomainError("negative measure weight");
        w = 0.0;
      }
      total += w;
    }
    if (std::abs(total - 1.0) > kMassTolerance)
      throw DomainError("measure weights sum to " + std::to_string(total) + ", not 1");
    for (double& w : weights_) w /= total;
  }

  static Measure point_mass(SpacePtr space, std::size_t point) {
    if (point >= space->size()) throw StructuralError("point index out of range");
    std::vector<double> w(space->size(), 0.0);
    w[point] = 1.0;
    return Measure(std::move(space), std::move(w));
  }

  static Measure uniform(SpacePtr space) {
    const std::size_t n = space->size();
    return Measure(std::move(space), std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static Measure uniform_on(const ActionSubset& subset) {
    std::vector<double> w(subset.space()->size(), 0.0);
    for (std::size_t i : subset.members()) w[i] = 1.0 / static_cast<double>(subset.size());
    return Measure(subset.space(), std::move(w));
  }

  const SpacePtr& space() const { return space_; }
  std::span<const double> weights() const { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::size_t size() const { return weights_.size(); }

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < weights_.size(); ++i)
      if (weights_[i] > 0.0) s.push_back(i);
    return s;
  }

  double mass_on(const ActionSubset& subset) const {
    double m = 0.0;
    for (std::size_t i : subset.members()) m += weights_[i];
    return m;
  }

  friend bool operator==(const Measure& a, const Measure& b) {
    return a.space_.get() == b.space_.get() && a.weights_ == b.weights_;
  }

 private:
  SpacePtr space_;
  std::vector<double> weights_;
};

inline double total_variation(const Measure& a, const Measure& b) {
  require_same_space(a.space(), b.space());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

// Convex combination sum_k mass_k * measure_k.
inline Measure mix(const std::vector<std::pair<double, Measure>>& components) {
  if (components.empty()) throw DomainError("mix of zero components");
  const SpacePtr& space = components.front().second.space();
  double mass = 0.0;
  std::vector<double> w(space->size(), 0.0);
  for (const auto& [m, mu] : components) {
    require_same_space(space, mu.space());
    if (m < 0.0 || !std::isfinite(m)) throw DomainError("mix masses must be nonnegative");
    mass += m;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += m * mu[i];
  }
  if (std::abs(mass - 1.0) > kMassTolerance)
    throw DomainError("mix masses sum to " + std::to_string(mass) + ", not 1");
  return Measure(space, std::move(w));
}

// sum_j weights[j] * delta_{points[j]}, accumulating repeated points.
inline Measure weighted_empirical(const SpacePtr& space, std::span<const std::size_t> points,
                                  std::span<const double> weights) {
  if (points.size() != weights.size())
    throw StructuralError("points and weights differ in length");
  std::vector<double> w(space->size(), 0.0);
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (points[j] >= space->size()) throw StructuralError("point index out of range");
    if (weights[j] < 0.0) throw DomainError("negative empirical weight");
    w[points[j]] += weights[j];
  }
  return Measure(space, std::move(w));
}

// Image measure under `map`, a callable point-index -> optional target index.
template <typename Map>
Measure pushforward(const Measure& m, const SpacePtr& target, Map&& map) {
  std::vector<double> w(target->size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] <= 0.0) continue;
    std::optional<std::size_t> image = map(i);
    if (!image) throw StructuralError("pushforward map undefined on support point " +
                                      m.space()->label(i));
    if (*image >= target->size()) throw StructuralError("pushforward image out of range");
    w[*image] += m[i];
  }
  return Measure(target, std::move(w));
}

namespace detail {

inline std::vector<std::size_t> support_union(const Measure& p, const Measure& h) {
  std::vector<std::size_t> u;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0 || h[i] > 0.0) u.push_back(i);
  return u;
}

// Max flow on a small dense network (Edmonds-Karp on residual capacities).
class DenseMaxFlow {
 public:
  explicit DenseMaxFlow(std::size_t nodes) : cap_(nodes, std::vector<double>(nodes, 0.0)) {}
  void add(std::size_t u, std::size_t v, double c) { cap_[u][v] += c; }

  double run(std::size_t s, std::size_t t, double eps = 1e-15) {
    const std::size_t n = cap_.size();
    double flow = 0.0;
    std::vector<std::size_t> parent(n);
    for (;;) {
      std::fill(parent.begin(), parent.end(), n);
      parent[s] = s;
      std::queue<std::size_t> q;
      q.push(s);
      while (!q.empty() && parent[t] == n) {
        std::size_t u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n; ++v) {
          if (parent[v] == n && cap_[u][v] > eps) {
            parent[v] = u;
            q.push(v);
          }
        }
      }
      if (parent[t] == n) return flow;
      double push = std::numeric_limits<double>::infinity();
      for (std::size_t v = t; v != s; v = parent[v]) push = std::min(push, cap_[parent[v]][v]);
      for (std::size_t v = t; v != s; v = parent[v]) {
        cap_[parent[v]][v] -= push;
        cap_[v][parent[v]] += push;
      }
      flow += push;
    }
  }

 private:
  std::vector<std::vector<double>> cap_;
};

inline constexpr double kProhorovSlack = 1e-12;

// P(Q) <= H(Q^eps) + eps for every Q within supp(P), by subset enumeration.
inline bool prohorov_direction_exhaustive(const Measure& p, const Measure& h, double eps) {
  const auto sp = p.support();
  const auto sh = h.support();
  const auto& space = *p.space();
  const std::size_t kp = sp.size(), kh = sh.size();
  std::vector<std::uint32_t> neighbours(kp, 0);
  for (std::size_t a = 0; a < kp; ++a)
    for (std::size_t b = 0; b < kh; ++b)
      if (space.distance(sp[a], sh[b]) < eps) neighbours[a] |= (1u << b);

  // H-weight of a neighbour mask via two half tables.
  const std::size_t lo_bits = kh / 2, hi_bits = kh - lo_bits;
  std::vector<double> lo_table(std::size_t{1} << lo_bits, 0.0),
      hi_table(std::size_t{1} << hi_bits, 0.0);
  for (std::size_t mask = 1; mask < lo_table.size(); ++mask) {
    std::size_t bit = static_cast<std::size_t>(std::countr_zero(mask));
    lo_table[mask] = lo_table[mask & (mask - 1)] + h[sh[bit]];
  }
  for (std::size_t mask = 1; mask < hi_table.size(); ++mask) {
    std::size_t bit = static_cast<std::size_t>(std::countr_zero(mask));
    hi_table[mask] = hi_table[mask & (mask - 1)] + h[sh[lo_bits + bit]];
  }

  const std::size_t subsets = std::size_t{1} << kp;
  std::vector<std::uint32_t> nb(subsets, 0);
  std::vector<double> pw(subsets, 0.0);
  for (std::size_t mask = 1; mask < subsets; ++mask) {
    std::size_t bit = static_cast<std::size_t>(std::countr_zero(mask));
    std::size_t prev = mask & (mask - 1);
    nb[mask] = nb[prev] | neighbours[bit];
    pw[mask] = pw[prev] + p[sp[bit]];
    const std::uint32_t m = nb[mask];
    const double hq = lo_table[m & ((1u << lo_bits) - 1)] + hi_table[m >> lo_bits];
    if (pw[mask] > hq + eps + kProhorovSlack) return false;
  }
  return true;
}

// Same condition via max flow: it holds iff the bipartite network
// source -> x (cap P(x)) -> y when d(x,y) < eps -> sink (cap H(y)) carries
// at least 1 - eps.
inline bool prohorov_direction_flow(const Measure& p, const Measure& h, double eps) {
  const auto sp = p.support();
  const auto sh = h.support();
  const auto& space = *p.space();
  const std::size_t kp = sp.size(), kh = sh.size();
  const std::size_t source = kp + kh, sink = kp + kh + 1;
  DenseMaxFlow net(kp + kh + 2);
  for (std::size_t a = 0; a < kp; ++a) net.add(source, a, p[sp[a]]);
  for (std::size_t b = 0; b < kh; ++b) net.add(kp + b, sink, h[sh[b]]);
  for (std::size_t a = 0; a < kp; ++a)
    for (std::size_t b = 0; b < kh; ++b)
      if (space.distance(sp[a], sh[b]) < eps) net.add(a, kp + b, 2.0);
  return net.run(source, sink) >= 1.0 - eps - kProhorovSlack;
}

// max_Q P(Q) - H(Q') where Q' = {y : d(x,y) <= radius for some x in Q},
// i.e. one minus the max flow of the bipartite network above.
inline double prohorov_excess(const Measure& p, const Measure& h, double radius) {
  const auto sp = p.support();
  const auto sh = h.support();
  const auto& space = *p.space();
  const std::size_t kp = sp.size(), kh = sh.size();
  const std::size_t source = kp + kh, sink = kp + kh + 1;
  DenseMaxFlow net(kp + kh + 2);
  for (std::size_t a = 0; a < kp; ++a) net.add(source, a, p[sp[a]]);
  for (std::size_t b = 0; b < kh; ++b) net.add(kp + b, sink, h[sh[b]]);
  for (std::size_t a = 0; a < kp; ++a)
    for (std::size_t b = 0; b < kh; ++b)
      if (space.distance(sp[a], sh[b]) <= radius) net.add(a, kp + b, 2.0);
  return std::max(0.0, 1.0 - net.run(source, sink));
}

// Values the infimum can take: on each interval (d_k, d_k+1] between
// consecutive distances the enlargements are fixed, so feasibility there is
// eps >= the excess at radius d_k. Hence the infimum is 1, some d_k or some
// excess value.
inline std::vector<double> prohorov_candidates(const Measure& p, const Measure& h) {
  const auto u = support_union(p, h);
  std::vector<double> radii{0.0};
  for (std::size_t a = 0; a < u.size(); ++a)
    for (std::size_t b = a + 1; b < u.size(); ++b) radii.push_back(p.space()->distance(u[a], u[b]));
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  std::vector<double> out{1.0};
  for (double r : radii) {
    out.push_back(r);
    out.push_back(std::max(prohorov_excess(p, h, r), prohorov_excess(h, p, r)));
  }
  return out;
}

// Optimal transport plan from supply to demand (equal totals up to
// rounding) on a complete bipartite graph with nonnegative costs, by
// successive shortest paths with Dijkstra on reduced costs.
inline std::vector<std::vector<double>> transport_plan(const std::vector<double>& supply,
                                                       const std::vector<double>& demand,
                                                       const std::vector<std::vector<double>>& cost) {
  constexpr double kEps = 1e-15;
  const std::size_t ns = supply.size(), nt = demand.size(), nv = ns + nt;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> flow(ns, std::vector<double>(nt, 0.0));
  std::vector<double> left = supply, need = demand, pot(nv, 0.0), dist(nv);
  std::vector<std::size_t> prev(nv);
  std::vector<char> done(nv);
  auto edge_cost = [&](std::size_t u, std::size_t v) {
    // u -> v in the residual graph: source to sink always, sink back to
    // source only along positive flow
    if (u < ns && v >= ns) return cost[u][v - ns];
    if (u >= ns && v < ns && flow[v][u - ns] > kEps) return -cost[v][u - ns];
    return inf;
  };
  for (;;) {
    bool any = false;
    for (std::size_t i = 0; i < ns; ++i) {
      dist[i] = left[i] > kEps ? 0.0 : inf;
      any = any || left[i] > kEps;
    }
    if (!any) break;
    for (std::size_t v = ns; v < nv; ++v) dist[v] = inf;
    std::fill(done.begin(), done.end(), 0);
    std::fill(prev.begin(), prev.end(), nv);
    for (;;) {
      std::size_t u = nv;
      for (std::size_t v = 0; v < nv; ++v)
        if (!done[v] && dist[v] < inf && (u == nv || dist[v] < dist[u])) u = v;
      if (u == nv) break;
      done[u] = 1;
      for (std::size_t v = 0; v < nv; ++v) {
        if (done[v]) continue;
        const double c = edge_cost(u, v);
        if (c == inf) continue;
        const double nd = dist[u] + std::max(0.0, c + pot[u] - pot[v]);
        if (nd < dist[v]) {
          dist[v] = nd;
          prev[v] = u;
        }
      }
    }
    std::size_t end = nv;
    for (std::size_t j = 0; j < nt; ++j)
      if (need[j] > kEps && dist[ns + j] < inf && (end == nv || dist[ns + j] < dist[end])) end = ns + j;
    if (end == nv) break;
    double reach = 0.0;
    for (std::size_t v = 0; v < nv; ++v)
      if (dist[v] < inf) reach = std::max(reach, dist[v]);
    for (std::size_t v = 0; v < nv; ++v) pot[v] += dist[v] < inf ? dist[v] : reach;

    double amount = need[end - ns];
    std::size_t v = end;
    while (prev[v] != nv) {
      const std::size_t u = prev[v];
      if (u >= ns) amount = std::min(amount, flow[v][u - ns]);
      v = u;
    }
    amount = std::min(amount, left[v]);
    left[v] -= amount;
    need[end - ns] -= amount;
    v = end;
    while (prev[v] != nv) {
      const std::size_t u = prev[v];
      if (u < ns)
        flow[u][v - ns] += amount;
      else
        flow[v][u - ns] = std::max(0.0, flow[v][u - ns] - amount);
      v = u;
    }
  }
  return flow;
}

}  // namespace detail

enum class ProhorovMethod { kAuto, kExhaustive, kFlow };

inline constexpr std::size_t kExhaustiveSupportLimit = 20;

// Whether eps satisfies both Prohorov inequalities, with Q^eps the open
// eps-enlargement {y : d(x,y) < eps for some x in Q}.
inline bool prohorov_feasible(const Measure& p, const Measure& h, double eps,
                              ProhorovMethod method = ProhorovMethod::kAuto) {
  require_same_space(p.space(), h.space());
  if (method == ProhorovMethod::kAuto) {
    const bool small = p.support().size() <= kExhaustiveSupportLimit &&
                       h.support().size() <= kExhaustiveSupportLimit;
    method = small ? ProhorovMethod::kExhaustive : ProhorovMethod::kFlow;
  }
  if (method == ProhorovMethod::kExhaustive) {
    if (p.support().size() > kExhaustiveSupportLimit ||
        h.support().size() > kExhaustiveSupportLimit)
      throw CapacityError("exhaustive Prohorov check limited to supports of 20 points");
    return detail::prohorov_direction_exhaustive(p, h, eps) &&
           detail::prohorov_direction_exhaustive(h, p, eps);
  }
  return detail::prohorov_direction_flow(p, h, eps) && detail::prohorov_direction_flow(h, p, eps);
}

// Prohorov distance by bisection on eps in [0, 1]; eps = 1 is always
// feasible. The final bracket has width <= tol; on supports of up to 20
// points the result is snapped to the exact candidate value inside it,
// otherwise the bracket midpoint is returned.
inline double prohorov(const Measure& p, const Measure& h, double tol = 1e-9,
                       ProhorovMethod method = ProhorovMethod::kAuto) {
  require_same_space(p.space(), h.space());
  if (!(tol > 0.0)) throw DomainError("prohorov tolerance must be positive");
  if (p == h) return 0.0;
  if (detail::support_union(p, h).size() <= 1) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (prohorov_feasible(p, h, mid, method))
      hi = mid;
    else
      lo = mid;
  }
  const double mid = 0.5 * (lo + hi);
  if (detail::support_union(p, h).size() > kExhaustiveSupportLimit) return mid;
  // snap to the exact value when one lies in the final bracket
  double best = mid, best_err = std::numeric_limits<double>::infinity();
  for (double c : detail::prohorov_candidates(p, h)) {
    const double err = std::abs(c - mid);
    if (c >= lo - tol && c <= hi + tol && err < best_err) {
      best = c;
      best_err = err;
    }
  }
  return best;
}

// Dual bounded-Lipschitz distance sup { |∫ f d(P - H)| : ||f||_inf + ||f||_Lip <= 1 }.
// For a sup budget m and Lipschitz budget 1 - m the inner supremum is the
// transport cost of (P - H)+ onto (P - H)- under the metric
// min((1 - m) d, 2m), a concave function of m. The outer maximum is located
// by bisection on the slope of the optimal plan's cost and read off as the
// intersection of the two supporting lines at the final bracket.
inline double bl_distance(const Measure& p, const Measure& h) {
  require_same_space(p.space(), h.space());
  const auto& space = *p.space();
  std::vector<std::size_t> src, dst;
  std::vector<double> supply, demand;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double w = p[i] - h[i];
    if (w > 0.0) {
      src.push_back(i);
      supply.push_back(w);
    } else if (w < 0.0) {
      dst.push_back(i);
      demand.push_back(-w);
    }
  }
  if (src.empty() || dst.empty()) return 0.0;

  // value and slope of the optimal plan's cost at m
  auto line = [&](double m) {
    std::vector<std::vector<double>> cost(src.size(), std::vector<double>(dst.size()));
    for (std::size_t a = 0; a < src.size(); ++a)
      for (std::size_t b = 0; b < dst.size(); ++b)
        cost[a][b] = std::min((1.0 - m) * space.distance(src[a], dst[b]), 2.0 * m);
    const auto plan = detail::transport_plan(supply, demand, cost);
    double value = 0.0, slope = 0.0;
    for (std::size_t a = 0; a < src.size(); ++a)
      for (std::size_t b = 0; b < dst.size(); ++b) {
        const double d = space.distance(src[a], dst[b]);
        value += plan[a][b] * cost[a][b];
        slope += plan[a][b] * ((1.0 - m) * d < 2.0 * m ? -d : 2.0);
      }
    return std::pair{value, slope};
  };

  double lo = 0.0, hi = 1.0;
  auto at_lo = line(lo), at_hi = line(hi);
  for (int it = 0; it < 60 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto at_mid = line(mid);
    if (at_mid.second == 0.0) return std::max(0.0, at_mid.first);
    if (at_mid.second > 0.0) {
      lo = mid;
      at_lo = at_mid;
    } else {
      hi = mid;
      at_hi = at_mid;
    }
  }
  double best = std::max(at_lo.first, at_hi.first);
  const double ds = at_lo.second - at_hi.second;
  if (ds > 0.0) {
    // lines through (lo, g_lo) and (hi, g_hi) meet at the kink
    const double x = (at_hi.first - at_lo.first + at_lo.second * lo - at_hi.second * hi) / ds;
    if (x >= lo && x <= hi) best = std::max(best, at_lo.first + at_lo.second * (x - lo));
  }
  return std::max(0.0, best);
}

}  // namespace largegame
