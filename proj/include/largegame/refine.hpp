#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace largegame::refine {

// Per-agent probabilities over that agent's feasible actions (local indices).
using Blocks = std::vector<std::vector<double>>;

// Deviation payoff of every agent for every feasible action, given a profile.
using PayoffTable = std::function<Blocks(const Blocks&)>;

struct Options {
  double support_threshold = 1e-3;
  double residual_tol = 1e-13;
  double accept_tol = 1e-10;
  double violation_tol = 1e-12;
  double fd_step = 1e-7;
  int max_newton = 60;
  int max_rounds = 40;
};

// Active-set Newton search for a profile whose deviation payoffs are equal
// across each agent's support and no higher outside it. Starts from the
// support suggested by `start` (actions above the threshold plus the current
// best reply), solves the indifference system by Gauss-Newton with a
// minimum-norm step, then drops actions that went negative or adds outside
// actions that beat the support, until the support is consistent.
inline std::optional<Blocks> solve_indifference(const Blocks& start, const PayoffTable& table,
                                                const Options& opt = {}) {
  const std::size_t agents = start.size();
  std::vector<std::vector<bool>> support(agents);
  {
    const Blocks t0 = table(start);
    for (std::size_t i = 0; i < agents; ++i) {
      support[i].assign(start[i].size(), false);
      std::size_t best = 0;
      for (std::size_t k = 0; k < start[i].size(); ++k) {
        if (start[i][k] >= opt.support_threshold) support[i][k] = true;
        if (t0[i][k] > t0[i][best]) best = k;
      }
      support[i][best] = true;
    }
  }

  Blocks probs = start;
  for (int round = 0; round < opt.max_rounds; ++round) {
    // parameterization: the first support action of each agent is implied
    std::vector<std::size_t> ref(agents);
    std::vector<std::pair<std::size_t, std::size_t>> params;
    for (std::size_t i = 0; i < agents; ++i) {
      bool have_ref = false;
      for (std::size_t k = 0; k < support[i].size(); ++k) {
        if (!support[i][k]) continue;
        if (!have_ref) {
          ref[i] = k;
          have_ref = true;
        } else {
          params.emplace_back(i, k);
        }
      }
    }
    const std::size_t n = params.size();

    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    {
      // restart from the current probabilities renormalized onto the support
      for (std::size_t i = 0; i < agents; ++i) {
        double s = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 0; k < support[i].size(); ++k)
          if (support[i][k]) {
            s += std::max(0.0, probs[i][k]);
            ++count;
          }
        for (std::size_t k = 0; k < support[i].size(); ++k) {
          if (!support[i][k])
            probs[i][k] = 0.0;
          else
            probs[i][k] = s > 0.0 ? std::max(0.0, probs[i][k]) / s : 1.0 / static_cast<double>(count);
        }
      }
      for (std::size_t p = 0; p < n; ++p) x[static_cast<Eigen::Index>(p)] = probs[params[p].first][params[p].second];
    }

    auto to_blocks = [&](const Eigen::VectorXd& v) {
      Blocks b(agents);
      for (std::size_t i = 0; i < agents; ++i) b[i].assign(support[i].size(), 0.0);
      for (std::size_t p = 0; p < n; ++p) b[params[p].first][params[p].second] = v[static_cast<Eigen::Index>(p)];
      for (std::size_t i = 0; i < agents; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < b[i].size(); ++k)
          if (k != ref[i]) s += b[i][k];
        b[i][ref[i]] = 1.0 - s;
      }
      return b;
    };
    auto residual = [&](const Eigen::VectorXd& v) {
      const Blocks t = table(to_blocks(v));
      Eigen::VectorXd r(static_cast<Eigen::Index>(n));
      for (std::size_t p = 0; p < n; ++p) {
        const auto [i, k] = params[p];
        r[static_cast<Eigen::Index>(p)] = t[i][k] - t[i][ref[i]];
      }
      return r;
    };

    if (n > 0) {
      Eigen::VectorXd r = residual(x);
      for (int it = 0; it < opt.max_newton && r.lpNorm<Eigen::Infinity>() > opt.residual_tol; ++it) {
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t p = 0; p < n; ++p) {
          Eigen::VectorXd xp = x, xm = x;
          xp[static_cast<Eigen::Index>(p)] += opt.fd_step;
          xm[static_cast<Eigen::Index>(p)] -= opt.fd_step;
          jac.col(static_cast<Eigen::Index>(p)) = (residual(xp) - residual(xm)) / (2.0 * opt.fd_step);
        }
        const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(r);
        double scale = 1.0;
        bool improved = false;
        const double before = r.lpNorm<Eigen::Infinity>();
        for (int ls = 0; ls < 12; ++ls, scale *= 0.5) {
          Eigen::VectorXd xn = x - scale * step;
          Eigen::VectorXd rn = residual(xn);
          if (rn.allFinite() && rn.lpNorm<Eigen::Infinity>() < before) {
            x = std::move(xn);
            r = std::move(rn);
            improved = true;
            break;
          }
        }
        if (!improved) break;
      }
      if (!(r.lpNorm<Eigen::Infinity>() <= opt.accept_tol)) return std::nullopt;
    }
    probs = to_blocks(x);

    // drop the most negative probability, if any
    double worst = -opt.violation_tol;
    std::optional<std::pair<std::size_t, std::size_t>> drop;
    for (std::size_t i = 0; i < agents; ++i)
      for (std::size_t k = 0; k < probs[i].size(); ++k)
        if (support[i][k] && probs[i][k] < worst) {
          worst = probs[i][k];
          drop = {i, k};
        }
    if (drop) {
      support[drop->first][drop->second] = false;
      continue;
    }

    // add the outside action that beats its agent's support the most
    const Blocks t = table(probs);
    double gain = opt.violation_tol;
    std::optional<std::pair<std::size_t, std::size_t>> add;
    for (std::size_t i = 0; i < agents; ++i) {
      const double level = t[i][ref[i]];
      for (std::size_t k = 0; k < probs[i].size(); ++k)
        if (!support[i][k] && t[i][k] - level > gain) {
          gain = t[i][k] - level;
          add = {i, k};
        }
    }
    if (add) {
      support[add->first][add->second] = true;
      continue;
    }

    for (auto& b : probs) {
      double s = 0.0;
      for (double& v : b) {
        v = std::max(0.0, v);
        s += v;
      }
      for (double& v : b) v /= s;
    }
    return probs;
  }
  return std::nullopt;
}

}  // namespace largegame::refine
