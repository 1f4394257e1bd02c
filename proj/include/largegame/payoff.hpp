#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "largegame/error.hpp"
#include "largegame/measure.hpp"
#include "largegame/metric_space.hpp"
#include "largegame/payoff_expr.hpp"

namespace largegame {

inline constexpr std::size_t kInteriorProbeCount = 64;

// Deterministic probe set for a space: every simplex vertex, the uniform
// measure, and interior points of an additive-recurrence (R_d) sequence
// pushed onto the simplex by normalized exponential spacings.
inline std::vector<Measure> default_probes(const SpacePtr& space,
                                           std::size_t interior = kInteriorProbeCount) {
  const std::size_t k = space->size();
  std::vector<Measure> probes;
  probes.reserve(k + 1 + interior);
  for (std::size_t i = 0; i < k; ++i) probes.push_back(Measure::point_mass(space, i));
  probes.push_back(Measure::uniform(space));
  if (k < 2) return probes;

  // generalized golden ratio: unique positive root of x^(k+1) = x + 1
  double phi = 1.5;
  for (int it = 0; it < 64; ++it) {
    const double f = std::pow(phi, static_cast<double>(k + 1)) - phi - 1.0;
    const double df = static_cast<double>(k + 1) * std::pow(phi, static_cast<double>(k)) - 1.0;
    phi -= f / df;
  }
  std::vector<double> alpha(k);
  for (std::size_t j = 0; j < k; ++j)
    alpha[j] = std::fmod(1.0 / std::pow(phi, static_cast<double>(j + 1)), 1.0);

  for (std::size_t n = 1; n <= interior; ++n) {
    std::vector<double> w(k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double u = std::fmod(0.5 + static_cast<double>(n) * alpha[j], 1.0);
      u = std::clamp(u, 1e-12, 1.0 - 1e-12);
      w[j] = -std::log(u);
      total += w[j];
    }
    for (double& x : w) x /= total;
    probes.emplace_back(space, std::move(w));
  }
  return probes;
}

// A payoff expression bound to an action space: labels resolved to indices,
// coordinates checked, and finiteness probed on every (action, default probe).
class Payoff {
 public:
  static Payoff bind(ExprPtr expr, SpacePtr space) {
    Payoff p;
    p.source_ = expr;
    p.space_ = std::move(space);
    p.root_ = p.compile(*expr);
    for (const auto& probe : default_probes(p.space_)) {
      for (std::size_t a = 0; a < p.space_->size(); ++a) {
        double v;
        try {
          v = p.eval_weights(a, probe.weights());
        } catch (const EvaluationError& e) {
          throw DomainError("payoff is not finite on the simplex: " + std::string(e.what()));
        }
        (void)v;
      }
    }
    return p;
  }

  static Payoff parse_and_bind(std::string_view text, SpacePtr space) {
    return bind(parse(text), std::move(space));
  }

  const ExprPtr& expr() const { return source_; }
  const SpacePtr& space() const { return space_; }
  std::string text() const { return format(*source_); }

  // True when the expression divides or takes logarithms; continuity on the
  // whole simplex is then the author's responsibility.
  bool uses_singular_ops() const { return has_op(*source_, Op::kDiv) || has_op(*source_, Op::kLog); }

  double eval(std::size_t action, const Measure& mu) const {
    require_same_space(space_, mu.space());
    if (action >= space_->size()) throw StructuralError("action index out of range");
    return eval_weights(action, mu.weights());
  }

  // Unchecked evaluation on a raw weight vector (one weight per point). Used
  // by solvers that differentiate along directions leaving the simplex.
  double eval_weights(std::size_t action, std::span<const double> weights) const {
    return eval_node(root_, action, weights);
  }

  friend bool operator==(const Payoff& a, const Payoff& b) {
    return a.space_.get() == b.space_.get() && structurally_equal(*a.source_, *b.source_);
  }

 private:
  struct Bound {
    Op op = Op::kConst;
    double value = 0.0;
    std::size_t index = 0;
    std::vector<Bound> args;
    const Node* source = nullptr;
  };

  static bool has_op(const Node& n, Op op) {
    if (n.op == op) return true;
    for (const auto& c : n.args)
      if (has_op(*c, op)) return true;
    return false;
  }

  Bound compile(const Node& n) const {
    Bound b;
    b.op = n.op;
    b.value = n.value;
    b.source = &n;
    switch (n.op) {
      case Op::kIsAct:
      case Op::kMu: {
        auto idx = space_->find(n.label);
        if (!idx) throw BindError("unknown label '" + n.label + "'", n.line, n.column);
        b.index = *idx;
        break;
      }
      case Op::kCoord:
        if (!space_->has_coordinates())
          throw BindError("coord() requires a coordinate-built space", n.line, n.column);
        if (n.index >= space_->dimension())
          throw BindError("coord(" + std::to_string(n.index) + ") exceeds dimension " +
                              std::to_string(space_->dimension()),
                          n.line, n.column);
        b.index = n.index;
        break;
      default:
        break;
    }
    for (const auto& c : n.args) b.args.push_back(compile(*c));
    return b;
  }

  static double checked(double v, const Bound& b) {
    if (!std::isfinite(v)) throw EvaluationError("non-finite value", format(*b.source));
    return v;
  }

  double eval_node(const Bound& b, std::size_t own, std::span<const double> w) const {
    switch (b.op) {
      case Op::kConst: return b.value;
      case Op::kCoord: return space_->coordinates()[own][b.index];
      case Op::kIsAct: return own == b.index ? 1.0 : 0.0;
      case Op::kMu: return w[b.index];
      case Op::kAvg: {
        double s = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j)
          if (w[j] != 0.0) s += w[j] * eval_node(b.args[0], j, w);
        return checked(s, b);
      }
      case Op::kNeg: return -eval_node(b.args[0], own, w);
      case Op::kExp: return checked(std::exp(eval_node(b.args[0], own, w)), b);
      case Op::kAbs: return std::abs(eval_node(b.args[0], own, w));
      case Op::kLog: {
        const double x = eval_node(b.args[0], own, w);
        if (!(x > 0.0)) throw EvaluationError("log of nonpositive value", format(*b.source));
        return std::log(x);
      }
      default: break;
    }
    const double x = eval_node(b.args[0], own, w);
    const double y = eval_node(b.args[1], own, w);
    switch (b.op) {
      case Op::kAdd: return checked(x + y, b);
      case Op::kSub: return checked(x - y, b);
      case Op::kMul: return checked(x * y, b);
      case Op::kDiv:
        if (y == 0.0) throw EvaluationError("division by zero", format(*b.source));
        return checked(x / y, b);
      case Op::kMin: return std::min(x, y);
      case Op::kMax: return std::max(x, y);
      case Op::kPow: return checked(std::pow(x, y), b);
      default: break;
    }
    throw EvaluationError("unsupported node", format(*b.source));
  }

  ExprPtr source_;
  SpacePtr space_;
  Bound root_;
};

// Lower estimate of sup |v1 - v2| over A x M(A): maximum over every action
// and every probe measure.
inline double sup_norm_distance(const Payoff& v1, const Payoff& v2,
                                const std::vector<Measure>& probes) {
  require_same_space(v1.space(), v2.space());
  if (probes.empty()) throw DomainError("sup-norm estimate needs at least one probe");
  double best = 0.0;
  for (const auto& mu : probes) {
    require_same_space(v1.space(), mu.space());
    for (std::size_t a = 0; a < v1.space()->size(); ++a)
      best = std::max(best, std::abs(v1.eval(a, mu) - v2.eval(a, mu)));
  }
  return best;
}

}  // namespace largegame
