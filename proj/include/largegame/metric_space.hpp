#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "largegame/error.hpp"

namespace largegame {

using Matrix = std::vector<std::vector<double>>;

inline constexpr double kTriangleSlack = 1e-9;

struct MetricViolation {
  enum class Kind { kNegative, kNonzeroDiagonal, kAsymmetry, kTriangle, kNonFinite };
  Kind kind;
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;  // only meaningful for kTriangle: d(i,k) > d(i,j) + d(j,k)

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::kNegative: os << "negative entry at (" << i << "," << j << ")"; break;
      case Kind::kNonzeroDiagonal: os << "nonzero diagonal at " << i; break;
      case Kind::kAsymmetry: os << "asymmetry at (" << i << "," << j << ")"; break;
      case Kind::kTriangle:
        os << "triangle violation (" << i << "," << j << "," << k << ")";
        break;
      case Kind::kNonFinite: os << "non-finite entry at (" << i << "," << j << ")"; break;
    }
    return os.str();
  }
};

struct MetricReport {
  std::vector<MetricViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Every violated metric axiom of a square matrix. Asymmetries are reported
// once per unordered pair (i < j); triangle violations as (i, j, k) with
// d(i,k) > d(i,j) + d(j,k) + slack.
inline MetricReport validate_metric(const Matrix& dist, double slack = kTriangleSlack) {
  const std::size_t n = dist.size();
  for (const auto& row : dist) {
    if (row.size() != n) throw StructuralError("distance matrix is not square");
  }
  MetricReport report;
  using K = MetricViolation::Kind;
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(dist[i][j])) {
        report.violations.push_back({K::kNonFinite, i, j});
        finite = false;
      } else if (dist[i][j] < 0.0) {
        report.violations.push_back({K::kNegative, i, j});
      }
    }
  }
  if (!finite) return report;
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i][i] != 0.0) report.violations.push_back({K::kNonzeroDiagonal, i, i});
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(dist[i][j] - dist[j][i]) > slack) {
        report.violations.push_back({K::kAsymmetry, i, j});
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        if (dist[i][k] > dist[i][j] + dist[j][k] + slack)
          report.violations.push_back({K::kTriangle, i, j, k});
  return report;
}

class FiniteMetricSpace;
using SpacePtr = std::shared_ptr<const FiniteMetricSpace>;

// A finite set of labeled points with a validated metric. Immutable; shared
// by pointer, and two spaces are "the same" only if they are the same object.
class FiniteMetricSpace {
 public:
  static SpacePtr from_matrix(std::vector<std::string> labels, Matrix dist) {
    check_labels(labels);
    if (dist.size() != labels.size())
      throw StructuralError("distance matrix size does not match label count");
    auto report = validate_metric(dist);
    if (!report.ok()) {
      throw DomainError("invalid metric: " + report.violations.front().describe());
    }
    // symmetrize within slack so downstream code can rely on exact symmetry
    for (std::size_t i = 0; i < dist.size(); ++i)
      for (std::size_t j = i + 1; j < dist.size(); ++j)
        dist[j][i] = dist[i][j];
    return SpacePtr(new FiniteMetricSpace(std::move(labels), std::move(dist), {}));
  }

  static SpacePtr from_coordinates(std::vector<std::string> labels,
                                   std::vector<std::vector<double>> coords) {
    check_labels(labels);
    if (coords.size() != labels.size())
      throw StructuralError("coordinate count does not match label count");
    const std::size_t dim = coords.empty() ? 0 : coords.front().size();
    for (const auto& c : coords) {
      if (c.size() != dim) throw StructuralError("coordinate vectors differ in dimension");
      for (double x : c)
        if (!std::isfinite(x)) throw DomainError("non-finite coordinate");
    }
    const std::size_t n = coords.size();
    Matrix dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          double d = coords[i][k] - coords[j][k];
          s += d * d;
        }
        dist[i][j] = dist[j][i] = std::sqrt(s);
      }
    return SpacePtr(new FiniteMetricSpace(std::move(labels), std::move(dist), std::move(coords)));
  }

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  double distance(std::size_t i, std::size_t j) const { return dist_[i][j]; }
  const Matrix& matrix() const { return dist_; }

  bool has_coordinates() const { return !coords_.empty(); }
  std::size_t dimension() const { return coords_.empty() ? 0 : coords_.front().size(); }
  const std::vector<std::vector<double>>& coordinates() const { return coords_; }

  std::optional<std::size_t> find(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
  }

  std::size_t index_of(const std::string& label) const {
    auto idx = find(label);
    if (!idx) throw StructuralError("unknown point label '" + label + "'");
    return *idx;
  }

  double diameter() const {
    double d = 0.0;
    for (const auto& row : dist_)
      for (double x : row) d = std::max(d, x);
    return d;
  }

 private:
  FiniteMetricSpace(std::vector<std::string> labels, Matrix dist,
                    std::vector<std::vector<double>> coords)
      : labels_(std::move(labels)), dist_(std::move(dist)), coords_(std::move(coords)) {}

  static void check_labels(const std::vector<std::string>& labels) {
    if (labels.empty()) throw StructuralError("a metric space needs at least one point");
    std::unordered_set<std::string> seen;
    for (const auto& l : labels)
      if (!seen.insert(l).second) throw StructuralError("duplicate point label '" + l + "'");
  }

  std::vector<std::string> labels_;
  Matrix dist_;
  std::vector<std::vector<double>> coords_;
};

inline void require_same_space(const SpacePtr& a, const SpacePtr& b) {
  if (a.get() != b.get()) throw StructuralError("objects live on different metric spaces");
}

// Nonempty subset of a space's points, stored sorted and deduplicated.
class ActionSubset {
 public:
  ActionSubset(SpacePtr space, std::vector<std::size_t> members)
      : space_(std::move(space)), members_(std::move(members)) {
    if (!space_) throw StructuralError("action subset without a space");
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    if (members_.empty()) throw DomainError("action subset must be nonempty");
    if (members_.back() >= space_->size())
      throw StructuralError("action subset member out of range");
  }

  static ActionSubset from_labels(SpacePtr space, const std::vector<std::string>& labels) {
    std::vector<std::size_t> idx;
    idx.reserve(labels.size());
    for (const auto& l : labels) idx.push_back(space->index_of(l));
    return ActionSubset(std::move(space), std::move(idx));
  }

  static ActionSubset all(SpacePtr space) {
    std::vector<std::size_t> idx(space->size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return ActionSubset(std::move(space), std::move(idx));
  }

  const SpacePtr& space() const { return space_; }
  const std::vector<std::size_t>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool contains(std::size_t i) const {
    return std::binary_search(members_.begin(), members_.end(), i);
  }

  friend bool operator==(const ActionSubset& a, const ActionSubset& b) {
    return a.space_.get() == b.space_.get() && a.members_ == b.members_;
  }

 private:
  SpacePtr space_;
  std::vector<std::size_t> members_;
};

inline double hausdorff(const ActionSubset& s1, const ActionSubset& s2) {
  require_same_space(s1.space(), s2.space());
  const auto& sp = *s1.space();
  auto directed = [&sp](const ActionSubset& from, const ActionSubset& to) {
    double worst = 0.0;
    for (std::size_t x : from.members()) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t y : to.members()) nearest = std::min(nearest, sp.distance(x, y));
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  return std::max(directed(s1, s2), directed(s2, s1));
}

}  // namespace largegame
