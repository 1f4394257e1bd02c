#include <gtest/gtest.h>

#include <random>

#include "largegame/metric_space.hpp"
#include "oracles.hpp"

using namespace largegame;

namespace {

SpacePtr line(std::vector<double> xs) {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> coords;
  for (double x : xs) {
    labels.push_back(std::to_string(x));
    coords.push_back({x});
  }
  return FiniteMetricSpace::from_coordinates(labels, coords);
}

}  // namespace

TEST(ValidateMetric, AcceptsValidMatrix) {
  const Matrix m{{0, 1, 2}, {1, 0, 1}, {2, 1, 0}};
  EXPECT_TRUE(validate_metric(m).ok());
}

TEST(ValidateMetric, ReportsAsymmetry) {
  const auto r = validate_metric({{0, 1}, {2, 0}});
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].kind, MetricViolation::Kind::kAsymmetry);
  EXPECT_EQ(r.violations[0].i, 0u);
  EXPECT_EQ(r.violations[0].j, 1u);
}

TEST(ValidateMetric, ReportsTriangleWitness) {
  const auto r = validate_metric({{0, 1, 5}, {1, 0, 1}, {5, 1, 0}});
  ASSERT_FALSE(r.ok());
  bool found = false;
  for (const auto& v : r.violations)
    if (v.kind == MetricViolation::Kind::kTriangle && v.i == 0 && v.j == 1 && v.k == 2) found = true;
  EXPECT_TRUE(found);
}

TEST(ValidateMetric, ReportsEveryAxiom) {
  const auto r = validate_metric({{1, -1}, {-1, 0}});
  bool negative = false, diagonal = false;
  for (const auto& v : r.violations) {
    negative = negative || v.kind == MetricViolation::Kind::kNegative;
    diagonal = diagonal || v.kind == MetricViolation::Kind::kNonzeroDiagonal;
  }
  EXPECT_TRUE(negative);
  EXPECT_TRUE(diagonal);
}

TEST(ValidateMetric, NonSquareIsStructural) {
  EXPECT_THROW(validate_metric({{0, 1}, {1}}), StructuralError);
}

TEST(ValidateMetric, AcceptsEuclideanMatrices) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> size(2, 10), dim(1, 4);
  for (int c = 0; c < 500; ++c) {
    auto s = oracle::random_space(rng, static_cast<std::size_t>(size(rng)), static_cast<std::size_t>(dim(rng)));
    EXPECT_TRUE(validate_metric(s->matrix()).ok());
  }
}

TEST(FiniteMetricSpace, RejectsInvalidAndDuplicateLabels) {
  EXPECT_THROW(FiniteMetricSpace::from_matrix({"a", "b"}, {{0, 1}, {2, 0}}), DomainError);
  EXPECT_ANY_THROW(FiniteMetricSpace::from_matrix({"a", "a"}, {{0, 1}, {1, 0}}));
}

TEST(Hausdorff, IdentityIsZero) {
  auto s = line({0, 0.4, 1});
  ActionSubset a(s, {0, 2});
  EXPECT_EQ(hausdorff(a, a), 0.0);
}

TEST(Hausdorff, PointVersusPair) {
  auto s = line({0, 1});
  EXPECT_DOUBLE_EQ(hausdorff(ActionSubset(s, {0}), ActionSubset(s, {0, 1})), 1.0);
  EXPECT_DOUBLE_EQ(oracle::hausdorff(*s, {0}, {0, 1}), 1.0);
}

TEST(Hausdorff, EndpointsVersusMiddle) {
  auto s = line({0, 0.4, 1});
  EXPECT_NEAR(hausdorff(ActionSubset(s, {0, 2}), ActionSubset(s, {1})), 0.6, 1e-12);
  EXPECT_NEAR(oracle::hausdorff(*s, {0, 2}, {1}), 0.6, 1e-12);
}

TEST(Hausdorff, Errors) {
  auto s = line({0, 1});
  auto t = line({0, 1});
  EXPECT_THROW(ActionSubset(s, {}), DomainError);
  EXPECT_THROW(hausdorff(ActionSubset(s, {0}), ActionSubset(t, {0})), StructuralError);
}

TEST(Hausdorff, IsAMetricOnSubsets) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> size(2, 8);
  for (int c = 0; c < 300; ++c) {
    auto s = oracle::random_space(rng, static_cast<std::size_t>(size(rng)));
    const std::size_t k = s->size();
    std::uniform_int_distribution<std::size_t> mask(1, (std::size_t{1} << k) - 1);
    auto subset = [&] {
      const std::size_t m = mask(rng);
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < k; ++i)
        if (m >> i & 1) members.push_back(i);
      return ActionSubset(s, members);
    };
    const auto a = subset(), b = subset(), c2 = subset();
    EXPECT_NEAR(hausdorff(a, b), oracle::hausdorff(*s, a.members(), b.members()), 1e-12);
    EXPECT_EQ(hausdorff(a, b), hausdorff(b, a));
    EXPECT_EQ(hausdorff(a, b) == 0.0, a == b);
    EXPECT_LE(hausdorff(a, c2), hausdorff(a, b) + hausdorff(b, c2) + 1e-12);
  }
}
