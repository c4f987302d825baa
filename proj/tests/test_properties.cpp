#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ratingxva/params_io.hpp"
#include "ratingxva/properties.hpp"

using namespace ratingxva;

namespace {

MatrixSample sample(std::initializer_list<Matrix> ms) {
  MatrixSample s(static_cast<int>(ms.begin()->rows()), ms.size());
  std::size_t i = 0;
  for (const auto& m : ms) s.at(i++) = m;
  return s;
}

Matrix good() {
  Matrix r(3, 3);
  r << 0.9, 0.07, 0.03, 0.05, 0.85, 0.10, 0, 0, 1;
  return r;
}

}  // namespace

TEST(Properties, CleanMatrixPassesAll) {
  const auto rep = property_report({sample({good()}), sample({good()})}, {0.5, 1.0});
  ASSERT_EQ(rep.checkpoints.size(), 2u);
  EXPECT_FALSE(rep.checkpoints[0][RatingProperty::decreasing_diagonal].has_value());
  for (auto p : kAllProperties) EXPECT_EQ(rep.checkpoints[1][p]->violating, 0u) << to_string(p);
}

TEST(Properties, EachViolationIsAttributed) {
  Matrix weak_diag = good();
  weak_diag.row(1) << 0.3, 0.4, 0.3;  // 0.4 < 0.6 off-diagonal
  Matrix upgrades = good();
  upgrades.row(0) << 0.99, 0.005, 0.005;
  upgrades.row(1) << 0.2, 0.79, 0.01;  // lower triangle 0.2 > upper 0.015
  Matrix default_order = good();
  default_order.row(0) << 0.8, 0.05, 0.15;  // PD(1) = 0.15 > PD(2) = 0.10
  const auto rep = property_report({sample({good(), good(), good(), good()}), sample({weak_diag, upgrades, default_order, good()})},
                                   {0.5, 1.0});
  const auto& cp = rep.checkpoints[1];
  EXPECT_EQ(cp[RatingProperty::diagonal_dominance]->violating, 1u);
  EXPECT_DOUBLE_EQ(cp[RatingProperty::diagonal_dominance]->pair_fraction(1, 1, 4), 0.25);
  EXPECT_NEAR(cp[RatingProperty::diagonal_dominance]->worst, 0.2, 1e-15);
  EXPECT_EQ(cp[RatingProperty::downgrade_bias]->violating, 1u);
  EXPECT_EQ(cp[RatingProperty::monotone_default]->violating, 1u);
  EXPECT_EQ(cp[RatingProperty::monotone_default]->offenders.count({0, 1}), 1u);
  // Only the upgrade sample raises a diagonal entry (R_11 from 0.9 to 0.99).
  EXPECT_EQ(cp[RatingProperty::decreasing_diagonal]->violating, 1u);
  EXPECT_DOUBLE_EQ(cp[RatingProperty::decreasing_diagonal]->fraction, 0.25);
}

TEST(Properties, ChecksAreExact) {
  Matrix tie = good();
  tie.row(0) << 0.5, 0.25, 0.25;  // diagonal equals off-diagonal mass: no violation
  const auto rep = property_report({sample({tie})}, {1.0});
  EXPECT_EQ(rep.checkpoints[0][RatingProperty::diagonal_dominance]->violating, 0u);
}

TEST(Properties, ShapeErrors) {
  EXPECT_THROW(property_report({sample({good()})}, {0.5, 1.0}), DimensionError);
  EXPECT_THROW(property_report({sample({good()}), sample({good(), good()})}, {0.5, 1.0}), DimensionError);
}

TEST(Properties, BundleCheckpoints) {
  const SdeParams p = read_sde_params_file(oracle::data("table6_params.csv"), 4);
  const auto bundle = simulate_paths(p, MeasureChange::historical(4), TimeGrid(1.0, 12), 30, 2);
  const auto rep = property_report(bundle, {0.25, 0.5, 1.0});
  EXPECT_EQ(rep.trajectories, 30u);
  EXPECT_EQ(rep.checkpoints[2].time, 1.0);
  EXPECT_THROW(property_report(bundle, {0.3}), DomainError);
}
