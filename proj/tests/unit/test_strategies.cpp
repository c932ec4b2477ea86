#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "dabid/strategies.hpp"
#include "fixtures.hpp"

namespace dabid {
namespace {

std::array<double, kHoursPerDay> flat_anchors(double p) {
  std::array<double, kHoursPerDay> a{};
  a.fill(p);
  return a;
}

TEST(Timing, HandValues) {
  const BidSet b = timing_bids({1.0, 0.2}, 0.5);
  for (int h : kTimingBuyHours) {
    EXPECT_DOUBLE_EQ(b.buy[h].volume, 0.2);
    EXPECT_EQ(b.buy[h].price, kAlwaysBuyPrice);
  }
  for (int h : kTimingSellHours) {
    EXPECT_DOUBLE_EQ(b.sell[h].volume, 0.3);
    EXPECT_EQ(b.sell[h].price, kAlwaysSellPrice);
  }
  EXPECT_EQ(b.bids().size(), 8u);
}

TEST(Timing, ZeroLevelGivesEqualVolumes) {
  const BidSet b = timing_bids({1.6, -3.0}, 0.0);
  EXPECT_DOUBLE_EQ(b.buy[0].volume, 0.4);
  EXPECT_DOUBLE_EQ(b.sell[17].volume, 0.4);
}

TEST(Timing, NegativeVolumeMeansNoBid) {
  const BidSet b = timing_bids({0.1, 0.8}, 1.0);
  for (int h : kTimingBuyHours) EXPECT_EQ(b.buy[h].volume, 0.0);
  EXPECT_EQ(b.bids().size(), 4u);
}

TEST(Opportunistic, ZeroParameters) {
  const OpportunisticParams p{};
  const auto anchors = flat_anchors(250.0);
  const BidSet b = opportunistic_bids(p, 0.0, 0.13, anchors);
  for (int h = 0; h < kHoursPerDay; ++h) {
    EXPECT_DOUBLE_EQ(b.buy[h].volume, 0.1);
    EXPECT_DOUBLE_EQ(b.buy[h].price, 250.0);
    EXPECT_DOUBLE_EQ(b.sell[h].volume, 0.1);
    EXPECT_DOUBLE_EQ(b.sell[h].price, 250.0);
  }
}

TEST(Opportunistic, ShiftedBuyVolumeRoundsAway) {
  OpportunisticParams p{};
  for (int h = 0; h < kHoursPerDay; ++h) p.coefficient(4 * h + 5) = -2.0;
  const auto anchors = flat_anchors(250.0);
  const BidSet b = opportunistic_bids(p, 0.0, 0.13, anchors);
  for (int h = 0; h < kHoursPerDay; ++h) {
    EXPECT_EQ(b.buy[h].volume, 0.0);
    EXPECT_DOUBLE_EQ(b.sell[h].volume, 0.1);
  }
}

TEST(Opportunistic, LevelTermsAndScaleEquivariance) {
  OpportunisticParams p{};
  p.coefficient(3) = std::log(2.0);  // buy price doubles at a full battery
  p.coefficient(4 * 6 + 8) = 0.5;    // sell price offset at hour 6
  const auto a1 = flat_anchors(200.0);
  const auto a2 = flat_anchors(400.0);
  const BidSet b1 = opportunistic_bids(p, 1.0, 0.13, a1);
  const BidSet b2 = opportunistic_bids(p, 1.0, 0.13, a2);
  EXPECT_NEAR(b1.buy[3].price, 400.0, 1e-12);
  EXPECT_NEAR(b1.sell[6].price, 200.0 * std::exp(0.5), 1e-12);
  for (int h = 0; h < kHoursPerDay; ++h) {
    EXPECT_NEAR(b2.buy[h].price, 2.0 * b1.buy[h].price, 1e-9);
    EXPECT_NEAR(b2.sell[h].price, 2.0 * b1.sell[h].price, 1e-9);
    EXPECT_EQ(b2.buy[h].volume, b1.buy[h].volume);
  }
}

TEST(BlackBox, TransformExamples) {
  const auto anchors = flat_anchors(300.0);
  const BidSet zero = blackbox_bids(ActionMatrix::Zero(), 0.13, anchors);
  EXPECT_DOUBLE_EQ(zero.buy[5].volume, 0.1);
  EXPECT_DOUBLE_EQ(zero.sell[5].price, 300.0);

  ActionMatrix a = ActionMatrix::Zero();
  a(0, 7) = 3.0;
  a(3, 7) = -3.0;
  const BidSet b = blackbox_bids(a, 0.13, anchors);
  EXPECT_DOUBLE_EQ(b.buy[7].volume, 2.6);
  EXPECT_NEAR(b.sell[7].price, 14.94, 0.005);
}

TEST(SampleAction, ZeroNoiseGivesMean) {
  const PolicyParams p = PolicyParams::create(69, 16, -1.0, 3);
  std::vector<double> obs(69, 0.4);
  const std::array<double, kActionSize> xi{};
  const ActionSample s = sample_action(p, obs, xi);
  EXPECT_EQ(s.raw, s.mean);
  const Eigen::VectorXd direct = p.actor.forward(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(obs.data(), 69)));
  EXPECT_EQ(s.mean, direct);
}

TEST(SampleAction, StdAndLogProbability) {
  const PolicyParams p = PolicyParams::create(69, 16, -1.0, 3);
  std::vector<double> obs(69, -0.2);
  std::array<double, kActionSize> xi{};
  xi.fill(1.0);
  xi[0] = 50.0;  // forces clipping of coordinate 0
  const ActionSample s = sample_action(p, obs, xi);
  EXPECT_NEAR(s.raw[1] - s.mean[1], std::exp(-1.0), 1e-12);
  EXPECT_DOUBLE_EQ(s.action(0, 0), kActionLimit);
  EXPECT_NEAR(s.action(0, 1), s.raw[1], 0.0);
  // Standard normal density of each xi, shifted by the log-std.
  double expected = 0.0;
  for (double v : xi) expected += -0.5 * v * v - (-1.0) - 0.5 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(s.log_probability, expected, 1e-9);
}

TEST(SampleAction, DimensionMismatchThrows) {
  const PolicyParams p = PolicyParams::create(69, 16, -1.0, 3);
  std::vector<double> obs(141, 0.0);
  const std::array<double, kActionSize> xi{};
  EXPECT_THROW(sample_action(p, obs, xi), ValidationError);
}

TEST(StrategyDocument, RoundTrip) {
  StrategyDocument doc;
  doc.kind = StrategyKind::kOpportunistic;
  doc.params.assign(100, 0.0);
  doc.params[17] = -1.25e-3;
  doc.params[99] = 3.0000000000000004;
  testing::TempDir dir;
  save_strategy(doc, dir / "s.json");
  const StrategyDocument back = load_strategy(dir / "s.json");
  EXPECT_EQ(back.kind, doc.kind);
  EXPECT_EQ(back.params, doc.params);
  EXPECT_NO_THROW(make_strategy(back));
  doc.params.pop_back();
  EXPECT_THROW(make_strategy(doc), ValidationError);
  EXPECT_THROW(strategy_from_json(R"({"strategy_kind": "martingale"})"), ValidationError);
  EXPECT_THROW(load_strategy(dir / "none.json"), MissingArtifactError);
}

TEST(StrategyDocument, PolicyFileResolvesRelativeToDocument) {
  testing::TempDir dir;
  save_policy(PolicyParams::create(69, 8, -1.0, 1), dir / "p.json");
  StrategyDocument doc;
  doc.kind = StrategyKind::kBlackBox;
  doc.policy_file = "p.json";
  const auto s = make_strategy(doc, dir.path());
  const auto* policy = dynamic_cast<const PolicyStrategy*>(s.get());
  ASSERT_NE(policy, nullptr);
  EXPECT_TRUE(policy->deterministic());
  EXPECT_EQ(policy->policy().input_size(), 69);
}

}  // namespace
}  // namespace dabid
