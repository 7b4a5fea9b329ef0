#include <algorithm>
#include <array>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "udcsim/calibration.hpp"
#include "udcsim/error.hpp"
#include "udcsim/storage.hpp"

namespace st = udc::storage;
namespace ac = udc::acoustics;

namespace {

st::DiskModel lab_hdd() {
  const auto cal = udc::default_calibration();
  st::DiskModel m;
  m.write_curve = cal.lab.write_curve;
  m.unresponsive_threshold_db = 36.0;
  m.unresponsive_dwell_s = 60.0;
  return m;
}

ac::EffectiveExcitation at(double delta) {
  ac::EffectiveExcitation e;
  e.delta_spl = delta;
  return e;
}

st::DiskState stalled() {
  st::DiskState s;
  s.responsive = false;
  s.current_multiplier = 0.0;
  return s;
}

}  // namespace

TEST(DegradationCurve, LabWriteKnots) {
  const auto curve = udc::default_calibration().lab.write_curve;
  EXPECT_DOUBLE_EQ(st::degradation_multiplier(26, curve, 1.0), 0.83);
  EXPECT_DOUBLE_EQ(st::degradation_multiplier(32, curve, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(st::degradation_multiplier(20, curve, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(st::degradation_multiplier(45, curve, 1.0), 0.0);
}

TEST(DegradationCurve, TwoKnotMidpoint) {
  const st::DegradationCurve two({{26.0, 0.83}, {32.0, 0.0}});
  EXPECT_NEAR(st::degradation_multiplier(29, two, 1.0), 0.415, 1e-12);
}

TEST(DegradationCurve, CombinedFactorScalesTheDrop) {
  const auto curve = udc::default_calibration().lab.write_curve;
  EXPECT_DOUBLE_EQ(st::degradation_multiplier(30, curve, 0.0), 1.0);
  EXPECT_NEAR(st::degradation_multiplier(30, curve, 0.5), 1.0 - 0.65 * 0.5, 1e-12);
  EXPECT_THROW(st::degradation_multiplier(30, curve, 1.2), udc::ValidationError);
}

TEST(DegradationCurve, MonotoneAndBounded) {
  const auto cal = udc::default_calibration();
  for (const auto* curve : {&cal.lab.write_curve, &cal.open_water.write_curve}) {
    double prev = 1.0;
    for (double d = -10.0; d <= 60.0; d += 0.25) {
      const double m = st::degradation_multiplier(d, *curve, 1.0);
      ASSERT_GE(m, 0.0);
      ASSERT_LE(m, 1.0);
      ASSERT_LE(m, prev + 1e-15) << d;
      prev = m;
    }
  }
}

TEST(DegradationCurve, RejectsIncreasingOrOutOfRange) {
  EXPECT_THROW(st::DegradationCurve({{26, 0.5}, {30, 0.7}}), udc::ConfigError);
  EXPECT_THROW(st::DegradationCurve({{26, 1.5}}), udc::ConfigError);
  EXPECT_THROW(st::DegradationCurve({{26, 0.5}, {26, 0.4}}), udc::ConfigError);
}

TEST(Pes, Interpolation) {
  EXPECT_DOUBLE_EQ(st::pes_displacement_ratio(46), 0.0);
  EXPECT_DOUBLE_EQ(st::pes_displacement_ratio(64), 83.0);
  EXPECT_NEAR(st::pes_displacement_ratio(55), 41.5, 1e-12);
  EXPECT_DOUBLE_EQ(st::pes_displacement_ratio(30), 0.0);
}

TEST(DiskStep, SustainedLevelAboveThresholdStallsAfterDwell) {
  const auto m = lab_hdd();
  st::DiskState s;
  for (int i = 1; i < 60; ++i) {
    s = st::disk_step(s, m, at(38), 1.0, 1.0);
    ASSERT_TRUE(s.responsive) << i;
    ASSERT_EQ(s.current_multiplier, 0.0);  // 38 dB is past the last knot
  }
  s = st::disk_step(s, m, at(38), 1.0, 1.0);
  EXPECT_FALSE(s.responsive);
  EXPECT_DOUBLE_EQ(s.current_multiplier, 0.0);
}

TEST(DiskStep, DwellResetsBelowThreshold) {
  const auto m = lab_hdd();
  st::DiskState s;
  for (int i = 0; i < 59; ++i) s = st::disk_step(s, m, at(37), 1.0, 1.0);
  s = st::disk_step(s, m, at(30), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(s.dwell_accumulator_s, 0.0);
  EXPECT_NEAR(s.current_multiplier, 0.35, 1e-12);
  s = st::disk_step(s, m, at(37), 1.0, 1.0);
  EXPECT_TRUE(s.responsive);
}

TEST(DiskStep, RecoversWhenLevelDrops) {
  const auto m = lab_hdd();
  auto s = st::disk_step(stalled(), m, at(20), 1.0, 1.0);
  EXPECT_TRUE(s.responsive);
  EXPECT_DOUBLE_EQ(s.current_multiplier, 1.0);
}

TEST(DiskStep, ZeroFactorNeverStalls) {
  const auto m = lab_hdd();
  st::DiskState s;
  for (int i = 0; i < 500; ++i) s = st::disk_step(s, m, at(60), 0.0, 1.0);
  EXPECT_TRUE(s.responsive);
  EXPECT_DOUBLE_EQ(s.current_multiplier, 1.0);
}

TEST(DiskStep, SensitivityOffsetLowersPerceivedLevel) {
  auto m = lab_hdd();
  m.sensitivity_offset_db = 4.0;
  auto s = st::disk_step({}, m, at(30), 1.0, 1.0);
  EXPECT_NEAR(s.current_multiplier, 0.83, 1e-12);  // perceives 26 dB
}

TEST(DiskStep, SolidStateIsImmune) {
  st::DiskModel ssd;
  ssd.kind = st::DiskKind::kSolidState;
  ssd.write_curve = st::DegradationCurve::identity();
  EXPECT_NO_THROW(ssd.validate());
  st::DiskState s;
  for (double d : {0.0, 26.0, 34.0, 40.0, 80.0}) {
    for (int i = 0; i < 200; ++i) s = st::disk_step(s, ssd, at(d), 1.0, 1.0);
    EXPECT_EQ(s, st::DiskState{});
  }
  ssd.write_curve = udc::default_calibration().lab.write_curve;
  EXPECT_THROW(ssd.validate(), udc::ConfigError);
}

TEST(DiskStep, PermanentDamageAccrues) {
  auto m = lab_hdd();
  m.permanent_damage_rate = 0.01;
  auto s = stalled();
  for (int i = 0; i < 50; ++i) s = st::disk_step(s, m, at(40), 1.0, 1.0);
  EXPECT_NEAR(s.permanent_multiplier, 0.5, 1e-9);
  // The recovering step still starts unresponsive and accrues one more second.
  s = st::disk_step(s, m, at(0), 1.0, 1.0);
  EXPECT_TRUE(s.responsive);
  EXPECT_NEAR(s.current_multiplier, 0.49, 1e-9);
  for (int i = 0; i < 200; ++i) s = st::disk_step(s, m, at(40), 1.0, 1.0);
  EXPECT_FALSE(s.detected);
  s = st::disk_step(s, m, at(0), 1.0, 1.0);
  EXPECT_FALSE(s.responsive);
}

TEST(DiskStep, RejectsNonPositiveDt) {
  EXPECT_THROW(st::disk_step({}, lab_hdd(), at(0), 1.0, 0.0), udc::ValidationError);
}

TEST(Raid5, NeedsThreeMembers) {
  EXPECT_THROW(st::Raid5Array(2), udc::ConfigError);
  EXPECT_NO_THROW(st::Raid5Array(3));
}

TEST(Raid5, DropAfterTimeout) {
  st::Raid5Array a(4, {10.0, 50.0});
  std::vector<st::DiskState> states(4);
  states[1] = stalled();
  auto ev = a.step(states, 1.0);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, st::RaidEventKind::kMemberStalled);
  for (int i = 0; i < 9; ++i) EXPECT_TRUE(a.step(states, 1.0).empty());
  ev = a.step(states, 1.0);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0].kind, st::RaidEventKind::kMemberDropped);
  EXPECT_EQ(ev[0].member, 1u);
  EXPECT_EQ(ev[1].kind, st::RaidEventKind::kDegraded);
  EXPECT_EQ(a.status(), st::ArrayStatus::kDegraded);
  EXPECT_EQ(a.active_count(), 3u);
}

TEST(Raid5, RecoveryBeforeTimeoutResetsTimer) {
  st::Raid5Array a(4, {10.0, 50.0});
  std::vector<st::DiskState> states(4);
  states[0] = stalled();
  for (int i = 0; i < 8; ++i) a.step(states, 1.0);
  states[0] = {};
  auto ev = a.step(states, 1.0);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, st::RaidEventKind::kMemberRecovered);
  EXPECT_DOUBLE_EQ(a.unresponsive_for(0), 0.0);
  EXPECT_EQ(a.status(), st::ArrayStatus::kHealthy);
}

TEST(Raid5, DegradedUsesLongerTimeout) {
  st::Raid5Array a(4, {10.0, 50.0});
  std::vector<st::DiskState> states(4);
  a.drop(0);
  states[2] = stalled();
  a.step(states, 1.0);
  for (int i = 0; i < 49; ++i) {
    a.step(states, 1.0);
    ASSERT_EQ(a.status(), st::ArrayStatus::kDegraded) << i;
  }
  a.step(states, 1.0);
  EXPECT_EQ(a.status(), st::ArrayStatus::kFailed);
}

TEST(Raid5, FailedIsAbsorbing) {
  st::Raid5Array a(4);
  a.drop(0);
  a.drop(1);
  ASSERT_EQ(a.status(), st::ArrayStatus::kFailed);
  std::vector<st::DiskState> states(4);
  EXPECT_TRUE(a.step(states, 1.0).empty());
  EXPECT_TRUE(a.drop(2).empty());
  EXPECT_EQ(a.status(), st::ArrayStatus::kFailed);
  EXPECT_FALSE(a.can_serve(states));
  std::vector<st::DiskModel> models(4);
  EXPECT_THROW(st::raid5_throughput(a, states, models), udc::UnavailableError);
}

TEST(Raid5, StatusFollowsLossCountForEveryOrdering) {
  // Every sequence of drops over 3..6 members: status is a function of the
  // number of losses alone.
  for (std::size_t n = 3; n <= 6; ++n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    do {
      for (std::size_t k = 0; k <= n; ++k) {
        st::Raid5Array a(n);
        for (std::size_t i = 0; i < k; ++i) a.drop(order[i]);
        const auto expected = k == 0 ? st::ArrayStatus::kHealthy
                              : k == 1 && n > 3 ? st::ArrayStatus::kDegraded
                                                : st::ArrayStatus::kFailed;
        ASSERT_EQ(a.status(), expected) << "n=" << n << " k=" << k;
      }
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST(Raid5, TimerDrivenOrderingsMatchAdministrativeDrops) {
  // Stall every subset of a 4-member array at once; the stalled set decides
  // the outcome regardless of which member reaches its timeout first.
  for (unsigned mask = 0; mask < 16; ++mask) {
    st::Raid5Array a(4, {5.0, 20.0});
    std::vector<st::DiskState> states(4);
    int stalled_count = 0;
    for (int i = 0; i < 4; ++i) {
      if (mask & (1u << i)) {
        states[i] = stalled();
        ++stalled_count;
      }
    }
    for (int t = 0; t < 100; ++t) a.step(states, 1.0);
    const auto expected = stalled_count == 0   ? st::ArrayStatus::kHealthy
                          : stalled_count == 1 ? st::ArrayStatus::kDegraded
                                               : st::ArrayStatus::kFailed;
    EXPECT_EQ(a.status(), expected) << mask;
  }
}

TEST(Raid5, ThroughputIsTheSlowestActiveMember) {
  st::Raid5Array a(4);
  std::vector<st::DiskModel> models(4);
  std::vector<st::DiskState> states(4);
  const std::array<double, 4> mult{0.9, 0.35, 0.8, 0.6};
  for (int i = 0; i < 4; ++i) states[i].current_multiplier = mult[i];
  EXPECT_DOUBLE_EQ(st::raid5_throughput(a, states, models), 35.0);
  a.drop(1);
  // Dropping the bottleneck raises throughput to the next slowest member.
  EXPECT_DOUBLE_EQ(st::raid5_throughput(a, states, models), 60.0);
  states[3] = stalled();
  EXPECT_DOUBLE_EQ(st::raid5_throughput(a, states, models), 0.0);
  EXPECT_FALSE(a.can_serve(states));
}

TEST(Raid5, StateCountMismatch) {
  st::Raid5Array a(4);
  std::vector<st::DiskState> states(3);
  EXPECT_THROW(a.step(states, 1.0), udc::ValidationError);
}

TEST(Cache, HitRatioTableAndBands) {
  auto cfg = udc::default_calibration().cache;
  cfg.cache_size_gb = 2.0;
  EXPECT_DOUBLE_EQ(st::hit_probability(cfg, udc::WorkloadKind::kSequentialWrite), 0.761);
  EXPECT_DOUBLE_EQ(st::hit_probability(cfg, udc::WorkloadKind::kRandomRead), 0.0);
  cfg.cache_size_gb = 3.0;
  EXPECT_THROW(st::hit_probability(cfg, udc::WorkloadKind::kSequentialWrite), udc::ConfigError);
}

TEST(Cache, LatenciesStayInsideTheirBands) {
  auto cfg = udc::default_calibration().cache;
  auto rng = udc::engine::derive_rng(5, "test/cache");
  std::size_t hits = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const bool attacked = i % 2 == 1;
    const auto r = st::cache_serve(cfg, udc::WorkloadKind::kSequentialWrite, attacked, rng);
    if (r.hit) {
      ++hits;
      ASSERT_GE(r.latency_ms, 1.0);
      ASSERT_LE(r.latency_ms, 5.0);
    } else if (attacked) {
      ASSERT_GE(r.latency_ms, 200.0);
      ASSERT_LE(r.latency_ms, 800.0);
    } else {
      ASSERT_GE(r.latency_ms, 1.0);
      ASSERT_LE(r.latency_ms, 200.0);
    }
  }
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.569, 0.015);
}

TEST(Cache, RandomWorkloadsAlwaysMiss) {
  auto cfg = udc::default_calibration().cache;
  auto rng = udc::engine::derive_rng(5, "test/cache/rw");
  for (int i = 0; i < 1000; ++i) {
    EXPECT_FALSE(st::cache_serve(cfg, udc::WorkloadKind::kRandomWrite, true, rng).hit);
  }
}

TEST(Cache, ValidateRejectsBadBands) {
  auto cfg = udc::default_calibration().cache;
  cfg.hit_latency_band = {5.0, 1.0};
  EXPECT_THROW(cfg.validate(), udc::ConfigError);
}
