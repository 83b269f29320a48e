#include "support.hpp"

#include <gtest/gtest.h>

using namespace quadmpc;
using namespace testing_support;

TEST(Schedule, StandIsAlwaysInStance) {
  for (const auto& row : schedule_contacts(GaitSpec::stand(), 1.234, 10, 0.03))
    for (bool f : row) EXPECT_TRUE(f);
}

TEST(Schedule, TrotStartsOnFrontLeftRearRightDiagonal) {
  const auto table = schedule_contacts(GaitSpec::trot(), 0.0, 10, 0.03);
  const StanceFlags expected{true, false, false, true};
  EXPECT_EQ(table[0], expected);
}

TEST(Schedule, StanceFractionOverOnePeriod) {
  const GaitSpec gait = GaitSpec::trot();
  const int samples = 100;
  const auto table = schedule_contacts(gait, 0.0, samples, gait.period / samples);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    int count = 0;
    for (const auto& row : table) count += row[leg];
    EXPECT_LE(std::abs(count - gait.duty_factor * samples), 1.0) << "leg " << leg;
  }
}

TEST(Schedule, PeriodicInTime) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> time(0.0, 50.0);
  const GaitSpec gait = GaitSpec::trot();
  for (int i = 0; i < 500; ++i) {
    // Offset by a quarter of a stance slot so rounding at phase boundaries cannot flip a flag.
    const double t = std::floor(time(rng) / 0.03) * 0.03 + 0.0075;
    EXPECT_EQ(stance_at(gait, t), stance_at(gait, t + gait.period));
  }
}

TEST(Schedule, TrotNeverSchedulesFlight) {
  const GaitSpec gait = GaitSpec::trot();
  for (const auto& row : schedule_contacts(gait, 0.0, 2000, 0.0037)) {
    const bool pair_a = row[FL] && row[RR];
    const bool pair_b = row[FR] && row[RL];
    EXPECT_TRUE(pair_a || pair_b);
  }
}

TEST(Schedule, InvalidArguments) {
  EXPECT_THROW(schedule_contacts(GaitSpec::trot(), 0.0, 0, 0.03), Error);
  EXPECT_THROW(schedule_contacts(GaitSpec::trot(), 0.0, 5, 0.0), Error);
  GaitSpec bad = GaitSpec::trot();
  bad.phase_offsets = {0.0, 0.5, 0.0, 0.0};
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Footholds, AtRestFeetSitUnderHips) {
  RobotParams params;
  const State x = standing_state(params);
  const FootArray feet = plan_footholds(x, Vec3::Zero(), GaitSpec::trot(), params);
  const FootArray hips = hip_projections(x.p, 0.0, params);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    EXPECT_EQ(feet[leg], hips[leg]);
    EXPECT_NEAR(feet[leg].x(), params.hip_offsets[leg].x(), 1e-15);
    EXPECT_NEAR(feet[leg].y(), params.hip_offsets[leg].y(), 1e-15);
    EXPECT_NEAR(feet[leg].z(), 0.0, 1e-15);
  }
}

TEST(Footholds, ForwardShiftIsHalfStanceTravel) {
  RobotParams params;
  State x = standing_state(params);
  x.v = Vec3(0.4, 0.0, 0.0);
  const GaitSpec gait = GaitSpec::trot(0.5, 0.5);
  ASSERT_DOUBLE_EQ(gait.stance_duration(), 0.25);
  const FootArray feet = plan_footholds(x, x.v, gait, params);
  const FootArray hips = hip_projections(x.p, 0.0, params);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    EXPECT_NEAR(feet[leg].x() - hips[leg].x(), 0.05, 1e-15);
    EXPECT_NEAR(feet[leg].y() - hips[leg].y(), 0.0, 1e-15);
  }
}

TEST(Footholds, ShiftClampedToReach) {
  RobotParams params;
  State x = standing_state(params);
  x.v = Vec3(3.0, 4.0, 0.0);
  const FootArray feet = plan_footholds(x, x.v, GaitSpec::trot(), params);
  const FootArray hips = hip_projections(x.p, 0.0, params);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 shift = feet[leg] - hips[leg];
    EXPECT_NEAR(shift.norm(), 0.15, 1e-12);
    EXPECT_NEAR(shift.x() / shift.y(), 0.75, 1e-12);
  }
}

TEST(Footholds, Deterministic) {
  std::mt19937_64 rng(2);
  RobotParams params;
  for (int i = 0; i < 50; ++i) {
    const State x = random_state(rng);
    const Vec3 v = random_vec3(rng, 1.0);
    EXPECT_EQ(plan_footholds(x, v, GaitSpec::trot(), params), plan_footholds(x, v, GaitSpec::trot(), params));
  }
}

TEST(Footholds, RelativeVectors) {
  const std::vector<Vec3> same{Vec3(0.3, -0.2, 0.1)};
  EXPECT_TRUE(relative_foot_vectors(same, same[0])[0].isZero(0.0));

  const std::vector<Vec3> foot{Vec3(1.0, 2.0, 0.0)};
  const Vec3 r = relative_foot_vectors(foot, Vec3(1.0, 2.0, 0.3))[0];
  EXPECT_EQ(r, Vec3(0.0, 0.0, -0.3));

  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const std::vector<Vec3> f{random_vec3(rng, 1.0), random_vec3(rng, 1.0)};
    const Vec3 p = random_vec3(rng, 1.0);
    const Vec3 shift = random_vec3(rng, 10.0);
    const std::vector<Vec3> moved{f[0] + shift, f[1] + shift};
    const auto a = relative_foot_vectors(f, p);
    const auto b = relative_foot_vectors(moved, p + shift);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_LT((a[j] - b[j]).norm(), 1e-13);
  }
}

TEST(FootholdTracker, FeetStayPlantedDuringStance) {
  RobotParams params;
  FootholdTracker tracker(standing_state(params), params);
  const FootArray initial = tracker.footholds();
  FootArray planned = initial;
  for (auto& p : planned) p.x() += 0.1;

  tracker.update({true, true, true, true}, planned);
  EXPECT_EQ(tracker.footholds(), initial);

  tracker.update({true, false, false, true}, planned);
  EXPECT_EQ(tracker.footholds(), initial);

  tracker.update({true, true, true, true}, planned);
  EXPECT_EQ(tracker.footholds()[FL], initial[FL]);
  EXPECT_EQ(tracker.footholds()[FR], planned[FR]);
  EXPECT_EQ(tracker.footholds()[RL], planned[RL]);
  EXPECT_EQ(tracker.footholds()[RR], initial[RR]);
}
