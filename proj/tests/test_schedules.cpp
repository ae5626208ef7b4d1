#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "adaedit/errors.hpp"
#include "adaedit/latent.hpp"
#include "adaedit/schedules.hpp"

using namespace adaedit;

namespace {

ScheduleParams make(ScheduleFamily f, int T, int T_inj, double k = 5.0, double m = 0.7) {
  return ScheduleParams{f, T, T_inj, k, m, 0.05};
}

// Direct long-double evaluation, written independently of the library.
long double oracle(ScheduleFamily f, int step, int T_inj, long double k, long double m) {
  const long double r = static_cast<long double>(step) / T_inj;
  switch (f) {
    case ScheduleFamily::kSigmoid: return 1.0L / (1.0L + std::exp(k * (r - m)));
    case ScheduleFamily::kCosine: return 0.5L * (1.0L + std::cos(std::numbers::pi_v<long double> * std::min(r, 1.0L)));
    case ScheduleFamily::kLinear: return std::max(1.0L - r, 0.0L);
    case ScheduleFamily::kBinary: return step < T_inj ? 1.0L : 0.0L;
  }
  return -1;
}

constexpr ScheduleFamily kFamilies[] = {ScheduleFamily::kSigmoid, ScheduleFamily::kCosine,
                                        ScheduleFamily::kLinear, ScheduleFamily::kBinary};

}  // namespace

TEST(ScheduleWeight, SigmoidMidpointIsHalf) {
  // step / T_inj = 0.7 with T_inj = 10, step = 7.
  const InjectionSchedule s(make(ScheduleFamily::kSigmoid, 10, 10));
  EXPECT_NEAR(s.weight(7), 0.5, 1e-15);
}

TEST(ScheduleWeight, SigmoidStepZero) {
  const InjectionSchedule s(make(ScheduleFamily::kSigmoid, 15, 4));
  EXPECT_NEAR(s.weight(0), 0.970687769248644, 1e-12);
}

TEST(ScheduleWeight, CosineAndLinear) {
  const InjectionSchedule c(make(ScheduleFamily::kCosine, 10, 8));
  EXPECT_NEAR(c.weight(4), 0.5, 1e-15);
  EXPECT_NEAR(c.weight(8), 0.0, 1e-15);
  EXPECT_NEAR(c.weight(9), 0.0, 1e-15);
  const InjectionSchedule l(make(ScheduleFamily::kLinear, 10, 8));
  EXPECT_DOUBLE_EQ(l.weight(2), 0.75);
  EXPECT_EQ(l.weight(9), 0.0);
}

TEST(ScheduleWeight, StepOutOfRange) {
  const InjectionSchedule s(make(ScheduleFamily::kSigmoid, 15, 4));
  EXPECT_THROW(s.weight(15), IndexError);
  EXPECT_THROW(s.weight(-1), IndexError);
  EXPECT_THROW(s.is_active(15), IndexError);
}

TEST(ScheduleWeight, RejectsBadParameters) {
  EXPECT_THROW(InjectionSchedule(make(ScheduleFamily::kSigmoid, 4, 5)), ConfigError);
  EXPECT_THROW(InjectionSchedule(make(ScheduleFamily::kSigmoid, 4, 0)), ConfigError);
  EXPECT_THROW(InjectionSchedule(make(ScheduleFamily::kSigmoid, 4, 2, -1.0)), ConfigError);
  EXPECT_THROW(InjectionSchedule(make(ScheduleFamily::kSigmoid, 4, 2, 5.0, 1.0)), ConfigError);
}

TEST(ScheduleWeight, MatchesLongDoubleOracle) {
  SeededRng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const ScheduleFamily f = kFamilies[trial % 3];
    const int T = 2 + static_cast<int>(rng.uniform() * 40);
    const int T_inj = 1 + static_cast<int>(rng.uniform() * T);
    const double k = 0.5 + 20.0 * rng.uniform();
    const double m = 0.05 + 0.9 * rng.uniform();
    const InjectionSchedule s(make(f, T, T_inj, k, m));
    for (int i = 0; i < T; ++i)
      ASSERT_NEAR(s.weight(i), static_cast<double>(oracle(f, i, T_inj, k, m)), 1e-12);
  }
}

TEST(EffectiveRatio, Examples) {
  const InjectionSchedule sig(make(ScheduleFamily::kSigmoid, 15, 4));
  EXPECT_NEAR(sig.effective_ratio(0.9, 0), 0.873618992323779, 1e-12);
  const InjectionSchedule bin(make(ScheduleFamily::kBinary, 15, 4));
  EXPECT_EQ(bin.effective_ratio(0.9, 3), 0.9);
  const InjectionSchedule cos(make(ScheduleFamily::kCosine, 10, 8));
  EXPECT_NEAR(cos.effective_ratio(0.9, 4), 0.45, 1e-15);
  EXPECT_THROW(sig.effective_ratio(1.5, 0), DomainError);
  EXPECT_THROW(sig.effective_ratio(-0.1, 0), DomainError);
}

TEST(EffectiveRatio, LinearInDeltaBase) {
  const InjectionSchedule s(make(ScheduleFamily::kSigmoid, 15, 4));
  for (double a : {0.0, 0.3, 0.5, 1.0})
    for (int i = 0; i < 15; ++i)
      EXPECT_NEAR(s.effective_ratio(a * 0.8, i), a * s.effective_ratio(0.8, i), 1e-15);
}

TEST(IsActive, SigmoidSoftCutoff) {
  const InjectionSchedule s(make(ScheduleFamily::kSigmoid, 15, 4));
  EXPECT_NEAR(s.weight(5), 0.0600866501740076, 1e-12);
  EXPECT_TRUE(s.is_active(5));
  EXPECT_NEAR(s.weight(6), 0.0179862099620916, 1e-12);
  EXPECT_FALSE(s.is_active(6));
}

TEST(IsActive, BinaryIgnoresThreshold) {
  ScheduleParams p = make(ScheduleFamily::kBinary, 15, 4);
  p.activity_threshold = 0.99;
  const InjectionSchedule s(p);
  EXPECT_TRUE(s.is_active(3));
  EXPECT_FALSE(s.is_active(4));
}

TEST(MaxStepDelta, BinaryJumpsByDeltaBase) {
  const InjectionSchedule s(make(ScheduleFamily::kBinary, 15, 4));
  EXPECT_EQ(max_step_delta(s, 0.9), 0.9);
}

TEST(MaxStepDelta, SigmoidDefaults) {
  const InjectionSchedule s(make(ScheduleFamily::kSigmoid, 15, 4));
  EXPECT_NEAR(max_step_delta(s, 0.9), 0.263911571564223, 1e-12);
}

TEST(MaxStepDelta, TwoStepLinear) {
  const InjectionSchedule s(make(ScheduleFamily::kLinear, 2, 2));
  EXPECT_DOUBLE_EQ(max_step_delta(s, 0.8), 0.4);
}

TEST(MaxStepDelta, SigmoidBelowBinaryForEveryInjectionLength) {
  for (int T_inj = 2; T_inj <= 12; ++T_inj) {
    const InjectionSchedule sig(make(ScheduleFamily::kSigmoid, 15, T_inj));
    EXPECT_LT(max_step_delta(sig, 0.9), 0.9) << "T_inj=" << T_inj;
  }
}

TEST(ScheduleProperties, MonotoneAndBounded) {
  SeededRng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const ScheduleFamily f = kFamilies[trial % 4];
    const int T = 1 + static_cast<int>(rng.uniform() * 50);
    const int T_inj = 1 + static_cast<int>(rng.uniform() * T);
    const InjectionSchedule s(make(f, T, T_inj, 0.1 + 30 * rng.uniform(), 0.01 + 0.98 * rng.uniform()));
    for (int i = 0; i < T; ++i) {
      ASSERT_GE(s.weight(i), 0.0);
      ASSERT_LE(s.weight(i), 1.0);
      if (i + 1 < T) ASSERT_LE(s.weight(i + 1), s.weight(i));
    }
  }
}

TEST(ScheduleProperties, StrictDecayInsideActiveRegion) {
  for (ScheduleFamily f : {ScheduleFamily::kSigmoid, ScheduleFamily::kCosine, ScheduleFamily::kLinear}) {
    const InjectionSchedule s(make(f, 20, 8));
    for (int i = 0; i + 1 < 8; ++i) EXPECT_LT(s.weight(i + 1), s.weight(i));
  }
}

TEST(ScheduleProperties, SharpSigmoidApproachesBinary) {
  const int T = 30, T_inj = 10;
  const InjectionSchedule sharp(make(ScheduleFamily::kSigmoid, T, T_inj, 1e4, 0.7));
  for (int i = 0; i < T; ++i) {
    const double r = static_cast<double>(i) / T_inj;
    if (std::abs(r - 0.7) <= 0.01) continue;
    // Binary limit of a sigmoid centred at m: 1 before m*T_inj, 0 after.
    const double limit = r < 0.7 ? 1.0 : 0.0;
    EXPECT_LT(std::abs(sharp.weight(i) - limit), 1e-3) << "step " << i;
  }
}

TEST(LayerMultiplier, Profiles) {
  EXPECT_EQ(layer_multiplier({4, 0.0}, 3), 1.0);
  EXPECT_DOUBLE_EQ(layer_multiplier({2, 0.2}, 0), 0.9);
  EXPECT_DOUBLE_EQ(layer_multiplier({2, 0.2}, 1), 1.1);
  EXPECT_EQ(layer_multiplier({1, 0.5}, 0), 1.0);
  EXPECT_THROW(layer_multiplier({2, 0.2}, 2), IndexError);
  EXPECT_EQ(layer_ratio({2, 0.2}, 0.95, 1), 1.0);
}

TEST(LayerMultiplier, PositiveAndNonDecreasing) {
  for (int n = 1; n <= 6; ++n)
    for (double beta : {0.0, 0.2, 1.0, 1.9})
      for (int l = 0; l < n; ++l) {
        EXPECT_GT(layer_multiplier({n, beta}, l), 0.0);
        if (l > 0) EXPECT_GE(layer_multiplier({n, beta}, l), layer_multiplier({n, beta}, l - 1));
      }
}
