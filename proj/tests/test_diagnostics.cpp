#include <gtest/gtest.h>

#include <cmath>

#include "adaedit/diagnostics.hpp"
#include "adaedit/errors.hpp"
#include "adaedit/pipeline.hpp"

using namespace adaedit;

namespace {

Latent filled(int b, int l, int c, double v) {
  return Latent(b, l, c, std::vector<double>(static_cast<std::size_t>(b) * l * c, v));
}

Latent ramp(int l, int c) {
  std::vector<double> d;
  for (int i = 0; i < l * c; ++i) d.push_back(std::sin(0.37 * i) + 0.1 * i);
  return Latent(1, l, c, d);
}

}  // namespace

TEST(Psnr, IdenticalIsInfinite) {
  const Latent a = ramp(16, 3);
  EXPECT_EQ(psnr(a, a), kPsnrIdentical);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
}

TEST(Psnr, KnownValues) {
  const Latent a = filled(1, 4, 1, 0.0);
  const Latent b = filled(1, 4, 1, 0.1);
  EXPECT_NEAR(psnr(a, b, 1.0), 20.0, 1e-12);
  EXPECT_NEAR(psnr(a, filled(1, 4, 1, 1.0), 1.0), 0.0, 1e-12);
  // Flat reference falls back to peak 1.
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-12);
}

TEST(Psnr, ShapeMismatch) {
  EXPECT_THROW(psnr(filled(1, 4, 1, 0.0), filled(1, 4, 2, 0.0)), ShapeError);
}

TEST(Ssim, Identity) {
  const Latent a = synthetic_source(1, 16, 4, 3);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, NegationOfZeroMeanFieldIsNegative) {
  // Horizontal ramp on a 3x3 grid: the symmetric window sees zero mean.
  const Latent a(1, 9, 1, {-1, 0, 1, -1, 0, 1, -1, 0, 1});
  Latent neg = a;
  for (double& x : neg.data()) x = -x;
  EXPECT_LT(ssim(a, neg), 0.0);
}

TEST(Ssim, DecreasesWithNoise) {
  const Latent a = synthetic_source(1, 64, 4, 2);
  double prev = 1.0 + 1e-12;
  for (double sigma : {0.01, 0.1, 0.5, 2.0}) {
    SeededRng rng(9);
    Latent noisy = a;
    for (double& x : noisy.data()) x += sigma * rng.normal();
    const double s = ssim(a, noisy);
    EXPECT_LT(s, prev) << sigma;
    EXPECT_LE(s, 1.0);
    EXPECT_GE(s, -1.0);
    prev = s;
  }
}

TEST(Ssim, SymmetricWithExplicitPeak) {
  const Latent a = synthetic_source(1, 16, 2, 4);
  const Latent b = synthetic_source(1, 16, 2, 5);
  const SsimParams p{.peak = 3.0};
  EXPECT_NEAR(ssim(a, b, p), ssim(b, a, p), 1e-14);
}

TEST(Ssim, NonSquareTokenCountRejected) {
  EXPECT_THROW(ssim(filled(1, 15, 1, 0.0), filled(1, 15, 1, 0.0)), ShapeError);
}

TEST(Trajectory, DeviationCases) {
  Trajectory a, b;
  for (int i = 0; i < 4; ++i) {
    a.states.push_back(filled(1, 1, 1, 0.0));
    b.states.push_back(filled(1, 1, 1, i == 2 ? 3.0 : 1.0));
  }
  EXPECT_EQ(trajectory_deviation(a, a), 0.0);
  EXPECT_DOUBLE_EQ(trajectory_deviation(a, b), 3.0);
  const std::vector<double> d = per_step_distance(a, b);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_DOUBLE_EQ(d[2], 3.0);
  Trajectory shorter;
  shorter.states.push_back(filled(1, 1, 1, 0.0));
  EXPECT_THROW(trajectory_deviation(a, shorter), ShapeError);
}

TEST(Distance, L2) {
  EXPECT_DOUBLE_EQ(l2_distance(filled(1, 2, 2, 0.0), filled(1, 2, 2, 1.0)), 2.0);
}

namespace {

struct JumpFixture {
  ToyAttentionFlow f{ToyModelConfig{}};
  Conditioning c{{1, 2, 3, 4}, 1};
  Latent z = synthetic_source(1, 16, 8, 7);
  KVCache cache;

  JumpFixture() {
    InjectionHooks h;
    h.mode = HookMode::kRecord;
    h.cache = &cache;
    h.step = 2;
    f.evaluate(z, 0.4, c, h);
  }
};

}  // namespace

TEST(VelocityJump, ZeroRatioIsZero) {
  JumpFixture fx;
  EXPECT_EQ(velocity_jump(fx.f, fx.z, 0.4, fx.c, fx.cache, 2, 0.0), 0.0);
  EXPECT_EQ(velocity_jump_between(fx.f, fx.z, 0.4, fx.c, fx.cache, 2, 0.3, 0.3), 0.0);
}

TEST(VelocityJump, SelfInjectionIsNegligible) {
  JumpFixture fx;
  EXPECT_LT(velocity_jump(fx.f, fx.z, 0.4, fx.c, fx.cache, 2, 1.0), 1e-6);
}

TEST(VelocityJump, ForeignCacheGrowsWithRatio) {
  JumpFixture fx;
  const Latent other = synthetic_source(1, 16, 8, 8);
  double prev = 0.0;
  for (double d : {0.2, 0.5, 0.9}) {
    const double j = velocity_jump(fx.f, other, 0.4, fx.c, fx.cache, 2, d);
    EXPECT_GT(j, prev);
    prev = j;
  }
  EXPECT_EQ(velocity_jump(fx.f, other, 0.4, fx.c, fx.cache, 2, 0.5),
            velocity_jump_between(fx.f, other, 0.4, fx.c, fx.cache, 2, 0.5, 0.0));
}

TEST(VelocityJump, MissingStepIsStateError) {
  JumpFixture fx;
  EXPECT_THROW(velocity_jump(fx.f, fx.z, 0.4, fx.c, fx.cache, 3, 0.5), StateError);
}
