#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>

#include "adaedit/latent.hpp"
#include "adaedit/solvers.hpp"
#include "adaedit/velocity.hpp"

namespace adaedit {

struct MetricReport {
  std::map<std::string, double> metrics;
  std::string run_id;
  std::string config_hash;
};

/// Returned by psnr() when the inputs are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// Template for the injection applied while measuring a jump: mask, global
/// flag and per-layer multiplier are copied, cache/step/ratios are filled in.
struct JumpProbe {
  const EditMask* background_mask = nullptr;
  bool global_mix = false;
  std::vector<double> layer_scale;  // clamp(delta * scale[l], 0, 1); empty = all 1
};

/// || v(z; injected at delta) - v(z; no injection) ||_2 using cache[step].
double velocity_jump(const VelocityField& v, const Latent& z, double t, const Conditioning& cond,
                     KVCache& cache, int step, double delta, const JumpProbe& probe = {});

/// || v(z; injected at delta_a) - v(z; injected at delta_b) ||_2. A zero ratio
/// means the injection is switched off, so velocity_jump(d) equals
/// velocity_jump_between(d, 0) bitwise.
double velocity_jump_between(const VelocityField& v, const Latent& z, double t,
                             const Conditioning& cond, KVCache& cache, int step, double delta_a,
                             double delta_b, const JumpProbe& probe = {});

/// 10 log10(peak^2 / MSE). Identical inputs give +infinity. Without `peak`
/// the reference range max(a) - min(a) is used (1 when the reference is flat).
double psnr(const Latent& a, const Latent& b, std::optional<double> peak = std::nullopt);

struct SsimParams {
  int window = 7;  // clipped to the largest odd size that fits the grid
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  std::optional<double> peak;
};

/// Gaussian-window SSIM over the sqrt(L) x sqrt(L) token grid, averaged over
/// channels and batch. Throws ShapeError when L is not a perfect square.
double ssim(const Latent& a, const Latent& b, const SsimParams& params = {});

/// max over steps of || a_i - b_i ||_2.
double trajectory_deviation(const Trajectory& a, const Trajectory& b);
std::vector<double> per_step_distance(const Trajectory& a, const Trajectory& b);

double l2_distance(const Latent& a, const Latent& b);

}  // namespace adaedit
