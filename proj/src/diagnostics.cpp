#include "adaedit/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "adaedit/errors.hpp"

namespace adaedit {

namespace {

InjectionHooks probe_hooks(KVCache& cache, int step, double delta, const JumpProbe& probe, int layers) {
  InjectionHooks h;
  if (delta <= 0.0) return h;
  h.mode = HookMode::kInject;
  h.cache = &cache;
  h.step = step;
  h.background_mask = probe.background_mask;
  h.global_mix = probe.global_mix;
  h.mix_ratios.resize(layers);
  for (int l = 0; l < layers; ++l) {
    const double s = probe.layer_scale.empty() ? 1.0 : probe.layer_scale.at(l);
    h.mix_ratios[l] = std::clamp(delta * s, 0.0, 1.0);
  }
  return h;
}

int layer_count(const KVCache& cache, int step) {
  int n = 0;
  while (cache.contains(step, n)) ++n;
  if (n == 0) throw StateError("velocity jump: cache holds no entries for step " + std::to_string(step));
  return n;
}

}  // namespace

double l2_distance(const Latent& a, const Latent& b) {
  if (!a.same_shape(b)) throw ShapeError("l2_distance: shape mismatch");
  double acc = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) acc += (da[i] - db[i]) * (da[i] - db[i]);
  return std::sqrt(acc);
}

double velocity_jump_between(const VelocityField& v, const Latent& z, double t,
                             const Conditioning& cond, KVCache& cache, int step, double delta_a,
                             double delta_b, const JumpProbe& probe) {
  const int layers = layer_count(cache, step);
  if (delta_a == delta_b) return 0.0;
  const Latent va = v.evaluate(z, t, cond, probe_hooks(cache, step, delta_a, probe, layers));
  const Latent vb = v.evaluate(z, t, cond, probe_hooks(cache, step, delta_b, probe, layers));
  return l2_distance(va, vb);
}

double velocity_jump(const VelocityField& v, const Latent& z, double t, const Conditioning& cond,
                     KVCache& cache, int step, double delta, const JumpProbe& probe) {
  return velocity_jump_between(v, z, t, cond, cache, step, delta, 0.0, probe);
}

double psnr(const Latent& a, const Latent& b, std::optional<double> peak) {
  if (!a.same_shape(b)) throw ShapeError("psnr: shape mismatch");
  double p;
  if (peak) {
    if (!(*peak > 0.0)) throw DomainError("psnr: peak must be positive");
    p = *peak;
  } else {
    auto [lo, hi] = std::minmax_element(a.data().begin(), a.data().end());
    p = *hi - *lo;
    if (!(p > 0.0)) p = 1.0;
  }
  double mse = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) mse += (da[i] - db[i]) * (da[i] - db[i]);
  mse /= static_cast<double>(da.size());
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(p * p / mse);
}

double ssim(const Latent& a, const Latent& b, const SsimParams& params) {
  if (!a.same_shape(b)) throw ShapeError("ssim: shape mismatch");
  const int L = a.tokens();
  const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(L))));
  if (g * g != L) throw ShapeError("ssim: token count " + std::to_string(L) + " is not a square grid");
  int w = std::min(params.window, g);
  if (w % 2 == 0) --w;
  if (w < 1) throw DomainError("ssim: window must be at least 1");

  double peak;
  if (params.peak) {
    if (!(*params.peak > 0.0)) throw DomainError("ssim: peak must be positive");
    peak = *params.peak;
  } else {
    auto [lo, hi] = std::minmax_element(a.data().begin(), a.data().end());
    peak = *hi - *lo;
    if (!(peak > 0.0)) peak = 1.0;
  }
  const double c1 = (params.k1 * peak) * (params.k1 * peak);
  const double c2 = (params.k2 * peak) * (params.k2 * peak);

  std::vector<double> kernel(static_cast<std::size_t>(w) * w);
  const int r = w / 2;
  double ksum = 0.0;
  for (int y = 0; y < w; ++y)
    for (int x = 0; x < w; ++x) {
      const double d2 = static_cast<double>((y - r) * (y - r) + (x - r) * (x - r));
      kernel[y * w + x] = std::exp(-d2 / (2.0 * params.sigma * params.sigma));
      ksum += kernel[y * w + x];
    }
  for (double& k : kernel) k /= ksum;

  double total = 0.0;
  int maps = 0;
  for (int bi = 0; bi < a.batch(); ++bi)
    for (int c = 0; c < a.channels(); ++c) {
      double acc = 0.0;
      int windows = 0;
      for (int oy = 0; oy + w <= g; ++oy)
        for (int ox = 0; ox + w <= g; ++ox) {
          double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
          for (int y = 0; y < w; ++y)
            for (int x = 0; x < w; ++x) {
              const int tok = (oy + y) * g + (ox + x);
              const double k = kernel[y * w + x];
              const double va = a.at(bi, tok, c);
              const double vb = b.at(bi, tok, c);
              ma += k * va;
              mb += k * vb;
              saa += k * va * va;
              sbb += k * vb * vb;
              sab += k * va * vb;
            }
          const double var_a = saa - ma * ma;
          const double var_b = sbb - mb * mb;
          const double cov = sab - ma * mb;
          acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
          ++windows;
        }
      total += acc / windows;
      ++maps;
    }
  return total / maps;
}

std::vector<double> per_step_distance(const Trajectory& a, const Trajectory& b) {
  if (a.states.size() != b.states.size()) throw ShapeError("trajectory lengths differ");
  std::vector<double> d(a.states.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = l2_distance(a.states[i], b.states[i]);
  return d;
}

double trajectory_deviation(const Trajectory& a, const Trajectory& b) {
  const auto d = per_step_distance(a, b);
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

}  // namespace adaedit
