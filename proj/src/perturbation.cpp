#include "adaedit/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "adaedit/csv.hpp"
#include "adaedit/errors.hpp"

namespace adaedit {

namespace {

void check_pair(const Latent& a, const Latent& b) {
  if (!a.same_shape(b)) throw ShapeError("latent shapes differ");
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
}

// Shared by both shift variants so that a channel-selective run with unit
// weights is bitwise the uniform shift.
Latent blend_channels(const Latent& z_inv, const Latent& z_rand, std::span<const double> blend,
                      const IndexSet& tokens) {
  const ChannelStats sx = channel_stats(z_inv, tokens);
  const ChannelStats sy = channel_stats(z_rand, tokens);
  Latent out = z_inv;
  for (int c = 0; c < z_inv.channels(); ++c) {
    const double b = blend[c];
    const double gain = sy.std[c] / (sx.std[c] + kStdEpsilon);
    for (int bi = 0; bi < z_inv.batch(); ++bi)
      for (int t : tokens) {
        const double x = z_inv.at(bi, t, c);
        const double ada = gain * (x - sx.mean[c]) + sy.mean[c];
        out.at(bi, t, c) = b * ada + (1.0 - b) * x;
      }
  }
  return out;
}

}  // namespace

std::string_view to_string(PerturbationMode m) {
  return m == PerturbationMode::kUniform ? "uniform" : "channel_selective";
}

PerturbationMode parse_perturbation_mode(std::string_view name) {
  if (name == "uniform") return PerturbationMode::kUniform;
  if (name == "channel_selective") return PerturbationMode::kChannelSelective;
  throw ConfigError("perturbation: unknown mode '" + std::string(name) + "'");
}

std::vector<double> adain(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw ShapeError("adain: slices must be non-empty and equal length");
  auto stats = [](std::span<const double> v) {
    double mean = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double e : v) ss += (e - mean) * (e - mean);
    return std::pair{mean, std::sqrt(ss / static_cast<double>(v.size()))};
  };
  const auto [mx, sx] = stats(x);
  const auto [my, sy] = stats(y);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sy * (x[i] - mx) / (sx + kStdEpsilon) + my;
  return out;
}

Latent latents_shift_uniform(const Latent& z_inv, const Latent& z_rand, double alpha,
                             const IndexSet& tokens) {
  check_pair(z_inv, z_rand);
  check_alpha(alpha);
  validate_tokens(tokens, z_inv.tokens());
  const std::vector<double> blend(z_inv.channels(), alpha);
  return blend_channels(z_inv, z_rand, blend, tokens);
}

std::vector<double> channel_gap(const Latent& z_inv, const Latent& z_rand, const IndexSet& tokens) {
  check_pair(z_inv, z_rand);
  const auto mi = channel_mean_over(z_inv, tokens);
  const auto mr = channel_mean_over(z_rand, tokens);
  std::vector<double> d(mi.size());
  for (std::size_t c = 0; c < d.size(); ++c) d[c] = std::abs(mi[c] - mr[c]);
  return d;
}

std::vector<double> channel_gap_global(const Latent& z_inv, const Latent& z_rand) {
  return channel_gap(z_inv, z_rand, all_tokens(z_inv.tokens()));
}

ChannelWeights channel_weights(std::span<const double> gaps, double tau) {
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  if (gaps.empty()) throw ShapeError("channel_weights: empty gap vector");
  for (double d : gaps)
    if (!std::isfinite(d)) throw DomainError("channel_weights: non-finite gap");
  const double C = static_cast<double>(gaps.size());
  const double mx = *std::max_element(gaps.begin(), gaps.end());
  std::vector<double> e(gaps.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < gaps.size(); ++c) {
    e[c] = std::exp((gaps[c] - mx) / tau);
    sum += e[c];
  }
  ChannelWeights w{std::vector<double>(gaps.size()), tau};
  // C * e_c / sum keeps equal gaps at exactly 1.
  for (std::size_t c = 0; c < gaps.size(); ++c) w.alpha[c] = C * e[c] / sum;
  return w;
}

ShiftResult latents_shift_channel_selective(const Latent& z_inv, const Latent& z_rand,
                                            const PerturbationConfig& cfg, const IndexSet& tokens) {
  check_pair(z_inv, z_rand);
  check_alpha(cfg.alpha);
  validate_tokens(tokens, z_inv.tokens());
  ShiftResult r;
  r.gaps = channel_gap(z_inv, z_rand, tokens);
  r.weights = channel_weights(r.gaps, cfg.tau);
  r.blend.resize(r.gaps.size());
  for (std::size_t c = 0; c < r.blend.size(); ++c) r.blend[c] = std::min(cfg.alpha * r.weights.alpha[c], 1.0);
  r.shifted = blend_channels(z_inv, z_rand, r.blend, tokens);
  return r;
}

void write_channel_report_csv(std::ostream& os, const ShiftResult& r) {
  os << "channel,d_c,alpha_c,blend_weight\n";
  for (std::size_t c = 0; c < r.gaps.size(); ++c)
    os << c << ',' << csv::format(r.gaps[c]) << ',' << csv::format(r.weights.alpha[c]) << ','
       << csv::format(r.blend[c]) << '\n';
}

double population_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

}  // namespace adaedit
