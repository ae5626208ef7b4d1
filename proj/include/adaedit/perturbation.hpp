#pragma once

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "adaedit/latent.hpp"

namespace adaedit {

/// Per-channel perturbation importance, mean-normalized to 1.
struct ChannelWeights {
  std::vector<double> alpha;
  double tau = 1.0;
};

enum class PerturbationMode { kUniform, kChannelSelective };

std::string_view to_string(PerturbationMode m);
PerturbationMode parse_perturbation_mode(std::string_view name);

struct PerturbationConfig {
  double alpha = 0.25;
  double tau = 1.0;
  PerturbationMode mode = PerturbationMode::kChannelSelective;
};

/// sigma_y * (x - mu_x) / (sigma_x + eps) + mu_y over equal-length slices.
std::vector<double> adain(std::span<const double> x, std::span<const double> y);

/// alpha * AdaIN(z_inv, z_rand) + (1 - alpha) * z_inv on the selected tokens,
/// with AdaIN statistics taken over the selection. Other tokens are copied.
Latent latents_shift_uniform(const Latent& z_inv, const Latent& z_rand, double alpha,
                             const IndexSet& tokens);

/// |mean_S(z_inv) - mean_S(z_rand)| per channel.
std::vector<double> channel_gap(const Latent& z_inv, const Latent& z_rand, const IndexSet& tokens);

/// Batch-wide gap over every token. Diagnostic only; the editing path uses
/// the edit-region gap.
std::vector<double> channel_gap_global(const Latent& z_inv, const Latent& z_rand);

/// C * softmax(d / tau).
ChannelWeights channel_weights(std::span<const double> gaps, double tau);

struct ShiftResult {
  Latent shifted;
  ChannelWeights weights;
  std::vector<double> gaps;
  std::vector<double> blend;  // min(alpha * alpha_c, 1)
};

ShiftResult latents_shift_channel_selective(const Latent& z_inv, const Latent& z_rand,
                                            const PerturbationConfig& cfg, const IndexSet& tokens);

/// CSV `channel,d_c,alpha_c,blend_weight`.
void write_channel_report_csv(std::ostream& os, const ShiftResult& r);

double population_variance(std::span<const double> v);

}  // namespace adaedit
