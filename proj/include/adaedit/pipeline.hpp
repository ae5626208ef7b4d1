#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adaedit/latent.hpp"
#include "adaedit/perturbation.hpp"
#include "adaedit/schedules.hpp"
#include "adaedit/solvers.hpp"
#include "adaedit/velocity.hpp"

namespace adaedit {

enum class MaskKeyword { kSource, kTarget };

struct EditConfig {
  int total_steps = 15;
  int injection_steps = 4;
  ScheduleFamily schedule = ScheduleFamily::kSigmoid;
  double sharpness = 5.0;
  double midpoint = 0.7;
  double activity_threshold = 0.05;
  double delta_base = 0.9;
  double alpha = 0.25;
  double tau = 1.0;
  SolverKind solver = SolverKind::kReuseVelocity;
  PerturbationMode perturbation = PerturbationMode::kChannelSelective;
  std::optional<double> soft_mask_gamma;
  double layer_ratio_beta = 0.0;
  bool global_mix = false;
  MaskKeyword mask_keyword = MaskKeyword::kTarget;
  std::uint64_t seed = 0;
  ToyModelConfig model;

  ScheduleParams schedule_params() const;
};

/// Throws ConfigError naming the offending field.
void validate(const EditConfig& cfg);

struct ScheduleTraceEntry {
  double weight = 0.0;
  double delta_eff = 0.0;
  bool active = false;
};

struct EditResult {
  Latent edited;
  std::optional<Latent> reconstructed_source;
  Latent inverted;
  Latent perturbed;
  EditMask mask;
  ChannelWeights channel_weights;
  std::vector<double> channel_gaps;
  std::vector<double> blend_weights;
  std::vector<ScheduleTraceEntry> schedule_trace;
  std::map<std::string, double> diagnostics;
  std::vector<std::string> warnings;

  Trajectory inversion;
  Trajectory sampling;
  /// K/V recorded at every inversion step; the injection cache is the subset
  /// on active steps.
  KVCache recorded_cache;
  std::set<int> cached_steps;
  std::set<int> injected_steps;
  /// step_jumps[i]: velocity change at sampling step i caused by moving from
  /// step i-1's injected ratio to step i's (0 for i = 0).
  std::vector<double> step_jumps;
};

/// Seeded smooth per-channel fields on the token grid, standing in for an
/// encoded image. Each channel is a sum of three random plane waves plus a
/// channel offset.
Latent synthetic_source(int batch, int tokens, int channels, std::uint64_t seed);

/// Inversion with caching and mask extraction, channel-selective
/// perturbation, then sampling with scheduled injection.
EditResult run_edit(const Latent& source, const Conditioning& c_src, const Conditioning& c_tgt,
                    const EditConfig& cfg);

/// Inversion then plain sampling under the source prompt.
Latent run_reconstruction(const Latent& source, const Conditioning& c_src, const EditConfig& cfg);

struct RunSummary {
  std::string run_id;
  std::string schedule;
  int total_steps = 0;
  int injection_steps = 0;
  double delta_base = 0.0;
  double alpha = 0.0;
  double tau = 0.0;
  std::string solver;
  double psnr = 0.0;
  double ssim = 0.0;
  double max_step_delta = 0.0;
  double velocity_jump = 0.0;
  int evals = 0;
  std::vector<double> channel_alpha;
};

RunSummary summarize(const std::string& run_id, const EditConfig& cfg, const EditResult& r);

/// `run_id,schedule,T,T_inj,delta_base,alpha,tau,solver,psnr,ssim,max_step_delta,velocity_jump,evals`
void write_summary_header(std::ostream& os);
void write_summary_row(std::ostream& os, const RunSummary& s);

}  // namespace adaedit
