#include "adaedit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "adaedit/csv.hpp"
#include "adaedit/diagnostics.hpp"
#include "adaedit/errors.hpp"

namespace adaedit {

ScheduleParams EditConfig::schedule_params() const {
  return ScheduleParams{schedule, total_steps, injection_steps, sharpness, midpoint, activity_threshold};
}

void validate(const EditConfig& cfg) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError(field + ": " + why);
  };
  if (cfg.total_steps < 1) fail("total_steps", "must be >= 1");
  if (cfg.injection_steps < 1) fail("injection_steps", "must be >= 1");
  if (cfg.injection_steps > cfg.total_steps) fail("injection_steps", "must not exceed total_steps");
  if (!(cfg.sharpness > 0.0) || !std::isfinite(cfg.sharpness)) fail("sharpness", "must be positive");
  if (!(cfg.midpoint > 0.0 && cfg.midpoint < 1.0)) fail("midpoint", "must lie in (0, 1)");
  if (!(cfg.activity_threshold >= 0.0 && cfg.activity_threshold < 1.0))
    fail("activity_threshold", "must lie in [0, 1)");
  if (!(cfg.delta_base >= 0.0 && cfg.delta_base <= 1.0)) fail("delta_base", "must lie in [0, 1]");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) fail("alpha", "must lie in [0, 1]");
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) fail("tau", "must be positive");
  if (cfg.soft_mask_gamma && !(*cfg.soft_mask_gamma > 0.0)) fail("soft_mask_gamma", "must be positive");
  // w_layer must stay positive at layer 0: 1 - beta/2 > 0.
  if (!(cfg.layer_ratio_beta >= 0.0 && cfg.layer_ratio_beta < 2.0))
    fail("layer_ratio_beta", "must lie in [0, 2)");
  const auto& m = cfg.model;
  if (m.layers < 1) fail("model.layers", "must be >= 1");
  if (m.embed_dim < 1) fail("model.embed_dim", "must be >= 1");
  if (m.heads < 1 || m.embed_dim % m.heads != 0) fail("model.heads", "must divide model.embed_dim");
  if (m.img_tokens < 1) fail("model.img_tokens", "must be >= 1");
  if (m.text_tokens < 1) fail("model.text_tokens", "must be >= 1");
  if (m.channels < 1) fail("model.channels", "must be >= 1");
  if (m.vocab < 1) fail("model.vocab", "must be >= 1");
  if (m.time_frequencies < 1) fail("model.time_frequencies", "must be >= 1");
}

Latent synthetic_source(int batch, int tokens, int channels, std::uint64_t seed) {
  Latent z(batch, tokens, channels);
  SeededRng rng(seed);
  const int g = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(tokens)))));
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < channels; ++c) {
      const double offset = 1.5 * (rng.uniform() - 0.5);
      double amp[3], fx[3], fy[3], ph[3];
      for (int k = 0; k < 3; ++k) {
        amp[k] = 0.3 + 0.7 * rng.uniform();
        fx[k] = 2.0 * std::numbers::pi * rng.uniform() / g * 1.5;
        fy[k] = 2.0 * std::numbers::pi * rng.uniform() / g * 1.5;
        ph[k] = 2.0 * std::numbers::pi * rng.uniform();
      }
      for (int l = 0; l < tokens; ++l) {
        const double x = l % g;
        const double y = l / g;
        double v = offset;
        for (int k = 0; k < 3; ++k) v += amp[k] * std::sin(fx[k] * x + fy[k] * y + ph[k]);
        z.at(b, l, c) = v;
      }
    }
  return z;
}

namespace {

void check_source(const Latent& source, const EditConfig& cfg) {
  if (source.tokens() != cfg.model.img_tokens || source.channels() != cfg.model.channels)
    throw ShapeError("source latent shape does not match the model dimensions");
}

template <class F>
auto in_phase(const char* phase, F&& f) {
  try {
    return f();
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(phase) + ": " + e.what(), e.step());
  }
}

}  // namespace

EditResult run_edit(const Latent& source, const Conditioning& c_src, const Conditioning& c_tgt,
                    const EditConfig& cfg) {
  validate(cfg);
  check_source(source, cfg);
  const ToyAttentionFlow model(cfg.model);
  model.validate(c_src);
  model.validate(c_tgt);

  const int B = source.batch();
  const int T = cfg.total_steps;
  const int layers = cfg.model.layers;

  EditResult res;

  // z_rand is drawn first so the stream does not depend on later phases.
  SeededRng rng(cfg.seed);
  const Latent z_rand = sample_gaussian(rng, B, source.tokens(), source.channels());
  const InjectionSchedule schedule(cfg.schedule_params());
  const TimeGrid grid = TimeGrid::uniform(T);
  const LayerRatioProfile profile{layers, cfg.layer_ratio_beta};

  // Phase 1: inversion, caching K/V at every step's first evaluation and
  // accumulating keyword attention on active steps.
  AttentionRecord attention(cfg.model.text_tokens, cfg.model.img_tokens);
  HookProvider record = [&](int step, int stage) {
    InjectionHooks h;
    if (stage != 0) return h;
    h.mode = HookMode::kRecord;
    h.cache = &res.recorded_cache;
    h.step = step;
    if (schedule.is_active(step)) h.attention = &attention;
    return h;
  };
  res.inversion = in_phase("inversion", [&] {
    return integrate_backward(model, source, grid, cfg.solver, c_src, record);
  });
  res.inverted = res.inversion.states.front();

  const Conditioning& keyword_cond = cfg.mask_keyword == MaskKeyword::kTarget ? c_tgt : c_src;
  res.mask = extract_mask(model, attention, keyword_cond, cfg.soft_mask_gamma);
  IndexSet region = res.mask.hard;
  if (region.empty()) {
    region = all_tokens(source.tokens());
    res.warnings.push_back("empty edit region: perturbing all tokens");
  }

  // Phase 2: perturbation inside the edit region.
  if (cfg.perturbation == PerturbationMode::kChannelSelective) {
    ShiftResult shift = latents_shift_channel_selective(
        res.inverted, z_rand, PerturbationConfig{cfg.alpha, cfg.tau, cfg.perturbation}, region);
    res.perturbed = std::move(shift.shifted);
    res.channel_weights = std::move(shift.weights);
    res.channel_gaps = std::move(shift.gaps);
    res.blend_weights = std::move(shift.blend);
  } else {
    res.perturbed = latents_shift_uniform(res.inverted, z_rand, cfg.alpha, region);
    res.channel_gaps = channel_gap(res.inverted, z_rand, region);
    res.channel_weights = ChannelWeights{std::vector<double>(source.channels(), 1.0), cfg.tau};
    res.blend_weights.assign(source.channels(), cfg.alpha);
  }

  // Phase 3: sampling with the scheduled injection.
  std::set<int> active;
  for (int i = 0; i < T; ++i) {
    const double w = schedule.weight(i);
    const bool on = schedule.is_active(i);
    res.schedule_trace.push_back({w, cfg.delta_base * w, on});
    if (on) active.insert(i);
  }
  KVCache injection_cache = res.recorded_cache.subset(active);
  res.cached_steps = injection_cache.steps();

  HookProvider inject = [&](int step, int) {
    InjectionHooks h;
    if (!schedule.is_active(step)) return h;
    const double ratio = schedule.injected_ratio(cfg.delta_base, step);
    h.mode = HookMode::kInject;
    h.cache = &injection_cache;
    h.step = step;
    h.background_mask = &res.mask;
    h.global_mix = cfg.global_mix;
    h.mix_ratios.resize(layers);
    for (int l = 0; l < layers; ++l) h.mix_ratios[l] = layer_ratio(profile, ratio, l);
    res.injected_steps.insert(step);
    return h;
  };
  res.sampling = in_phase("sampling", [&] {
    return integrate_forward(model, res.perturbed, grid, cfg.solver, c_tgt, inject);
  });
  res.edited = res.sampling.states.back();

  res.reconstructed_source = in_phase("reconstruction", [&] {
    return integrate_forward(model, res.inverted, grid, cfg.solver, c_src).states.back();
  });

  // Diagnostics.
  JumpProbe probe{&res.mask, cfg.global_mix, {}};
  for (int l = 0; l < layers; ++l) probe.layer_scale.push_back(layer_multiplier(profile, l));
  res.step_jumps.assign(T, 0.0);
  for (int i = 1; i < T; ++i) {
    res.step_jumps[i] = velocity_jump_between(
        model, res.sampling.states[i], grid.time(i), c_tgt, res.recorded_cache, i,
        schedule.injected_ratio(cfg.delta_base, i - 1), schedule.injected_ratio(cfg.delta_base, i), probe);
  }

  auto& d = res.diagnostics;
  d["max_step_delta"] = max_step_delta(schedule, cfg.delta_base);
  d["velocity_jump"] = *std::max_element(res.step_jumps.begin(), res.step_jumps.end());
  d["evals"] = res.inversion.velocity_evals + res.sampling.velocity_evals;
  d["psnr"] = psnr(*res.reconstructed_source, res.edited);
  const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(source.tokens()))));
  if (g * g == source.tokens()) {
    d["ssim"] = ssim(*res.reconstructed_source, res.edited);
  } else {
    d["ssim"] = std::nan("");
    res.warnings.push_back("ssim skipped: token count is not a square grid");
  }
  d["mask_tokens"] = static_cast<double>(res.mask.hard.size());
  d["cached_steps"] = static_cast<double>(res.cached_steps.size());
  d["channel_weight_variance"] = population_variance(res.channel_weights.alpha);
  return res;
}

Latent run_reconstruction(const Latent& source, const Conditioning& c_src, const EditConfig& cfg) {
  validate(cfg);
  check_source(source, cfg);
  const ToyAttentionFlow model(cfg.model);
  const TimeGrid grid = TimeGrid::uniform(cfg.total_steps);
  const Latent z_inv = in_phase("inversion", [&] {
    return integrate_backward(model, source, grid, cfg.solver, c_src).states.front();
  });
  return in_phase("sampling", [&] {
    return integrate_forward(model, z_inv, grid, cfg.solver, c_src).states.back();
  });
}

RunSummary summarize(const std::string& run_id, const EditConfig& cfg, const EditResult& r) {
  RunSummary s;
  s.run_id = run_id;
  s.schedule = std::string(to_string(cfg.schedule));
  s.total_steps = cfg.total_steps;
  s.injection_steps = cfg.injection_steps;
  s.delta_base = cfg.delta_base;
  s.alpha = cfg.alpha;
  s.tau = cfg.tau;
  s.solver = std::string(to_string(cfg.solver));
  s.psnr = r.diagnostics.at("psnr");
  s.ssim = r.diagnostics.at("ssim");
  s.max_step_delta = r.diagnostics.at("max_step_delta");
  s.velocity_jump = r.diagnostics.at("velocity_jump");
  s.evals = static_cast<int>(r.diagnostics.at("evals"));
  s.channel_alpha = r.channel_weights.alpha;
  return s;
}

void write_summary_header(std::ostream& os) {
  os << "run_id,schedule,T,T_inj,delta_base,alpha,tau,solver,psnr,ssim,max_step_delta,velocity_jump,evals\n";
}

void write_summary_row(std::ostream& os, const RunSummary& s) {
  os << s.run_id << ',' << s.schedule << ',' << s.total_steps << ',' << s.injection_steps << ','
     << csv::format(s.delta_base) << ',' << csv::format(s.alpha) << ',' << csv::format(s.tau) << ','
     << s.solver << ',' << csv::format(s.psnr) << ',' << csv::format(s.ssim) << ','
     << csv::format(s.max_step_delta) << ',' << csv::format(s.velocity_jump) << ',' << s.evals << '\n';
}

}  // namespace adaedit
