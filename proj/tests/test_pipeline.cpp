#include <gtest/gtest.h>

#include <cmath>

#include "adaedit/config.hpp"
#include "adaedit/diagnostics.hpp"
#include "adaedit/errors.hpp"
#include "adaedit/pipeline.hpp"

using namespace adaedit;

namespace {

const Conditioning kSrc{{1, 2, 3, 4}, 1};
const Conditioning kTgt{{1, 5, 3, 4}, 1};

Latent source(std::uint64_t seed = 1) { return synthetic_source(1, 16, 8, seed); }

double rel_max_error(const Latent& got, const Latent& ref) {
  double num = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) num = std::max(num, std::abs(got.data()[i] - ref.data()[i]));
  return num / ref.max_abs();
}

EditConfig self_reconstruction_config(int steps) {
  EditConfig cfg;
  cfg.total_steps = steps;
  cfg.injection_steps = steps;
  cfg.schedule = ScheduleFamily::kBinary;
  cfg.delta_base = 1.0;
  cfg.alpha = 0.0;
  cfg.solver = SolverKind::kMidpoint;
  return cfg;
}

}  // namespace

TEST(Pipeline, SelfReconstructionWithFullInjection) {
  const Latent src = source();
  const EditResult r = run_edit(src, kSrc, kSrc, self_reconstruction_config(40));
  EXPECT_LT(rel_max_error(r.edited, src), 0.05);
}

TEST(Pipeline, DisabledMachineryIsPlainSampling) {
  EditConfig cfg;
  cfg.alpha = 0.0;
  cfg.delta_base = 0.0;
  const EditResult r = run_edit(source(), kSrc, kTgt, cfg);
  EXPECT_EQ(r.perturbed, r.inverted);
  const ToyAttentionFlow model(cfg.model);
  const Trajectory plain =
      integrate_forward(model, r.inverted, TimeGrid::uniform(cfg.total_steps), cfg.solver, kTgt);
  EXPECT_EQ(r.edited, plain.final_forward());
}

TEST(Pipeline, Deterministic) {
  const EditConfig cfg;
  const EditResult a = run_edit(source(), kSrc, kTgt, cfg);
  const EditResult b = run_edit(source(), kSrc, kTgt, cfg);
  EXPECT_EQ(a.edited, b.edited);
  EXPECT_EQ(a.perturbed, b.perturbed);
  EXPECT_EQ(a.mask.soft, b.mask.soft);
  EXPECT_EQ(a.diagnostics, b.diagnostics);
  EXPECT_EQ(a.channel_weights.alpha, b.channel_weights.alpha);
}

TEST(Pipeline, SeedChangesEdit) {
  EditConfig cfg;
  const EditResult a = run_edit(source(), kSrc, kTgt, cfg);
  cfg.seed = 9;
  const EditResult b = run_edit(source(), kSrc, kTgt, cfg);
  EXPECT_NE(a.edited, b.edited);
}

TEST(Pipeline, InjectionWindowMatchesCache) {
  SeededRng rng(42);
  const ScheduleFamily families[] = {ScheduleFamily::kSigmoid, ScheduleFamily::kCosine,
                                     ScheduleFamily::kLinear, ScheduleFamily::kBinary};
  for (int trial = 0; trial < 6; ++trial) {
    EditConfig cfg;
    cfg.total_steps = 3 + static_cast<int>(rng.uniform() * 10);
    cfg.injection_steps = 1 + static_cast<int>(rng.uniform() * cfg.total_steps);
    cfg.schedule = families[trial % 4];
    cfg.solver = static_cast<SolverKind>(trial % 3);
    cfg.delta_base = rng.uniform();
    const EditResult r = run_edit(source(trial + 2), kSrc, kTgt, cfg);
    EXPECT_EQ(r.cached_steps, r.injected_steps) << "trial " << trial;
  }
}

TEST(Pipeline, ScheduleTraceMatchesSchedule) {
  const EditConfig cfg;
  const EditResult r = run_edit(source(), kSrc, kTgt, cfg);
  const InjectionSchedule s(cfg.schedule_params());
  ASSERT_EQ(r.schedule_trace.size(), static_cast<std::size_t>(cfg.total_steps));
  for (int i = 0; i < cfg.total_steps; ++i) {
    EXPECT_EQ(r.schedule_trace[i].weight, schedule_weight(s, i));
    EXPECT_EQ(r.schedule_trace[i].delta_eff, cfg.delta_base * schedule_weight(s, i));
    EXPECT_EQ(r.schedule_trace[i].active, is_active(s, i));
  }
}

TEST(Pipeline, ChannelWeightsHaveMeanOne) {
  for (double tau : {0.25, 1.0, 4.0}) {
    EditConfig cfg;
    cfg.tau = tau;
    const EditResult r = run_edit(source(), kSrc, kTgt, cfg);
    double mean = 0.0;
    for (double a : r.channel_weights.alpha) mean += a;
    EXPECT_NEAR(mean / r.channel_weights.alpha.size(), 1.0, 1e-9);
  }
}

TEST(Pipeline, StrongerInjectionStaysCloserToSource) {
  double prev = std::numeric_limits<double>::infinity();
  for (double delta : {0.0, 0.45, 0.9}) {
    EditConfig cfg;
    cfg.delta_base = delta;
    const EditResult r = run_edit(source(), kSrc, kTgt, cfg);
    const double d = l2_distance(r.edited, *r.reconstructed_source);
    EXPECT_LE(d, prev) << "delta " << delta;
    prev = d;
  }
}

TEST(Pipeline, BinaryCutoffJumpMatchesDirectEvaluation) {
  EditConfig cfg;
  cfg.schedule = ScheduleFamily::kBinary;
  const EditResult r = run_edit(source(), kSrc, kTgt, cfg);
  const int n = cfg.injection_steps;
  const ToyAttentionFlow model(cfg.model);
  const double t = TimeGrid::uniform(cfg.total_steps).time(n);
  const Latent& z = r.sampling.states[n];

  KVCache cache = r.recorded_cache;
  InjectionHooks h;
  h.mode = HookMode::kInject;
  h.cache = &cache;
  h.step = n;
  h.background_mask = &r.mask;
  h.mix_ratios.assign(cfg.model.layers, cfg.delta_base);
  const Latent injected = model.evaluate(z, t, kTgt, h);
  const Latent plain = model.evaluate(z, t, kTgt, {});
  EXPECT_EQ(r.step_jumps[n], l2_distance(injected, plain));
  EXPECT_GT(r.step_jumps[n], 0.0);
}

TEST(Pipeline, BinaryDeviationPeaksAfterCutoff) {
  EditConfig cfg;
  cfg.schedule = ScheduleFamily::kBinary;
  const EditResult bin = run_edit(source(), kSrc, kTgt, cfg);
  cfg.schedule = ScheduleFamily::kSigmoid;
  const EditResult sig = run_edit(source(), kSrc, kTgt, cfg);
  const std::vector<double> d = per_step_distance(bin.sampling, sig.sampling);
  const auto argmax = std::max_element(d.begin(), d.end()) - d.begin();
  EXPECT_GE(argmax, cfg.injection_steps);
}

TEST(Pipeline, ReconstructionImprovesWithSteps) {
  const Latent src = source();
  EditConfig cfg;
  cfg.solver = SolverKind::kEuler;
  double prev = -1.0;
  for (int steps : {5, 15, 45}) {
    cfg.total_steps = steps;
    const double p = psnr(src, run_reconstruction(src, kSrc, cfg));
    EXPECT_GT(p, prev) << steps;
    prev = p;
  }
  cfg.total_steps = 15;
  EXPECT_EQ(run_reconstruction(src, kSrc, cfg), run_reconstruction(src, kSrc, cfg));
}

TEST(Pipeline, UniformModeReportsUnitWeights) {
  EditConfig cfg;
  cfg.perturbation = PerturbationMode::kUniform;
  const EditResult r = run_edit(source(), kSrc, kTgt, cfg);
  for (double a : r.channel_weights.alpha) EXPECT_EQ(a, 1.0);
}

TEST(Pipeline, ValidationNamesField) {
  EditConfig cfg;
  cfg.injection_steps = 20;
  try {
    run_edit(source(), kSrc, kTgt, cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("injection_steps"), std::string::npos);
  }
  EXPECT_THROW(run_edit(synthetic_source(1, 9, 8, 1), kSrc, kTgt, EditConfig{}), ShapeError);
}

TEST(Pipeline, SummaryRow) {
  const EditConfig cfg;
  const EditResult r = run_edit(source(), kSrc, kTgt, cfg);
  const RunSummary s = summarize("run_000", cfg, r);
  EXPECT_EQ(s.evals, 2 * (cfg.total_steps + 1));
  EXPECT_NEAR(s.max_step_delta, 0.263911571564223, 1e-12);
  std::ostringstream os;
  write_summary_header(os);
  EXPECT_EQ(os.str(),
            "run_id,schedule,T,T_inj,delta_base,alpha,tau,solver,psnr,ssim,max_step_delta,velocity_jump,evals\n");
}

TEST(Ablation, ScheduleAxis) {
  const EditConfig base;
  const auto rows = run_ablation_grid(source(), kSrc, kTgt, base, {{"schedule", {"binary", "sigmoid"}}});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].run_id, "run_000");
  EXPECT_DOUBLE_EQ(rows[0].summary.max_step_delta, base.delta_base);
  EXPECT_LT(rows[1].summary.max_step_delta, base.delta_base);
}

TEST(Ablation, TauAxisVarianceNonIncreasing) {
  const auto rows = run_ablation_grid(source(), kSrc, kTgt, EditConfig{}, {{"tau", {0.25, 1.0, 4.0}}});
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i)
    EXPECT_LE(population_variance(rows[i].summary.channel_alpha),
              population_variance(rows[i - 1].summary.channel_alpha) + 1e-15);
}

TEST(Ablation, EmptyAxesGiveBaseRow) {
  const EditConfig base;
  const auto rows = run_ablation_grid(source(), kSrc, kTgt, base, {});
  ASSERT_EQ(rows.size(), 1u);
  const EditResult direct = run_edit(source(), kSrc, kTgt, base);
  EXPECT_EQ(rows[0].summary.psnr, direct.diagnostics.at("psnr"));
}

TEST(Ablation, ProductOrderAndUnknownField) {
  const auto rows = run_ablation_grid(source(), kSrc, kTgt, EditConfig{},
                                      {{"injection_steps", {2, 3}}, {"alpha", {0.0, 0.5}}});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[1].config.injection_steps, 2);
  EXPECT_EQ(rows[1].config.alpha, 0.5);
  EXPECT_EQ(rows[2].config.injection_steps, 3);
  EXPECT_EQ(rows[3].run_id, "run_003");
  EXPECT_THROW(run_ablation_grid(source(), kSrc, kTgt, EditConfig{}, {{"nope", {1}}}), ConfigError);
}

TEST(Config, RoundTripAndHash) {
  RunConfig rc;
  rc.edit.tau = 2.0;
  rc.edit.soft_mask_gamma = 5.0;
  const nlohmann::json j = to_json(rc);
  const RunConfig back = run_config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(config_hash(j), config_hash(nlohmann::json::parse(j.dump(2))));
  EXPECT_EQ(config_hash(j).size(), 16u);
  nlohmann::json k = j;
  apply_override(k, "tau=3");
  EXPECT_NE(config_hash(k), config_hash(j));
  apply_override(k, "model.channels=4");
  EXPECT_EQ(run_config_from_json(k).edit.model.channels, 4);
  apply_override(k, "schedule=cosine");
  EXPECT_EQ(run_config_from_json(k).edit.schedule, ScheduleFamily::kCosine);
}

TEST(Config, RejectsUnknownAndInvalid) {
  EXPECT_THROW(run_config_from_json(nlohmann::json{{"bogus", 1}}), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json{{"tau", -1.0}}), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json{{"schedule", "step"}}), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json{{"total_steps", "ten"}}), ConfigError);
}
