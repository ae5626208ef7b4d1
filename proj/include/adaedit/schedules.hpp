#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace adaedit {

enum class ScheduleFamily { kSigmoid, kCosine, kLinear, kBinary };

std::string_view to_string(ScheduleFamily f);
/// Throws ConfigError for unknown names.
ScheduleFamily parse_schedule_family(std::string_view name);

struct ScheduleParams {
  ScheduleFamily family = ScheduleFamily::kSigmoid;
  int total_steps = 15;
  int injection_steps = 4;
  double sharpness = 5.0;            // sigmoid k
  double midpoint = 0.7;             // sigmoid m
  double activity_threshold = 0.05;  // epsilon
};

/// Per-step injection weights over the sampling trajectory. Weights are
/// evaluated once at the discrete step indices 0..T-1 and then looked up.
class InjectionSchedule {
 public:
  explicit InjectionSchedule(const ScheduleParams& params);

  const ScheduleParams& params() const noexcept { return p_; }
  ScheduleFamily family() const noexcept { return p_.family; }
  int total_steps() const noexcept { return p_.total_steps; }
  int injection_steps() const noexcept { return p_.injection_steps; }
  const std::vector<double>& weights() const noexcept { return w_; }

  double weight(int step) const;
  /// Binary ignores epsilon: active iff step < T_inj.
  bool is_active(int step) const;
  /// delta_base * w(step); delta_base must lie in [0, 1].
  double effective_ratio(double delta_base, int step) const;
  /// Like effective_ratio but 0 on inactive steps. This is the ratio the
  /// sampler actually injects with.
  double injected_ratio(double delta_base, int step) const;

 private:
  void check_step(int step) const;

  ScheduleParams p_;
  std::vector<double> w_;
};

/// Closed-form weight of one family at a step; the schedule table is built
/// from this.
double evaluate_schedule(const ScheduleParams& p, int step);

double schedule_weight(const InjectionSchedule& s, int step);
double effective_ratio(const InjectionSchedule& s, double delta_base, int step);
bool is_active(const InjectionSchedule& s, int step);

/// Largest change of the injected ratio between consecutive steps.
/// Returns 0 when T < 2.
double max_step_delta(const InjectionSchedule& s, double delta_base);

/// Depth-dependent multiplier w_layer(l) = 1 + slope * (l/(n-1) - 0.5).
struct LayerRatioProfile {
  int layer_count = 1;
  double slope = 0.0;
};

double layer_multiplier(const LayerRatioProfile& p, int layer);
/// clamp(ratio * w_layer(l), 0, 1)
double layer_ratio(const LayerRatioProfile& p, double ratio, int layer);

/// CSV `step,weight,active`.
void write_schedule_csv(std::ostream& os, const InjectionSchedule& s);

}  // namespace adaedit
