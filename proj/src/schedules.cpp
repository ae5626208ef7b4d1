#include "adaedit/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "adaedit/csv.hpp"
#include "adaedit/errors.hpp"

namespace adaedit {

std::string_view to_string(ScheduleFamily f) {
  switch (f) {
    case ScheduleFamily::kSigmoid: return "sigmoid";
    case ScheduleFamily::kCosine: return "cosine";
    case ScheduleFamily::kLinear: return "linear";
    case ScheduleFamily::kBinary: return "binary";
  }
  return "unknown";
}

ScheduleFamily parse_schedule_family(std::string_view name) {
  if (name == "sigmoid") return ScheduleFamily::kSigmoid;
  if (name == "cosine") return ScheduleFamily::kCosine;
  if (name == "linear") return ScheduleFamily::kLinear;
  if (name == "binary") return ScheduleFamily::kBinary;
  throw ConfigError("schedule: unknown family '" + std::string(name) + "'");
}

double evaluate_schedule(const ScheduleParams& p, int step) {
  const double ratio = static_cast<double>(step) / p.injection_steps;
  switch (p.family) {
    case ScheduleFamily::kSigmoid:
      return 1.0 / (1.0 + std::exp(p.sharpness * (ratio - p.midpoint)));
    case ScheduleFamily::kCosine:
      return 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(ratio, 1.0)));
    case ScheduleFamily::kLinear:
      return std::max(1.0 - ratio, 0.0);
    case ScheduleFamily::kBinary:
      return step < p.injection_steps ? 1.0 : 0.0;
  }
  return 0.0;
}

InjectionSchedule::InjectionSchedule(const ScheduleParams& params) : p_(params) {
  if (p_.total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (p_.injection_steps < 1 || p_.injection_steps > p_.total_steps)
    throw ConfigError("injection_steps must lie in [1, total_steps]");
  if (p_.family == ScheduleFamily::kSigmoid) {
    if (!(p_.sharpness > 0.0) || !std::isfinite(p_.sharpness))
      throw ConfigError("sharpness must be positive");
    if (!(p_.midpoint > 0.0 && p_.midpoint < 1.0)) throw ConfigError("midpoint must lie in (0, 1)");
  }
  if (!(p_.activity_threshold >= 0.0 && p_.activity_threshold < 1.0))
    throw ConfigError("activity_threshold must lie in [0, 1)");
  w_.resize(p_.total_steps);
  for (int i = 0; i < p_.total_steps; ++i) w_[i] = evaluate_schedule(p_, i);
}

void InjectionSchedule::check_step(int step) const {
  if (step < 0 || step >= p_.total_steps)
    throw IndexError("schedule step " + std::to_string(step) + " out of range");
}

double InjectionSchedule::weight(int step) const {
  check_step(step);
  return w_[step];
}

bool InjectionSchedule::is_active(int step) const {
  check_step(step);
  if (p_.family == ScheduleFamily::kBinary) return step < p_.injection_steps;
  return w_[step] > p_.activity_threshold;
}

double InjectionSchedule::effective_ratio(double delta_base, int step) const {
  if (!(delta_base >= 0.0 && delta_base <= 1.0)) throw DomainError("delta_base must lie in [0, 1]");
  return delta_base * weight(step);
}

double InjectionSchedule::injected_ratio(double delta_base, int step) const {
  const double r = effective_ratio(delta_base, step);
  return is_active(step) ? r : 0.0;
}

double schedule_weight(const InjectionSchedule& s, int step) { return s.weight(step); }

double effective_ratio(const InjectionSchedule& s, double delta_base, int step) {
  return s.effective_ratio(delta_base, step);
}

bool is_active(const InjectionSchedule& s, int step) { return s.is_active(step); }

double max_step_delta(const InjectionSchedule& s, double delta_base) {
  double best = 0.0;
  for (int i = 0; i + 1 < s.total_steps(); ++i)
    best = std::max(best, std::abs(s.injected_ratio(delta_base, i + 1) - s.injected_ratio(delta_base, i)));
  return best;
}

double layer_multiplier(const LayerRatioProfile& p, int layer) {
  if (layer < 0 || layer >= p.layer_count)
    throw IndexError("layer " + std::to_string(layer) + " out of range");
  if (p.layer_count == 1) return 1.0;
  return 1.0 + p.slope * (static_cast<double>(layer) / (p.layer_count - 1) - 0.5);
}

double layer_ratio(const LayerRatioProfile& p, double ratio, int layer) {
  return std::clamp(ratio * layer_multiplier(p, layer), 0.0, 1.0);
}

void write_schedule_csv(std::ostream& os, const InjectionSchedule& s) {
  os << "step,weight,active\n";
  for (int i = 0; i < s.total_steps(); ++i)
    os << i << ',' << csv::format(s.weight(i)) << ',' << (s.is_active(i) ? 1 : 0) << '\n';
}

}  // namespace adaedit
