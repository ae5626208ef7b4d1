#pragma once

#include <functional>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "adaedit/latent.hpp"
#include "adaedit/velocity.hpp"

namespace adaedit {

enum class SolverKind { kEuler, kMidpoint, kReuseVelocity };

std::string_view to_string(SolverKind k);
SolverKind parse_solver_kind(std::string_view name);

/// Strictly increasing times with t_0 = 0 and t_T = 1.
class TimeGrid {
 public:
  static TimeGrid uniform(int steps);
  /// Throws ConfigError unless strictly increasing from exactly 0 to exactly 1.
  explicit TimeGrid(std::vector<double> times);

  int steps() const noexcept { return static_cast<int>(t_.size()) - 1; }
  double time(int i) const { return t_.at(i); }
  double width(int i) const { return t_.at(i + 1) - t_.at(i); }
  const std::vector<double>& times() const noexcept { return t_; }

 private:
  std::vector<double> t_;
};

/// states[i] is the state at grid time t_i for both directions;
/// evals_after[i] is the cumulative model-evaluation count when states[i]
/// became available.
struct Trajectory {
  std::vector<Latent> states;
  std::vector<int> evals_after;
  int velocity_evals = 0;

  const Latent& initial_forward() const { return states.front(); }
  const Latent& final_forward() const { return states.back(); }
};

/// Hooks for the `stage`-th model evaluation performed inside grid step
/// `step` (stage 0 is the first evaluation of that step).
using HookProvider = std::function<InjectionHooks(int step, int stage)>;

/// State norm above which integration aborts.
inline constexpr double kDivergenceNorm = 1e6;

Trajectory integrate_forward(const VelocityField& v, const Latent& z0, const TimeGrid& grid,
                             SolverKind kind, const Conditioning& cond,
                             const HookProvider& hooks = {});

/// Integrates from t = 1 down to t = 0. Step i covers [t_i, t_{i+1}] and is
/// visited in the order T-1, ..., 0.
Trajectory integrate_backward(const VelocityField& v, const Latent& z1, const TimeGrid& grid,
                              SolverKind kind, const Conditioning& cond,
                              const HookProvider& hooks = {});

/// Sampling-step index under which inversion position `inversion_step`
/// caches: both traverse [t_i, t_{i+1}], so the map is the identity.
int step_index_map(const TimeGrid& grid, int inversion_step);

/// Least-squares slope of log(error) against log(h) for h = 1/T.
double fitted_order(const std::vector<int>& steps, const std::vector<double>& errors);

/// CSV `step,t,norm,eval_count`.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const TimeGrid& grid);

}  // namespace adaedit
